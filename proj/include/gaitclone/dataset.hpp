#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gaitclone/config.hpp"
#include "gaitclone/control.hpp"
#include "gaitclone/rng.hpp"

namespace gaitclone {

/// Number of length-T windows at the given stride in a log of `len` ticks.
std::int64_t window_count(std::int64_t len, int seq_len, int stride);

struct CollectSummary {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
  std::int64_t total_ticks = 0;
};

/// Runs n_walks flat-ground demonstrator walks and writes them plus a
/// manifest under dir. Split: the last two walks become validation and test,
/// everything before them trains. Each walk gets its own seed and a hip-speed
/// scale drawn from 1 +- walk_speed_var.
CollectSummary collect(const ExperimentConfig& cfg,
                       const std::filesystem::path& dir);

/// One walk loaded column-wise: x is 5 x len [e_pk, e_pa, de_pk, de_pa, s],
/// y is 2 x len [tau_pk, tau_pa].
struct LoadedFile {
  std::string name;
  std::string role;  // "train" | "val" | "test"
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
};

struct LoadedDataset {
  std::vector<LoadedFile> files;
  std::string config_hash;
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

/// (file index, start tick) of every window of a given role.
struct Window {
  int file = 0;
  std::int64_t start = 0;
};

std::vector<Window> windows_for_role(const LoadedDataset& ds,
                                     const std::string& role, int seq_len,
                                     int stride);

/// Time-major batch: x[t] is 5 x B, y[t] is 2 x B, t = 0..T-1.
struct SequenceBatch {
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::MatrixXd> y;
  int batch_size() const { return x.empty() ? 0 : static_cast<int>(x[0].cols()); }
};

SequenceBatch assemble_batch(const LoadedDataset& ds,
                             const std::vector<Window>& windows,
                             std::size_t first, std::size_t count, int seq_len);

}  // namespace gaitclone
