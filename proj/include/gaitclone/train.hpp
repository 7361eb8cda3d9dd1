#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gaitclone/dataset.hpp"
#include "gaitclone/rnn.hpp"

namespace gaitclone {

/// Adam with bias correction. Moment buffers follow the canonical tensor
/// order of the network.
class Adam {
 public:
  Adam(const NetworkParams& shape, double lr, double beta1, double beta2,
       double eps);
  void step(NetworkParams& params, const NetworkGrads& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

double global_grad_norm(const NetworkGrads& g);

/// Scales all gradients so their global L2 norm is at most max_norm.
void clip_grad_norm(NetworkGrads& g, double max_norm);

struct EpochRow {
  std::string stage;  // "pretrain" | "retrain"
  int epoch = 0;      // within the stage, starting at 1
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  NetworkParams pretrained;  // best-validation params of the first stage
  NetworkParams retrained;   // best-validation params of the delta stage
  double best_val_pretrain = 0.0;
  double best_val_retrain = 0.0;
  std::vector<EpochRow> curve;
};

/// Mean L1 over every window of the role, evaluated with plain GRU
/// semantics (use_delta = false) or delta semantics at cfg.thresholds.
double evaluate(const NetworkParams& p, const LoadedDataset& ds,
                const std::string& role, const ExperimentConfig& cfg,
                bool use_delta);

/// Stage 1 clones the demonstrator with plain GRU updates; stage 2 continues
/// from the stage-1 best under delta semantics (straight-through masks).
/// Validation picks the best epoch inside each stage.
TrainResult train(const ExperimentConfig& cfg, const LoadedDataset& ds);

/// Writes the per-epoch losses; a non-empty provenance string (config hash,
/// seed) is embedded as a leading comment line.
void save_curve(const std::vector<EpochRow>& curve,
                const std::filesystem::path& path,
                const std::string& provenance = "");
std::vector<EpochRow> load_curve(const std::filesystem::path& path);

}  // namespace gaitclone
