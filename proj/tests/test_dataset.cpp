#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "gaitclone/dataset.hpp"
#include "gaitclone/ini.hpp"
#include "gaitclone/runlog_io.hpp"
#include "support/tmpdir.hpp"

using namespace gaitclone;
using gaitclone::testing::TmpDir;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg = default_config("desk");
  cfg.n_walks = 4;
  cfg.walk_duration = 6.0;
  cfg.seed = 7;
  finalize(cfg);
  return cfg;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("window arithmetic") {
  CHECK(window_count(100, 100, 20) == 1);
  CHECK(window_count(119, 100, 20) == 1);
  CHECK(window_count(120, 100, 20) == 2);
  CHECK(window_count(99, 100, 20) == 0);
  CHECK(window_count(1200, 100, 1) == 1101);
  CHECK(window_count(1200, 100, 20) == 56);
}

TEST_CASE("collection writes one log per walk plus a manifest with roles") {
  const ExperimentConfig cfg = tiny_config();
  TmpDir tmp("collect");
  const CollectSummary sum = collect(cfg, tmp.path());
  CHECK(sum.files.size() == 4);
  CHECK(sum.total_ticks == 4 * 1200);
  REQUIRE(std::filesystem::exists(sum.manifest));

  const Ini manifest = Ini::load(sum.manifest);
  CHECK(manifest.get_int("dataset", "n_files") == 4);
  CHECK(manifest.get("dataset", "config_hash") == cfg.config_hash);
  CHECK(manifest.get("file0", "role") == "train");
  CHECK(manifest.get("file1", "role") == "train");
  CHECK(manifest.get("file2", "role") == "val");
  CHECK(manifest.get("file3", "role") == "test");

  // Per-walk seeds differ; speed scales stay inside the configured band.
  std::set<std::string> seeds;
  for (int i = 0; i < 4; ++i) {
    const std::string sec = "file" + std::to_string(i);
    seeds.insert(manifest.get(sec, "seed"));
    const double scale = manifest.get_double(sec, "speed_scale");
    CHECK(scale >= 1.0 - cfg.walk_speed_var);
    CHECK(scale <= 1.0 + cfg.walk_speed_var);
    CHECK(manifest.get_int(sec, "ticks") == 1200);
  }
  CHECK(seeds.size() == 4);
}

TEST_CASE("loaded tensors mirror the on-disk logs column for column") {
  const ExperimentConfig cfg = tiny_config();
  TmpDir tmp("load");
  collect(cfg, tmp.path());
  const LoadedDataset ds = load_dataset(tmp.path());
  REQUIRE(ds.files.size() == 4);
  CHECK(ds.config_hash == cfg.config_hash);

  const LoadedFile& f = ds.files[0];
  CHECK(f.role == "train");
  CHECK(f.x.rows() == 5);
  CHECK(f.y.rows() == 2);
  CHECK(f.x.cols() == 1200);

  const RunLog log = load_runlog(tmp.path() / f.name);
  REQUIRE(static_cast<Eigen::Index>(log.ticks.size()) == f.x.cols());
  for (Eigen::Index k = 0; k < f.x.cols(); k += 97) {
    const TickRecord& r = log.ticks[static_cast<std::size_t>(k)];
    CHECK(f.x(0, k) == r.e_pk);
    CHECK(f.x(1, k) == r.e_pa);
    CHECK(f.x(2, k) == r.de_pk);
    CHECK(f.x(3, k) == r.de_pa);
    CHECK(f.x(4, k) == r.s);
    CHECK(f.y(0, k) == r.tau_pk);
    CHECK(f.y(1, k) == r.tau_pa);
  }

  // The stance flag is binary and the demonstrator torques respect the clamp.
  for (const auto& file : ds.files) {
    for (Eigen::Index k = 0; k < file.x.cols(); ++k) {
      CHECK((file.x(4, k) == 0.0 || file.x(4, k) == 1.0));
      CHECK(std::abs(file.y(0, k)) <= cfg.gait.tau_max);
      CHECK(std::abs(file.y(1, k)) <= cfg.gait.tau_max);
    }
  }
}

TEST_CASE("collection is deterministic for a fixed seed") {
  const ExperimentConfig cfg = tiny_config();
  TmpDir a("det_a"), b("det_b");
  const CollectSummary sa = collect(cfg, a.path());
  const CollectSummary sb = collect(cfg, b.path());
  REQUIRE(sa.files.size() == sb.files.size());
  for (std::size_t i = 0; i < sa.files.size(); ++i) {
    CHECK(file_bytes(sa.files[i]) == file_bytes(sb.files[i]));
  }
  CHECK(file_bytes(sa.manifest) == file_bytes(sb.manifest));
}

TEST_CASE("window enumeration and batch assembly slice the right columns") {
  const ExperimentConfig cfg = tiny_config();
  TmpDir tmp("windows");
  collect(cfg, tmp.path());
  const LoadedDataset ds = load_dataset(tmp.path());

  const auto train_w = windows_for_role(ds, "train", cfg.seq_len, cfg.stride);
  const auto val_w = windows_for_role(ds, "val", cfg.seq_len, cfg.stride);
  const auto test_w = windows_for_role(ds, "test", cfg.seq_len, cfg.stride);
  CHECK(train_w.size() == 2 * 56);  // two training walks of 1200 ticks
  CHECK(val_w.size() == 56);
  CHECK(test_w.size() == 56);

  const SequenceBatch batch = assemble_batch(ds, train_w, 3, 8, cfg.seq_len);
  REQUIRE(batch.x.size() == static_cast<std::size_t>(cfg.seq_len));
  CHECK(batch.batch_size() == 8);
  CHECK(batch.x[0].rows() == 5);
  CHECK(batch.y[0].rows() == 2);
  for (int t = 0; t < cfg.seq_len; t += 13) {
    for (int b = 0; b < 8; ++b) {
      const Window& w = train_w[3 + static_cast<std::size_t>(b)];
      const LoadedFile& f = ds.files[static_cast<std::size_t>(w.file)];
      CHECK(batch.x[static_cast<std::size_t>(t)](2, b) == f.x(2, w.start + t));
      CHECK(batch.y[static_cast<std::size_t>(t)](1, b) == f.y(1, w.start + t));
    }
  }
}

TEST_CASE("loading an empty or foreign directory fails loudly") {
  TmpDir tmp("none");
  CHECK_THROWS_AS(load_dataset(tmp.path()), std::runtime_error);
}
