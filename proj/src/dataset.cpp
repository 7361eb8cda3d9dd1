#include "gaitclone/dataset.hpp"

#include <cstdio>
#include <stdexcept>

#include "gaitclone/ini.hpp"
#include "gaitclone/runlog_io.hpp"

namespace gaitclone {

std::int64_t window_count(std::int64_t len, int seq_len, int stride) {
  if (seq_len < 1 || stride < 1) throw std::invalid_argument("bad windowing");
  if (len < seq_len) return 0;
  return (len - seq_len) / stride + 1;
}

namespace {

std::string walk_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "walk_%02d.csv", i);
  return buf;
}

std::string role_for(int i, int n_walks) {
  if (i == n_walks - 1) return "test";
  if (i == n_walks - 2) return "val";
  return "train";
}

}  // namespace

CollectSummary collect(const ExperimentConfig& cfg,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Rng master(cfg.seed);

  Ini manifest;
  manifest.set("dataset", "n_files", static_cast<std::int64_t>(cfg.n_walks));
  manifest.set("dataset", "config_hash", cfg.config_hash);
  manifest.set("dataset", "seq_len", static_cast<std::int64_t>(cfg.seq_len));
  manifest.set("dataset", "stride", static_cast<std::int64_t>(cfg.stride));

  CollectSummary out;
  for (int i = 0; i < cfg.n_walks; ++i) {
    const std::uint64_t walk_seed = master.next_u64();
    const double speed_scale =
        1.0 + cfg.walk_speed_var * (2.0 * master.uniform() - 1.0);

    const LoopParams lp = make_loop_params(cfg, "flat", speed_scale);
    RunLogMeta meta;
    meta.controller_id = "pd";
    meta.slope_preset = "flat";
    meta.config_hash = cfg.config_hash;
    const GaitConfig& g = cfg.gait;
    const RunLog log = run_closed_loop(
        [&g](const ControlInput& in) { return pd_control(in, g); }, g, lp,
        cfg.walk_duration, walk_seed, meta);

    const auto path = dir / walk_name(i);
    save_runlog(log, path);
    out.files.push_back(path);
    out.total_ticks += static_cast<std::int64_t>(log.ticks.size());

    const std::string sec = "file" + std::to_string(i);
    manifest.set(sec, "name", walk_name(i));
    manifest.set(sec, "role", role_for(i, cfg.n_walks));
    manifest.set_u64(sec, "seed", walk_seed);
    manifest.set(sec, "speed_scale", speed_scale);
    manifest.set(sec, "ticks", static_cast<std::int64_t>(log.ticks.size()));
  }
  out.manifest = dir / "manifest.ini";
  manifest.save(out.manifest);
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  const auto mpath = dir / "manifest.ini";
  if (!std::filesystem::exists(mpath)) {
    throw std::runtime_error("no dataset manifest at " + mpath.string() +
                             "; run the collect stage first");
  }
  const Ini manifest = Ini::load(mpath);
  const int n = static_cast<int>(manifest.get_int("dataset", "n_files"));

  LoadedDataset ds;
  ds.config_hash = manifest.get_or("dataset", "config_hash", "");
  for (int i = 0; i < n; ++i) {
    const std::string sec = "file" + std::to_string(i);
    LoadedFile f;
    f.name = manifest.get(sec, "name");
    f.role = manifest.get(sec, "role");
    const RunLog log = load_runlog(dir / f.name);
    const auto len = static_cast<Eigen::Index>(log.ticks.size());
    const auto declared = manifest.get_int(sec, "ticks");
    if (declared != len) {
      throw std::runtime_error(f.name + ": manifest declares " +
                               std::to_string(declared) + " ticks, file has " +
                               std::to_string(len));
    }
    f.x.resize(5, len);
    f.y.resize(2, len);
    for (Eigen::Index k = 0; k < len; ++k) {
      const TickRecord& r = log.ticks[static_cast<std::size_t>(k)];
      f.x(0, k) = r.e_pk;
      f.x(1, k) = r.e_pa;
      f.x(2, k) = r.de_pk;
      f.x(3, k) = r.de_pa;
      f.x(4, k) = r.s;
      f.y(0, k) = r.tau_pk;
      f.y(1, k) = r.tau_pa;
    }
    ds.files.push_back(std::move(f));
  }
  return ds;
}

std::vector<Window> windows_for_role(const LoadedDataset& ds,
                                     const std::string& role, int seq_len,
                                     int stride) {
  std::vector<Window> out;
  for (int fi = 0; fi < static_cast<int>(ds.files.size()); ++fi) {
    if (ds.files[fi].role != role) continue;
    const std::int64_t n = window_count(ds.files[fi].x.cols(), seq_len, stride);
    for (std::int64_t w = 0; w < n; ++w) {
      out.push_back({fi, w * stride});
    }
  }
  return out;
}

SequenceBatch assemble_batch(const LoadedDataset& ds,
                             const std::vector<Window>& windows,
                             std::size_t first, std::size_t count,
                             int seq_len) {
  if (first + count > windows.size()) {
    throw std::out_of_range("batch range exceeds window list");
  }
  const auto B = static_cast<Eigen::Index>(count);
  SequenceBatch batch;
  batch.x.assign(static_cast<std::size_t>(seq_len), Eigen::MatrixXd(5, B));
  batch.y.assign(static_cast<std::size_t>(seq_len), Eigen::MatrixXd(2, B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const Window& w = windows[first + static_cast<std::size_t>(b)];
    const LoadedFile& f = ds.files[static_cast<std::size_t>(w.file)];
    for (int t = 0; t < seq_len; ++t) {
      batch.x[static_cast<std::size_t>(t)].col(b) = f.x.col(w.start + t);
      batch.y[static_cast<std::size_t>(t)].col(b) = f.y.col(w.start + t);
    }
  }
  return batch;
}

}  // namespace gaitclone
