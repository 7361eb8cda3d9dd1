#include "gaitclone/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gaitclone {

Adam::Adam(const NetworkParams& shape, double lr, double beta1, double beta2,
           double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for_each_tensor(shape, [this](Eigen::Map<const Eigen::VectorXd> t) {
    m_.push_back(Eigen::VectorXd::Zero(t.size()));
    v_.push_back(Eigen::VectorXd::Zero(t.size()));
  });
}

void Adam::step(NetworkParams& params, const NetworkGrads& grads) {
  // Gather aligned views; parameter and gradient tensors share one layout.
  std::vector<Eigen::Map<Eigen::VectorXd>> ps;
  std::vector<Eigen::Map<const Eigen::VectorXd>> gs;
  for_each_tensor(params,
                  [&ps](Eigen::Map<Eigen::VectorXd> t) { ps.push_back(t); });
  for_each_tensor(grads, [&gs](Eigen::Map<const Eigen::VectorXd> t) {
    gs.push_back(t);
  });
  if (ps.size() != gs.size() || ps.size() != m_.size()) {
    throw std::invalid_argument("optimizer/network shape mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].size() != gs[i].size() || ps[i].size() != m_[i].size()) {
      throw std::invalid_argument("optimizer tensor size mismatch");
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * gs[i];
    v_[i] = (beta2_ * v_[i].array() +
             (1.0 - beta2_) * gs[i].array().square())
                .matrix();
    ps[i].array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

double global_grad_norm(const NetworkGrads& g) {
  double sq = 0.0;
  for_each_tensor(g, [&sq](Eigen::Map<const Eigen::VectorXd> t) {
    sq += t.squaredNorm();
  });
  return std::sqrt(sq);
}

void clip_grad_norm(NetworkGrads& g, double max_norm) {
  const double norm = global_grad_norm(g);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for_each_tensor(g, [scale](Eigen::Map<Eigen::VectorXd> t) { t *= scale; });
}

namespace {

double eval_windows(const NetworkParams& p, const LoadedDataset& ds,
                    const std::vector<Window>& windows, int seq_len,
                    int batch, const ExperimentConfig& cfg, bool use_delta) {
  double acc = 0.0;
  std::int64_t total = 0;
  for (std::size_t first = 0; first < windows.size(); first += batch) {
    const std::size_t count =
        std::min<std::size_t>(batch, windows.size() - first);
    const SequenceBatch b = assemble_batch(ds, windows, first, count, seq_len);
    const std::vector<Eigen::MatrixXd>* y = nullptr;
    ForwardResult fr;
    DeltaForwardResult dr;
    if (use_delta) {
      dr = deltagru_forward(p, b.x, cfg.thresholds);
      y = &dr.y;
    } else {
      fr = gru_forward(p, b.x);
      y = &fr.y;
    }
    acc += l1_loss(*y, b.y) * static_cast<double>(count);
    total += static_cast<std::int64_t>(count);
  }
  if (total == 0) throw std::runtime_error("no windows to evaluate");
  return acc / static_cast<double>(total);
}

struct StageOutcome {
  NetworkParams best;
  double best_val = 0.0;
};

StageOutcome run_stage(const std::string& stage, NetworkParams params,
                       const StageSchedule& sched, const ExperimentConfig& cfg,
                       const LoadedDataset& ds,
                       const std::vector<Window>& train_w,
                       const std::vector<Window>& val_w, bool use_delta,
                       Rng& rng, std::vector<EpochRow>& curve) {
  Adam opt(params, sched.lr, cfg.schedule.adam_beta1, cfg.schedule.adam_beta2,
           cfg.schedule.adam_eps);
  std::vector<std::size_t> order(train_w.size());
  std::iota(order.begin(), order.end(), 0);

  StageOutcome out;
  out.best = params;
  out.best_val = eval_windows(params, ds, val_w, cfg.seq_len, sched.batch, cfg,
                              use_delta);

  std::vector<Window> shuffled(train_w.size());
  for (int epoch = 1; epoch <= sched.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {  // Fisher-Yates
      const std::size_t j =
          static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t i = 0; i < order.size(); ++i) shuffled[i] = train_w[order[i]];

    double train_acc = 0.0;
    std::int64_t seen = 0;
    for (std::size_t first = 0; first < shuffled.size();
         first += sched.batch) {
      const std::size_t count =
          std::min<std::size_t>(sched.batch, shuffled.size() - first);
      const SequenceBatch b =
          assemble_batch(ds, shuffled, first, count, cfg.seq_len);
      NetworkGrads grads;
      double loss = 0.0;
      if (use_delta) {
        const DeltaForwardResult fwd =
            deltagru_forward(params, b.x, cfg.thresholds);
        loss = l1_loss(fwd.y, b.y);
        grads = deltagru_backward(params, fwd, l1_grad(fwd.y, b.y));
      } else {
        const ForwardResult fwd = gru_forward(params, b.x);
        loss = l1_loss(fwd.y, b.y);
        grads = gru_backward(params, fwd, l1_grad(fwd.y, b.y));
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error(stage + " diverged (loss is not finite) at epoch " +
                                 std::to_string(epoch));
      }
      clip_grad_norm(grads, cfg.schedule.clip_norm);
      opt.step(params, grads);
      train_acc += loss * static_cast<double>(count);
      seen += static_cast<std::int64_t>(count);
    }

    const double train_loss = train_acc / static_cast<double>(seen);
    const double val_loss = eval_windows(params, ds, val_w, cfg.seq_len,
                                         sched.batch, cfg, use_delta);
    curve.push_back({stage, epoch, train_loss, val_loss});
    if (val_loss < out.best_val) {
      out.best_val = val_loss;
      out.best = params;
    }
  }
  return out;
}

}  // namespace

double evaluate(const NetworkParams& p, const LoadedDataset& ds,
                const std::string& role, const ExperimentConfig& cfg,
                bool use_delta) {
  const std::vector<Window> w =
      windows_for_role(ds, role, cfg.seq_len, cfg.stride);
  if (w.empty()) {
    throw std::runtime_error("no '" + role + "' windows in dataset");
  }
  return eval_windows(p, ds, w, cfg.seq_len, cfg.schedule.pretrain.batch, cfg,
                      use_delta);
}

TrainResult train(const ExperimentConfig& cfg, const LoadedDataset& ds) {
  const std::vector<Window> train_w =
      windows_for_role(ds, "train", cfg.seq_len, cfg.stride);
  const std::vector<Window> val_w =
      windows_for_role(ds, "val", cfg.seq_len, cfg.stride);
  if (train_w.empty() || val_w.empty()) {
    throw std::runtime_error(
        "dataset has no train or no val windows; run the collect stage with "
        "longer walks or a smaller seq_len");
  }

  Rng rng(cfg.seed ^ 0x747261696eULL);  // decorrelated from collection
  NetworkParams params = init_params(cfg.arch, rng);

  TrainResult result;
  const StageOutcome pre =
      run_stage("pretrain", std::move(params), cfg.schedule.pretrain, cfg, ds,
                train_w, val_w, /*use_delta=*/false, rng, result.curve);
  result.pretrained = pre.best;
  result.best_val_pretrain = pre.best_val;

  // The delta stage resumes from the best clone and re-adapts the weights to
  // the sparse update rule (fresh optimizer state).
  const StageOutcome re =
      run_stage("retrain", pre.best, cfg.schedule.retrain, cfg, ds, train_w,
                val_w, /*use_delta=*/true, rng, result.curve);
  result.retrained = re.best;
  result.best_val_retrain = re.best_val;
  return result;
}

void save_curve(const std::vector<EpochRow>& curve,
                const std::filesystem::path& path,
                const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << "epoch, train_loss, val_loss, stage\n";
  char buf[32];
  for (const EpochRow& r : curve) {
    out << r.epoch << ", ";
    std::snprintf(buf, sizeof buf, "%.17g", r.train_loss);
    out << buf << ", ";
    std::snprintf(buf, sizeof buf, "%.17g", r.val_loss);
    out << buf << ", " << r.stage << "\n";
  }
}

std::vector<EpochRow> load_curve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  do {
    if (!std::getline(in, line)) {
      throw std::runtime_error("empty curve file " + path.string());
    }
  } while (!line.empty() && line[0] == '#');
  if (line.rfind("epoch, train_loss, val_loss, stage", 0) != 0) {
    throw std::runtime_error("unrecognized curve header in " + path.string());
  }
  std::vector<EpochRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    EpochRow r;
    std::string cell;
    std::getline(row, cell, ',');
    r.epoch = std::stoi(cell);
    std::getline(row, cell, ',');
    r.train_loss = std::stod(cell);
    std::getline(row, cell, ',');
    r.val_loss = std::stod(cell);
    if (!std::getline(row, cell, ',')) {
      throw std::runtime_error("short row in " + path.string());
    }
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    r.stage = cell;
    out.push_back(r);
  }
  return out;
}

}  // namespace gaitclone
