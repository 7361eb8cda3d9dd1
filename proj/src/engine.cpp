#include "gaitclone/engine.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace gaitclone {

std::int64_t rshift_rne(std::int64_t v, int n) {
  if (n <= 0) return v;
  const std::int64_t q = v >> n;  // arithmetic shift, rounds toward -inf
  const std::int64_t r = v - (q << n);
  const std::int64_t half = std::int64_t{1} << (n - 1);
  if (r > half || (r == half && (q & 1))) return q + 1;
  return q;
}

std::int16_t quantize_act(double x) {
  const double scaled = std::nearbyint(x * kActScale);  // RNE in default mode
  if (scaled <= -32768.0) return std::int16_t{-32768};
  if (scaled >= 32767.0) return std::int16_t{32767};
  return static_cast<std::int16_t>(scaled);
}

std::int16_t lut_lookup(const std::array<std::int16_t, 257>& lut,
                        std::int32_t q) {
  const std::int32_t u = q + 2048;  // [0, 4095]
  const std::int32_t idx = u >> 4;
  const std::int32_t frac = u & 15;
  const std::int32_t lo = lut[static_cast<std::size_t>(idx)];
  const std::int32_t hi = lut[static_cast<std::size_t>(idx) + 1];
  return static_cast<std::int16_t>(
      lo + rshift_rne(static_cast<std::int64_t>(hi - lo) * frac, 4));
}

namespace {

constexpr std::int64_t kAccLimit = std::numeric_limits<std::int32_t>::max();

int pick_frac_bits(const Eigen::MatrixXd& w, const char* name) {
  const double max_abs = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
  if (!(max_abs < 128.0)) {
    throw std::runtime_error(std::string(name) +
                             ": |weight| >= 128 is unrepresentable in int8 "
                             "(training pathology)");
  }
  for (int f = 7; f >= 0; --f) {
    if (max_abs < static_cast<double>(1 << (7 - f))) return f;
  }
  return 0;  // unreachable: f = 0 covers max_abs < 128
}

std::int8_t quantize_weight(double w, int frac_bits) {
  const double scaled = std::nearbyint(w * static_cast<double>(1 << frac_bits));
  if (scaled <= -128.0) return std::int8_t{-128};
  if (scaled >= 127.0) return std::int8_t{127};
  return static_cast<std::int8_t>(scaled);
}

std::int16_t quantize_bias(double b) { return quantize_act(b); }

void fill_block(Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>& dst,
                Eigen::Index row0, const Eigen::MatrixXd& src, int frac_bits) {
  for (Eigen::Index j = 0; j < src.cols(); ++j) {
    for (Eigen::Index i = 0; i < src.rows(); ++i) {
      dst(row0 + i, j) = quantize_weight(src(i, j), frac_bits);
    }
  }
}

std::int16_t threshold_raw(double theta, const char* name) {
  const double raw = theta * kActScale;
  if (raw != std::floor(raw) || raw < 0.0 || raw > 32767.0) {
    throw std::runtime_error(
        std::string(name) +
        ": threshold must be a non-negative multiple of 1/256 no larger "
        "than 127.996");
  }
  return static_cast<std::int16_t>(raw);
}

/// Per-step accumulator increment bound (the delta stream telescopes to the
/// activation range, so max|delta contribution| is 127 * 32767 per element).
void check_acc_bound(int in, int M, const char* what) {
  const std::int64_t bound =
      static_cast<std::int64_t>(in + M) * 127 * 32767 +
      (std::int64_t{32767} << 7);  // worst-case bias seed at frac_bits 7
  if (bound > kAccLimit) {
    throw std::runtime_error(std::string(what) +
                             ": layer too wide for 32-bit gate accumulators");
  }
}

}  // namespace

QuantModel quantize_model(const NetworkParams& p, const DeltaThresholds& th) {
  QuantModel m;
  m.arch = p.arch;
  m.theta_x_raw = threshold_raw(th.theta_x, "theta_x");
  m.theta_h_raw = threshold_raw(th.theta_h, "theta_h");

  const int M = p.arch.hidden_dim;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& lp = p.layers[l];
    const auto in = lp.W_ir.cols();
    check_acc_bound(static_cast<int>(in), M, "quantize_model");

    QuantLayer q;
    q.Wx.resize(3 * M, in);
    q.Wh.resize(3 * M, M);
    q.wf_x = {pick_frac_bits(lp.W_ir, "W_ir"), pick_frac_bits(lp.W_iz, "W_iz"),
              pick_frac_bits(lp.W_in, "W_in")};
    q.wf_h = {pick_frac_bits(lp.W_hr, "W_hr"), pick_frac_bits(lp.W_hz, "W_hz"),
              pick_frac_bits(lp.W_hn, "W_hn")};
    fill_block(q.Wx, 0, lp.W_ir, q.wf_x[0]);
    fill_block(q.Wx, M, lp.W_iz, q.wf_x[1]);
    fill_block(q.Wx, 2 * M, lp.W_in, q.wf_x[2]);
    fill_block(q.Wh, 0, lp.W_hr, q.wf_h[0]);
    fill_block(q.Wh, M, lp.W_hz, q.wf_h[1]);
    fill_block(q.Wh, 2 * M, lp.W_hn, q.wf_h[2]);

    q.bx.resize(3 * M);
    q.bh.resize(3 * M);
    for (int j = 0; j < M; ++j) {
      q.bx[j] = quantize_bias(lp.b_ir[j]);
      q.bx[M + j] = quantize_bias(lp.b_iz[j]);
      q.bx[2 * M + j] = quantize_bias(lp.b_in[j]);
      q.bh[j] = quantize_bias(lp.b_hr[j]);
      q.bh[M + j] = quantize_bias(lp.b_hz[j]);
      q.bh[2 * M + j] = quantize_bias(lp.b_hn[j]);
    }
    m.layers.push_back(std::move(q));
  }

  m.W_fc.frac_bits = pick_frac_bits(p.W_fc, "W_fc");
  m.W_fc.w.resize(p.W_fc.rows(), p.W_fc.cols());
  for (Eigen::Index j = 0; j < p.W_fc.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.W_fc.rows(); ++i) {
      m.W_fc.w(i, j) = quantize_weight(p.W_fc(i, j), m.W_fc.frac_bits);
    }
  }
  m.b_fc.resize(p.b_fc.size());
  for (Eigen::Index i = 0; i < p.b_fc.size(); ++i) {
    m.b_fc[i] = quantize_bias(p.b_fc[i]);
  }
  return m;
}

DeltaStateFx engine_reset(const QuantModel& m) {
  DeltaStateFx st;
  const int M = m.arch.hidden_dim;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const QuantLayer& q = m.layers[l];
    DeltaStateFx::Layer s;
    s.xhat.assign(static_cast<std::size_t>(q.Wx.cols()), 0);
    s.hhat.assign(static_cast<std::size_t>(M), 0);
    s.h.assign(static_cast<std::size_t>(M), 0);
    s.h_next.assign(static_cast<std::size_t>(M), 0);
    s.acc_x.resize(static_cast<std::size_t>(3 * M));
    s.acc_h.resize(static_cast<std::size_t>(3 * M));
    for (int j = 0; j < 3 * M; ++j) {
      const int blk = j / M;
      s.acc_x[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(q.bx[j])
                                             << q.wf_x[static_cast<std::size_t>(blk)];
      s.acc_h[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(q.bh[j])
                                             << q.wf_h[static_cast<std::size_t>(blk)];
    }
    st.layers.push_back(std::move(s));
  }
  return st;
}

namespace {

inline std::int32_t clamp_lut_domain(std::int64_t v) {
  if (v < -2048) return -2048;
  if (v > 2047) return 2047;
  return static_cast<std::int32_t>(v);
}

/// Sweep one delta stream: threshold compare, update the last-transmitted
/// buffer, and fold transmitted deltas into the accumulator columns.
/// Returns the number of transmitted elements.
inline std::int64_t sweep_stream(
    const Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>& W,
    const std::int16_t* value, std::int16_t* last, std::int64_t* acc,
    std::int64_t n, std::int64_t rows, std::int16_t theta_raw) {
  std::int64_t transmitted = 0;
  for (std::int64_t e = 0; e < n; ++e) {
    const std::int32_t diff =
        static_cast<std::int32_t>(value[e]) - static_cast<std::int32_t>(last[e]);
    const std::int32_t mag = diff < 0 ? -diff : diff;
    if (mag >= theta_raw) {
      last[e] = value[e];
      const std::int8_t* col = W.data() + e * rows;  // column-major
      for (std::int64_t j = 0; j < rows; ++j) {
        acc[j] += static_cast<std::int64_t>(col[j]) * diff;
      }
      ++transmitted;
    }
  }
  return transmitted;
}

}  // namespace

void engine_step(const QuantModel& m, DeltaStateFx& st,
                 std::span<const std::int16_t> x, std::span<std::int16_t> y) {
  const int M = m.arch.hidden_dim;
  const int Q = m.arch.output_dim;
  if (st.layers.size() != m.layers.size()) {
    throw std::invalid_argument("engine state does not match model");
  }
  if (x.size() != static_cast<std::size_t>(m.arch.input_dim) ||
      y.size() != static_cast<std::size_t>(Q)) {
    throw std::invalid_argument("engine i/o span size mismatch");
  }

  const std::int16_t* layer_in = x.data();
  std::int64_t step_cycles = 0;

  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const QuantLayer& q = m.layers[l];
    DeltaStateFx::Layer& s = st.layers[l];
    const auto in = static_cast<std::int64_t>(q.Wx.cols());

    const std::int64_t tx = sweep_stream(q.Wx, layer_in, s.xhat.data(),
                                         s.acc_x.data(), in, 3 * M,
                                         m.theta_x_raw);
    const std::int64_t th = sweep_stream(q.Wh, s.h.data(), s.hhat.data(),
                                         s.acc_h.data(), M, 3 * M,
                                         m.theta_h_raw);
    st.transmitted_x += tx;
    st.skipped_x += in - tx;
    st.transmitted_h += th;
    st.skipped_h += M - th;
    st.mac_ops += 3 * static_cast<std::int64_t>(M) * (tx + th);
    step_cycles += (3 * static_cast<std::int64_t>(M) * (tx + th) + 7) / 8;

    for (int j = 0; j < M; ++j) {
      const std::int64_t ax_r = s.acc_x[static_cast<std::size_t>(j)];
      const std::int64_t ah_r = s.acc_h[static_cast<std::size_t>(j)];
      const std::int64_t ax_z = s.acc_x[static_cast<std::size_t>(M + j)];
      const std::int64_t ah_z = s.acc_h[static_cast<std::size_t>(M + j)];
      const std::int64_t ax_n = s.acc_x[static_cast<std::size_t>(2 * M + j)];
      const std::int64_t ah_n = s.acc_h[static_cast<std::size_t>(2 * M + j)];
      if (std::abs(ax_r) > kAccLimit || std::abs(ah_r) > kAccLimit ||
          std::abs(ax_z) > kAccLimit || std::abs(ah_z) > kAccLimit ||
          std::abs(ax_n) > kAccLimit || std::abs(ah_n) > kAccLimit) {
        throw std::runtime_error("gate accumulator overflowed 32 bits");
      }

      const std::int64_t pre_r =
          rshift_rne(ax_r, q.wf_x[0]) + rshift_rne(ah_r, q.wf_h[0]);
      const std::int16_t r = lut_lookup(kSigmoidLut, clamp_lut_domain(pre_r));
      const std::int64_t pre_z =
          rshift_rne(ax_z, q.wf_x[1]) + rshift_rne(ah_z, q.wf_h[1]);
      const std::int16_t z = lut_lookup(kSigmoidLut, clamp_lut_domain(pre_z));

      const std::int64_t a_in = rshift_rne(ax_n, q.wf_x[2]);
      const std::int64_t a_hn = rshift_rne(ah_n, q.wf_h[2]);
      const std::int64_t pre_n =
          a_in + rshift_rne(static_cast<std::int64_t>(r) * a_hn, kActFracBits);
      const std::int16_t n = lut_lookup(kTanhLut, clamp_lut_domain(pre_n));

      const std::int64_t h_prev = s.h[static_cast<std::size_t>(j)];
      const std::int64_t h_new = rshift_rne(
          (static_cast<std::int64_t>(kActScale) - z) * n + z * h_prev,
          kActFracBits);
      s.h_next[static_cast<std::size_t>(j)] = static_cast<std::int16_t>(h_new);
    }
    std::memcpy(s.h.data(), s.h_next.data(),
                static_cast<std::size_t>(M) * sizeof(std::int16_t));
    layer_in = s.h.data();
  }

  // Dense readout.
  const int wf_fc = m.W_fc.frac_bits;
  for (int qo = 0; qo < Q; ++qo) {
    std::int64_t acc = static_cast<std::int64_t>(m.b_fc[qo]) << wf_fc;
    for (int j = 0; j < M; ++j) {
      acc += static_cast<std::int64_t>(m.W_fc.w(qo, j)) *
             static_cast<std::int64_t>(layer_in[j]);
    }
    if (std::abs(acc) > kAccLimit) {
      throw std::runtime_error("readout accumulator overflowed 32 bits");
    }
    std::int64_t out = rshift_rne(acc, wf_fc);
    if (out > 32767) out = 32767;
    if (out < -32768) out = -32768;
    y[static_cast<std::size_t>(qo)] = static_cast<std::int16_t>(out);
  }
  st.mac_ops += static_cast<std::int64_t>(Q) * M;
  st.cycles += step_cycles;
  st.steps += 1;
}

void engine_step(const QuantModel& m, DeltaStateFx& st,
                 std::span<const double> x, std::span<double> y) {
  std::int16_t xq[64];
  std::int16_t yq[64];
  if (x.size() > 64 || y.size() > 64) {
    throw std::invalid_argument("float wrapper supports up to 64 channels");
  }
  for (std::size_t i = 0; i < x.size(); ++i) xq[i] = quantize_act(x[i]);
  engine_step(m, st, std::span<const std::int16_t>(xq, x.size()),
              std::span<std::int16_t>(yq, y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = dequantize_act(yq[i]);
}

Eigen::MatrixXd engine_run(const QuantModel& m, DeltaStateFx& st,
                           const Eigen::MatrixXd& x) {
  if (x.rows() != m.arch.input_dim) {
    throw std::invalid_argument("engine_run input rows != input_dim");
  }
  Eigen::MatrixXd y(m.arch.output_dim, x.cols());
  std::vector<double> xin(static_cast<std::size_t>(x.rows()));
  std::vector<double> yout(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      xin[static_cast<std::size_t>(i)] = x(i, t);
    }
    engine_step(m, st, std::span<const double>(xin), std::span<double>(yout));
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      y(i, t) = yout[static_cast<std::size_t>(i)];
    }
  }
  return y;
}

std::int64_t dense_ops_per_step(const NetArch& arch) {
  const std::int64_t M = arch.hidden_dim;
  std::int64_t macs = 0;
  for (int l = 0; l < arch.n_layers; ++l) {
    const std::int64_t in = l == 0 ? arch.input_dim : arch.hidden_dim;
    macs += 3 * M * (in + M);
  }
  macs += static_cast<std::int64_t>(arch.output_dim) * M;
  return 2 * macs;
}

CostReport cost_report(const QuantModel& m, const DeltaStateFx& st,
                       int overhead_cycles_per_step) {
  if (st.steps < 1) throw std::invalid_argument("cost report needs >= 1 step");
  CostReport r;
  r.steps = st.steps;
  r.dense_ops_per_step = dense_ops_per_step(m.arch);
  r.effective_ops_per_step =
      2.0 * static_cast<double>(st.mac_ops) / static_cast<double>(st.steps);
  r.op_reduction = r.effective_ops_per_step > 0.0
                       ? static_cast<double>(r.dense_ops_per_step) /
                             r.effective_ops_per_step
                       : std::numeric_limits<double>::infinity();
  r.mean_cycles_per_step =
      static_cast<double>(st.cycles) / static_cast<double>(st.steps) +
      static_cast<double>(overhead_cycles_per_step);
  const double tx = static_cast<double>(st.transmitted_x);
  const double sx = static_cast<double>(st.skipped_x);
  const double th = static_cast<double>(st.transmitted_h);
  const double sh = static_cast<double>(st.skipped_h);
  r.occupancy_x = tx + sx > 0 ? tx / (tx + sx) : 0.0;
  r.occupancy_h = th + sh > 0 ? th / (th + sh) : 0.0;
  return r;
}

namespace {

constexpr char kEngineMagic[4] = {'E', 'D', 'R', 'N'};
constexpr std::uint32_t kEngineVersion = 1;

void write_raw(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::ifstream& in, void* p, std::size_t n,
              const std::filesystem::path& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw std::runtime_error("truncated engine model: " + path.string());
  }
}

}  // namespace

void save_engine_model(const QuantModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_raw(out, kEngineMagic, 4);
  write_raw(out, &kEngineVersion, 4);
  const std::int32_t dims[4] = {m.arch.n_layers, m.arch.input_dim,
                                m.arch.hidden_dim, m.arch.output_dim};
  write_raw(out, dims, sizeof dims);
  const std::int16_t thetas[2] = {m.theta_x_raw, m.theta_h_raw};
  write_raw(out, thetas, sizeof thetas);
  const std::int32_t act_frac = kActFracBits;
  write_raw(out, &act_frac, sizeof act_frac);
  for (const QuantLayer& q : m.layers) {
    const std::int32_t wf[6] = {q.wf_x[0], q.wf_x[1], q.wf_x[2],
                                q.wf_h[0], q.wf_h[1], q.wf_h[2]};
    write_raw(out, wf, sizeof wf);
    write_raw(out, q.Wx.data(), static_cast<std::size_t>(q.Wx.size()));
    write_raw(out, q.Wh.data(), static_cast<std::size_t>(q.Wh.size()));
    write_raw(out, q.bx.data(),
              static_cast<std::size_t>(q.bx.size()) * sizeof(std::int16_t));
    write_raw(out, q.bh.data(),
              static_cast<std::size_t>(q.bh.size()) * sizeof(std::int16_t));
  }
  const std::int32_t wf_fc = m.W_fc.frac_bits;
  write_raw(out, &wf_fc, sizeof wf_fc);
  write_raw(out, m.W_fc.w.data(), static_cast<std::size_t>(m.W_fc.w.size()));
  write_raw(out, m.b_fc.data(),
            static_cast<std::size_t>(m.b_fc.size()) * sizeof(std::int16_t));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

QuantModel load_engine_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read engine model: " + path.string());
  char magic[4];
  read_raw(in, magic, 4, path);
  if (std::memcmp(magic, kEngineMagic, 4) != 0) {
    throw std::runtime_error("not an engine model (bad magic): " + path.string());
  }
  std::uint32_t version = 0;
  read_raw(in, &version, 4, path);
  if (version != kEngineVersion) {
    throw std::runtime_error("unsupported engine model version: " + path.string());
  }
  std::int32_t dims[4];
  read_raw(in, dims, sizeof dims, path);
  QuantModel m;
  m.arch.n_layers = dims[0];
  m.arch.input_dim = dims[1];
  m.arch.hidden_dim = dims[2];
  m.arch.output_dim = dims[3];
  if (m.arch.n_layers < 1 || m.arch.n_layers > 64 || m.arch.input_dim < 1 ||
      m.arch.hidden_dim < 1 || m.arch.output_dim < 1 ||
      m.arch.input_dim > 65536 || m.arch.hidden_dim > 65536 ||
      m.arch.output_dim > 65536) {
    throw std::runtime_error("implausible dimensions in " + path.string());
  }
  std::int16_t thetas[2];
  read_raw(in, thetas, sizeof thetas, path);
  m.theta_x_raw = thetas[0];
  m.theta_h_raw = thetas[1];
  std::int32_t act_frac = 0;
  read_raw(in, &act_frac, sizeof act_frac, path);
  if (act_frac != kActFracBits) {
    throw std::runtime_error("unsupported activation format in " + path.string());
  }
  const int M = m.arch.hidden_dim;
  for (int l = 0; l < m.arch.n_layers; ++l) {
    const int in_dim = l == 0 ? m.arch.input_dim : M;
    check_acc_bound(in_dim, M, "load_engine_model");
    QuantLayer q;
    std::int32_t wf[6];
    read_raw(in, wf, sizeof wf, path);
    for (int i = 0; i < 6; ++i) {
      if (wf[i] < 0 || wf[i] > 7) {
        throw std::runtime_error("bad weight format in " + path.string());
      }
    }
    q.wf_x = {static_cast<int>(wf[0]), static_cast<int>(wf[1]),
              static_cast<int>(wf[2])};
    q.wf_h = {static_cast<int>(wf[3]), static_cast<int>(wf[4]),
              static_cast<int>(wf[5])};
    q.Wx.resize(3 * M, in_dim);
    q.Wh.resize(3 * M, M);
    q.bx.resize(3 * M);
    q.bh.resize(3 * M);
    read_raw(in, q.Wx.data(), static_cast<std::size_t>(q.Wx.size()), path);
    read_raw(in, q.Wh.data(), static_cast<std::size_t>(q.Wh.size()), path);
    read_raw(in, q.bx.data(),
             static_cast<std::size_t>(q.bx.size()) * sizeof(std::int16_t), path);
    read_raw(in, q.bh.data(),
             static_cast<std::size_t>(q.bh.size()) * sizeof(std::int16_t), path);
    m.layers.push_back(std::move(q));
  }
  std::int32_t wf_fc = 0;
  read_raw(in, &wf_fc, sizeof wf_fc, path);
  if (wf_fc < 0 || wf_fc > 7) {
    throw std::runtime_error("bad readout format in " + path.string());
  }
  m.W_fc.frac_bits = wf_fc;
  m.W_fc.w.resize(m.arch.output_dim, M);
  m.b_fc.resize(m.arch.output_dim);
  read_raw(in, m.W_fc.w.data(), static_cast<std::size_t>(m.W_fc.w.size()), path);
  read_raw(in, m.b_fc.data(),
           static_cast<std::size_t>(m.b_fc.size()) * sizeof(std::int16_t), path);
  char extra = 0;
  if (in.read(&extra, 1); in.gcount() != 0) {
    throw std::runtime_error("trailing bytes in engine model: " + path.string());
  }
  return m;
}

}  // namespace gaitclone
