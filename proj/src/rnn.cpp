#include "gaitclone/rnn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gaitclone {

namespace {

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
}

int layer_input_dim(const NetArch& arch, int layer) {
  return layer == 0 ? arch.input_dim : arch.hidden_dim;
}

}  // namespace

NetworkParams init_params(const NetArch& arch, Rng& rng) {
  if (arch.n_layers < 1 || arch.input_dim < 1 || arch.hidden_dim < 1 ||
      arch.output_dim < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  NetworkParams p;
  p.arch = arch;
  const int M = arch.hidden_dim;
  for (int l = 0; l < arch.n_layers; ++l) {
    const int in = layer_input_dim(arch, l);
    const double bi = 1.0 / std::sqrt(static_cast<double>(in));
    const double bh = 1.0 / std::sqrt(static_cast<double>(M));
    LayerParams lp;
    lp.W_ir.resize(M, in);
    lp.W_iz.resize(M, in);
    lp.W_in.resize(M, in);
    lp.W_hr.resize(M, M);
    lp.W_hz.resize(M, M);
    lp.W_hn.resize(M, M);
    lp.b_ir.resize(M);
    lp.b_iz.resize(M);
    lp.b_in.resize(M);
    lp.b_hr.resize(M);
    lp.b_hz.resize(M);
    lp.b_hn.resize(M);
    fill_uniform(lp.W_ir, bi, rng);
    fill_uniform(lp.W_iz, bi, rng);
    fill_uniform(lp.W_in, bi, rng);
    fill_uniform(lp.W_hr, bh, rng);
    fill_uniform(lp.W_hz, bh, rng);
    fill_uniform(lp.W_hn, bh, rng);
    fill_uniform(lp.b_ir, bi, rng);
    fill_uniform(lp.b_iz, bi, rng);
    fill_uniform(lp.b_in, bi, rng);
    fill_uniform(lp.b_hr, bh, rng);
    fill_uniform(lp.b_hz, bh, rng);
    fill_uniform(lp.b_hn, bh, rng);
    p.layers.push_back(std::move(lp));
  }
  const double bf = 1.0 / std::sqrt(static_cast<double>(M));
  p.W_fc.resize(arch.output_dim, M);
  p.b_fc.resize(arch.output_dim);
  fill_uniform(p.W_fc, bf, rng);
  fill_uniform(p.b_fc, bf, rng);
  return p;
}

NetworkParams make_network(const NetArch& arch) {
  NetworkParams p;
  p.arch = arch;
  const int M = arch.hidden_dim;
  for (int l = 0; l < arch.n_layers; ++l) {
    const int in = layer_input_dim(arch, l);
    LayerParams lp;
    lp.W_ir = Eigen::MatrixXd::Zero(M, in);
    lp.W_iz = Eigen::MatrixXd::Zero(M, in);
    lp.W_in = Eigen::MatrixXd::Zero(M, in);
    lp.W_hr = Eigen::MatrixXd::Zero(M, M);
    lp.W_hz = Eigen::MatrixXd::Zero(M, M);
    lp.W_hn = Eigen::MatrixXd::Zero(M, M);
    lp.b_ir = Eigen::VectorXd::Zero(M);
    lp.b_iz = Eigen::VectorXd::Zero(M);
    lp.b_in = Eigen::VectorXd::Zero(M);
    lp.b_hr = Eigen::VectorXd::Zero(M);
    lp.b_hz = Eigen::VectorXd::Zero(M);
    lp.b_hn = Eigen::VectorXd::Zero(M);
    p.layers.push_back(std::move(lp));
  }
  p.W_fc = Eigen::MatrixXd::Zero(arch.output_dim, M);
  p.b_fc = Eigen::VectorXd::Zero(arch.output_dim);
  return p;
}

NetworkGrads zero_grads(const NetworkParams& p) { return make_network(p.arch); }

namespace {

template <typename Params, typename Visitor>
void visit_tensors(Params& p, const Visitor& f) {
  for (auto& lp : p.layers) {
    f(lp.W_ir);
    f(lp.W_iz);
    f(lp.W_in);
    f(lp.W_hr);
    f(lp.W_hz);
    f(lp.W_hn);
    f(lp.b_ir);
    f(lp.b_iz);
    f(lp.b_in);
    f(lp.b_hr);
    f(lp.b_hz);
    f(lp.b_hn);
  }
  f(p.W_fc);
  f(p.b_fc);
}

}  // namespace

void for_each_tensor(
    NetworkParams& p,
    const std::function<void(Eigen::Map<Eigen::VectorXd>)>& f) {
  visit_tensors(p, [&f](auto& t) {
    f(Eigen::Map<Eigen::VectorXd>(t.data(), t.size()));
  });
}

void for_each_tensor(
    const NetworkParams& p,
    const std::function<void(Eigen::Map<const Eigen::VectorXd>)>& f) {
  visit_tensors(p, [&f](const auto& t) {
    f(Eigen::Map<const Eigen::VectorXd>(t.data(), t.size()));
  });
}

std::int64_t param_count(const NetArch& arch) {
  std::int64_t n = 0;
  const std::int64_t M = arch.hidden_dim;
  for (int l = 0; l < arch.n_layers; ++l) {
    const std::int64_t in = layer_input_dim(arch, l);
    n += 3 * M * in + 3 * M * M + 6 * M;
  }
  n += static_cast<std::int64_t>(arch.output_dim) * M + arch.output_dim;
  return n;
}

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

void check_input(const NetworkParams& p, const std::vector<Eigen::MatrixXd>& x) {
  if (x.empty()) throw std::invalid_argument("empty input sequence");
  for (const auto& xt : x) {
    if (xt.rows() != p.arch.input_dim || xt.cols() != x[0].cols()) {
      throw std::invalid_argument("inconsistent input dimensions");
    }
  }
}

}  // namespace

ForwardResult gru_forward(const NetworkParams& p,
                          const std::vector<Eigen::MatrixXd>& x,
                          const std::vector<Eigen::MatrixXd>* h0) {
  check_input(p, x);
  const auto T = x.size();
  const Eigen::Index B = x[0].cols();
  const int M = p.arch.hidden_dim;
  if (h0 && h0->size() != p.layers.size()) {
    throw std::invalid_argument("h0 must carry one matrix per layer");
  }

  ForwardResult out;
  out.layers.resize(p.layers.size());
  std::vector<Eigen::MatrixXd> input = x;

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& lp = p.layers[l];
    GruLayerCache& cache = out.layers[l];
    cache.x = std::move(input);
    cache.r.resize(T);
    cache.z.resize(T);
    cache.n.resize(T);
    cache.m.resize(T);
    cache.h.resize(T);
    cache.h0 = h0 ? (*h0)[l] : Eigen::MatrixXd::Zero(M, B);
    if (cache.h0.rows() != M || cache.h0.cols() != B) {
      throw std::invalid_argument("h0 shape mismatch");
    }

    Eigen::MatrixXd h = cache.h0;
    for (std::size_t t = 0; t < T; ++t) {
      const Eigen::MatrixXd& xt = cache.x[t];
      const Eigen::MatrixXd r = sigmoid(
          ((lp.W_ir * xt).colwise() + lp.b_ir) +
          ((lp.W_hr * h).colwise() + lp.b_hr));
      const Eigen::MatrixXd z = sigmoid(
          ((lp.W_iz * xt).colwise() + lp.b_iz) +
          ((lp.W_hz * h).colwise() + lp.b_hz));
      const Eigen::MatrixXd m = (lp.W_hn * h).colwise() + lp.b_hn;
      const Eigen::MatrixXd n =
          (((lp.W_in * xt).colwise() + lp.b_in).array() +
           r.array() * m.array())
              .tanh()
              .matrix();
      h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
      cache.r[t] = r;
      cache.z[t] = z;
      cache.n[t] = n;
      cache.m[t] = m;
      cache.h[t] = h;
    }
    input = cache.h;  // feeds the next layer
  }

  out.y.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    out.y[t] = (p.W_fc * out.layers.back().h[t]).colwise() + p.b_fc;
  }
  return out;
}

NetworkGrads gru_backward(const NetworkParams& p, const ForwardResult& fwd,
                          const std::vector<Eigen::MatrixXd>& dy,
                          std::vector<Eigen::MatrixXd>* grad_h0) {
  const auto T = fwd.y.size();
  if (dy.size() != T) throw std::invalid_argument("dy length mismatch");
  const Eigen::Index B = fwd.y[0].cols();
  const int M = p.arch.hidden_dim;

  NetworkGrads g = zero_grads(p);
  if (grad_h0) grad_h0->assign(p.layers.size(), Eigen::MatrixXd());

  // Readout layer; gh[t] accumulates gradient w.r.t. the top layer state.
  std::vector<Eigen::MatrixXd> gh(
      T, Eigen::MatrixXd::Zero(M, B));
  for (std::size_t t = 0; t < T; ++t) {
    g.W_fc.noalias() += dy[t] * fwd.layers.back().h[t].transpose();
    g.b_fc += dy[t].rowwise().sum();
    gh[t].noalias() += p.W_fc.transpose() * dy[t];
  }

  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const LayerParams& lp = p.layers[l];
    const GruLayerCache& cache = fwd.layers[static_cast<std::size_t>(l)];
    LayerParams& gl = g.layers[static_cast<std::size_t>(l)];
    std::vector<Eigen::MatrixXd> gx(
        T, Eigen::MatrixXd::Zero(cache.x[0].rows(), B));

    Eigen::MatrixXd carry = Eigen::MatrixXd::Zero(M, B);  // from t+1
    for (int t = static_cast<int>(T) - 1; t >= 0; --t) {
      const auto ts = static_cast<std::size_t>(t);
      const Eigen::MatrixXd gh_t = gh[ts] + carry;
      const Eigen::MatrixXd& r = cache.r[ts];
      const Eigen::MatrixXd& z = cache.z[ts];
      const Eigen::MatrixXd& n = cache.n[ts];
      const Eigen::MatrixXd& m = cache.m[ts];
      const Eigen::MatrixXd& h_prev = t == 0 ? cache.h0 : cache.h[ts - 1];

      const Eigen::ArrayXXd dz = gh_t.array() * (h_prev.array() - n.array());
      const Eigen::ArrayXXd dn = gh_t.array() * (1.0 - z.array());
      const Eigen::ArrayXXd da_n = dn * (1.0 - n.array().square());
      const Eigen::ArrayXXd dr = da_n * m.array();
      const Eigen::ArrayXXd da_r = dr * r.array() * (1.0 - r.array());
      const Eigen::ArrayXXd da_z = dz * z.array() * (1.0 - z.array());
      const Eigen::MatrixXd da_hn = (da_n * r.array()).matrix();
      const Eigen::MatrixXd da_rm = da_r.matrix();
      const Eigen::MatrixXd da_zm = da_z.matrix();
      const Eigen::MatrixXd da_nm = da_n.matrix();

      gl.W_ir.noalias() += da_rm * cache.x[ts].transpose();
      gl.W_iz.noalias() += da_zm * cache.x[ts].transpose();
      gl.W_in.noalias() += da_nm * cache.x[ts].transpose();
      gl.W_hr.noalias() += da_rm * h_prev.transpose();
      gl.W_hz.noalias() += da_zm * h_prev.transpose();
      gl.W_hn.noalias() += da_hn * h_prev.transpose();
      gl.b_ir += da_rm.rowwise().sum();
      gl.b_iz += da_zm.rowwise().sum();
      gl.b_in += da_nm.rowwise().sum();
      gl.b_hr += da_rm.rowwise().sum();
      gl.b_hz += da_zm.rowwise().sum();
      gl.b_hn += da_hn.rowwise().sum();

      gx[ts].noalias() += lp.W_ir.transpose() * da_rm;
      gx[ts].noalias() += lp.W_iz.transpose() * da_zm;
      gx[ts].noalias() += lp.W_in.transpose() * da_nm;

      carry = (gh_t.array() * z.array()).matrix();
      carry.noalias() += lp.W_hr.transpose() * da_rm;
      carry.noalias() += lp.W_hz.transpose() * da_zm;
      carry.noalias() += lp.W_hn.transpose() * da_hn;
    }
    if (grad_h0) (*grad_h0)[static_cast<std::size_t>(l)] = carry;
    gh = std::move(gx);  // becomes the state gradient of the layer below
  }
  return g;
}

double l1_loss(const std::vector<Eigen::MatrixXd>& y,
               const std::vector<Eigen::MatrixXd>& target) {
  if (y.size() != target.size() || y.empty()) {
    throw std::invalid_argument("loss needs equal nonzero sequence lengths");
  }
  double acc = 0.0;
  std::int64_t count = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    acc += (y[t] - target[t]).array().abs().sum();
    count += y[t].size();
  }
  return acc / static_cast<double>(count);
}

std::vector<Eigen::MatrixXd> l1_grad(
    const std::vector<Eigen::MatrixXd>& y,
    const std::vector<Eigen::MatrixXd>& target) {
  if (y.size() != target.size() || y.empty()) {
    throw std::invalid_argument("loss needs equal nonzero sequence lengths");
  }
  std::int64_t count = 0;
  for (const auto& yt : y) count += yt.size();
  const double scale = 1.0 / static_cast<double>(count);
  std::vector<Eigen::MatrixXd> dy(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    dy[t] = (y[t] - target[t]).array().sign().matrix() * scale;
  }
  return dy;
}

}  // namespace gaitclone
