#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gaitclone/rnn.hpp"

namespace gaitclone {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

}  // namespace

DeltaForwardResult deltagru_forward(const NetworkParams& p,
                                    const std::vector<Eigen::MatrixXd>& x,
                                    const DeltaThresholds& th) {
  if (x.empty()) throw std::invalid_argument("empty input sequence");
  if (th.theta_x < 0 || th.theta_h < 0) {
    throw std::invalid_argument("delta thresholds must be >= 0");
  }
  const auto T = x.size();
  const Eigen::Index B = x[0].cols();
  const int M = p.arch.hidden_dim;
  if (x[0].rows() != p.arch.input_dim) {
    throw std::invalid_argument("input dimension mismatch");
  }

  DeltaForwardResult out;
  out.layers.resize(p.layers.size());
  std::vector<Eigen::MatrixXd> input = x;

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& lp = p.layers[l];
    DeltaLayerCache& cache = out.layers[l];
    cache.x = std::move(input);
    cache.mx.resize(T);
    cache.mh.resize(T);
    cache.dx.resize(T);
    cache.dh.resize(T);
    cache.r.resize(T);
    cache.z.resize(T);
    cache.n.resize(T);
    cache.a_ir.resize(T);
    cache.a_iz.resize(T);
    cache.a_in.resize(T);
    cache.a_hr.resize(T);
    cache.a_hz.resize(T);
    cache.a_hn.resize(T);
    cache.h.resize(T);

    const Eigen::Index in = cache.x[0].rows();
    Eigen::MatrixXd xhat = Eigen::MatrixXd::Zero(in, B);
    Eigen::MatrixXd hhat = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(M, B);
    // Gate pre-activations live in accumulators seeded with the biases.
    Eigen::MatrixXd a_ir = lp.b_ir.replicate(1, B);
    Eigen::MatrixXd a_iz = lp.b_iz.replicate(1, B);
    Eigen::MatrixXd a_in = lp.b_in.replicate(1, B);
    Eigen::MatrixXd a_hr = lp.b_hr.replicate(1, B);
    Eigen::MatrixXd a_hz = lp.b_hz.replicate(1, B);
    Eigen::MatrixXd a_hn = lp.b_hn.replicate(1, B);

    for (std::size_t t = 0; t < T; ++t) {
      const Eigen::ArrayXXd dx_full = cache.x[t].array() - xhat.array();
      const Eigen::ArrayXXd mx =
          (dx_full.abs() >= th.theta_x).cast<double>();
      const Eigen::MatrixXd dxm = (mx * dx_full).matrix();
      xhat += dxm;

      const Eigen::ArrayXXd dh_full = h.array() - hhat.array();
      const Eigen::ArrayXXd mh =
          (dh_full.abs() >= th.theta_h).cast<double>();
      const Eigen::MatrixXd dhm = (mh * dh_full).matrix();
      hhat += dhm;

      const auto nx = static_cast<std::int64_t>(mx.sum());
      const auto nh = static_cast<std::int64_t>(mh.sum());
      out.transmitted_x += nx;
      out.skipped_x += static_cast<std::int64_t>(mx.size()) - nx;
      out.transmitted_h += nh;
      out.skipped_h += static_cast<std::int64_t>(mh.size()) - nh;

      a_ir.noalias() += lp.W_ir * dxm;
      a_iz.noalias() += lp.W_iz * dxm;
      a_in.noalias() += lp.W_in * dxm;
      a_hr.noalias() += lp.W_hr * dhm;
      a_hz.noalias() += lp.W_hz * dhm;
      a_hn.noalias() += lp.W_hn * dhm;

      const Eigen::MatrixXd r = sigmoid(a_ir + a_hr);
      const Eigen::MatrixXd z = sigmoid(a_iz + a_hz);
      const Eigen::MatrixXd n =
          (a_in.array() + r.array() * a_hn.array()).tanh().matrix();
      const Eigen::MatrixXd h_next =
          ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();

      cache.mx[t] = mx;
      cache.mh[t] = mh;
      cache.dx[t] = dxm;
      cache.dh[t] = dhm;
      cache.r[t] = r;
      cache.z[t] = z;
      cache.n[t] = n;
      cache.a_ir[t] = a_ir;
      cache.a_iz[t] = a_iz;
      cache.a_in[t] = a_in;
      cache.a_hr[t] = a_hr;
      cache.a_hz[t] = a_hz;
      cache.a_hn[t] = a_hn;
      cache.h[t] = h_next;
      h = h_next;
    }
    input = cache.h;
  }

  out.y.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    out.y[t] = (p.W_fc * out.layers.back().h[t]).colwise() + p.b_fc;
  }
  return out;
}

NetworkGrads deltagru_backward(const NetworkParams& p,
                               const DeltaForwardResult& fwd,
                               const std::vector<Eigen::MatrixXd>& dy) {
  const auto T = fwd.y.size();
  if (dy.size() != T) throw std::invalid_argument("dy length mismatch");
  const Eigen::Index B = fwd.y[0].cols();
  const int M = p.arch.hidden_dim;

  NetworkGrads g = zero_grads(p);

  std::vector<Eigen::MatrixXd> gh(T, Eigen::MatrixXd::Zero(M, B));
  for (std::size_t t = 0; t < T; ++t) {
    g.W_fc.noalias() += dy[t] * fwd.layers.back().h[t].transpose();
    g.b_fc += dy[t].rowwise().sum();
    gh[t].noalias() += p.W_fc.transpose() * dy[t];
  }

  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const LayerParams& lp = p.layers[static_cast<std::size_t>(l)];
    const DeltaLayerCache& cache = fwd.layers[static_cast<std::size_t>(l)];
    LayerParams& gl = g.layers[static_cast<std::size_t>(l)];
    const Eigen::Index in = cache.x[0].rows();

    std::vector<Eigen::MatrixXd> gx(T, Eigen::MatrixXd::Zero(in, B));

    Eigen::MatrixXd carry_h = Eigen::MatrixXd::Zero(M, B);  // to true h_{t-1}
    Eigen::MatrixXd g_xhat = Eigen::MatrixXd::Zero(in, B);
    Eigen::MatrixXd g_hhat = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd gA_ir = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd gA_iz = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd gA_in = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd gA_hr = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd gA_hz = Eigen::MatrixXd::Zero(M, B);
    Eigen::MatrixXd gA_hn = Eigen::MatrixXd::Zero(M, B);

    for (int t = static_cast<int>(T) - 1; t >= 0; --t) {
      const auto ts = static_cast<std::size_t>(t);
      const Eigen::MatrixXd gh_t = gh[ts] + carry_h;
      const Eigen::MatrixXd& r = cache.r[ts];
      const Eigen::MatrixXd& z = cache.z[ts];
      const Eigen::MatrixXd& n = cache.n[ts];
      const Eigen::MatrixXd h_prev =
          t == 0 ? Eigen::MatrixXd::Zero(M, B) : cache.h[ts - 1];

      // Through the state update h = (1-z) n + z h_prev.
      const Eigen::ArrayXXd dz = gh_t.array() * (h_prev.array() - n.array());
      const Eigen::ArrayXXd dn = gh_t.array() * (1.0 - z.array());
      const Eigen::ArrayXXd da_n = dn * (1.0 - n.array().square());
      // n = tanh(A_in + r .* A_hn)
      gA_in.array() += da_n;
      gA_hn.array() += da_n * r.array();
      const Eigen::ArrayXXd dr = da_n * cache.a_hn[ts].array();
      const Eigen::ArrayXXd da_r = dr * r.array() * (1.0 - r.array());
      const Eigen::ArrayXXd da_z = dz * z.array() * (1.0 - z.array());
      gA_ir.array() += da_r;
      gA_hr.array() += da_r;
      gA_iz.array() += da_z;
      gA_hz.array() += da_z;

      // A_t = A_{t-1} + W delta_t: weight gradients use the accumulated
      // adjoint (this step's delta influences every later gate read).
      gl.W_ir.noalias() += gA_ir * cache.dx[ts].transpose();
      gl.W_iz.noalias() += gA_iz * cache.dx[ts].transpose();
      gl.W_in.noalias() += gA_in * cache.dx[ts].transpose();
      gl.W_hr.noalias() += gA_hr * cache.dh[ts].transpose();
      gl.W_hz.noalias() += gA_hz * cache.dh[ts].transpose();
      gl.W_hn.noalias() += gA_hn * cache.dh[ts].transpose();

      // delta_x feeds both the accumulators and the xhat state.
      Eigen::MatrixXd g_dx = g_xhat;
      g_dx.noalias() += lp.W_ir.transpose() * gA_ir;
      g_dx.noalias() += lp.W_iz.transpose() * gA_iz;
      g_dx.noalias() += lp.W_in.transpose() * gA_in;
      Eigen::MatrixXd g_dh = g_hhat;
      g_dh.noalias() += lp.W_hr.transpose() * gA_hr;
      g_dh.noalias() += lp.W_hz.transpose() * gA_hz;
      g_dh.noalias() += lp.W_hn.transpose() * gA_hn;

      // Straight-through: masks are constants. delta = m .* (v - vhat_prev).
      const Eigen::MatrixXd gated_x = (cache.mx[ts] * g_dx.array()).matrix();
      const Eigen::MatrixXd gated_h = (cache.mh[ts] * g_dh.array()).matrix();
      gx[ts] += gated_x;
      g_xhat -= gated_x;  // becomes the adjoint of xhat_{t-1}
      g_hhat -= gated_h;

      carry_h = (gh_t.array() * z.array()).matrix();
      carry_h += gated_h;  // h_{t-1} also feeds the recurrent delta stream
    }

    // Accumulators start at the biases, so the leftover adjoint is theirs.
    gl.b_ir += gA_ir.rowwise().sum();
    gl.b_iz += gA_iz.rowwise().sum();
    gl.b_in += gA_in.rowwise().sum();
    gl.b_hr += gA_hr.rowwise().sum();
    gl.b_hz += gA_hz.rowwise().sum();
    gl.b_hn += gA_hn.rowwise().sum();

    gh = std::move(gx);
  }
  return g;
}

namespace {

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& in, void* data, std::size_t bytes,
              const std::filesystem::path& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) {
    throw std::runtime_error("truncated network file: " + path.string());
  }
}

constexpr char kMagic[4] = {'D', 'G', 'R', 'U'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_network(const NetworkParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_raw(out, kMagic, 4);
  write_raw(out, &kVersion, 4);
  const std::int32_t dims[4] = {p.arch.n_layers, p.arch.input_dim,
                                p.arch.hidden_dim, p.arch.output_dim};
  write_raw(out, dims, sizeof dims);
  // Tensors follow in canonical order, each dumped in Eigen's native
  // column-major storage as little-endian IEEE doubles.
  for_each_tensor(p, [&out](Eigen::Map<const Eigen::VectorXd> t) {
    write_raw(out, t.data(), static_cast<std::size_t>(t.size()) * sizeof(double));
  });
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

NetworkParams load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read network file: " + path.string());
  char magic[4];
  read_raw(in, magic, 4, path);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a network file (bad magic): " + path.string());
  }
  std::uint32_t version = 0;
  read_raw(in, &version, 4, path);
  if (version != kVersion) {
    throw std::runtime_error("unsupported network file version " +
                             std::to_string(version) + ": " + path.string());
  }
  std::int32_t dims[4];
  read_raw(in, dims, sizeof dims, path);
  NetArch arch;
  arch.n_layers = dims[0];
  arch.input_dim = dims[1];
  arch.hidden_dim = dims[2];
  arch.output_dim = dims[3];
  if (arch.n_layers < 1 || arch.n_layers > 64 || arch.input_dim < 1 ||
      arch.hidden_dim < 1 || arch.output_dim < 1 || arch.input_dim > 65536 ||
      arch.hidden_dim > 65536 || arch.output_dim > 65536) {
    throw std::runtime_error("implausible dimensions in " + path.string());
  }
  NetworkParams p = make_network(arch);
  for_each_tensor(p, [&in, &path](Eigen::Map<Eigen::VectorXd> t) {
    read_raw(in, t.data(), static_cast<std::size_t>(t.size()) * sizeof(double),
             path);
  });
  char extra = 0;
  if (in.read(&extra, 1); in.gcount() != 0) {
    throw std::runtime_error("trailing bytes in network file: " + path.string());
  }
  return p;
}

}  // namespace gaitclone
