#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "gaitclone/config.hpp"
#include "gaitclone/rng.hpp"

namespace gaitclone {

/// One GRU layer with the dual-bias gate equations
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r .* (W_hn h + b_hn))
///   h' = (1 - z) .* n + z .* h
struct LayerParams {
  Eigen::MatrixXd W_ir, W_iz, W_in;  // M x in
  Eigen::MatrixXd W_hr, W_hz, W_hn;  // M x M
  Eigen::VectorXd b_ir, b_iz, b_in;  // M
  Eigen::VectorXd b_hr, b_hz, b_hn;  // M
};

/// Stacked GRU plus a linear readout y = W_fc h_top + b_fc.
struct NetworkParams {
  NetArch arch;
  std::vector<LayerParams> layers;
  Eigen::MatrixXd W_fc;  // Q x M
  Eigen::VectorXd b_fc;  // Q
};

/// Gradients share the exact shape of the parameters.
using NetworkGrads = NetworkParams;

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per tensor, drawn in a fixed
/// order so a seed fully determines the network.
NetworkParams init_params(const NetArch& arch, Rng& rng);

/// Zero-initialized network of the given shape.
NetworkParams make_network(const NetArch& arch);

NetworkGrads zero_grads(const NetworkParams& p);

/// Visits every tensor of the network in its canonical (serialization) order.
/// The visitor receives contiguous views; used by the optimizer and by the
/// gradient checker.
void for_each_tensor(NetworkParams& p,
                     const std::function<void(Eigen::Map<Eigen::VectorXd>)>& f);
void for_each_tensor(
    const NetworkParams& p,
    const std::function<void(Eigen::Map<const Eigen::VectorXd>)>& f);

std::int64_t param_count(const NetArch& arch);

/// Per-layer forward cache, time-major. h[t] is the post-update state.
struct GruLayerCache {
  Eigen::MatrixXd h0;              // initial state (M x B)
  std::vector<Eigen::MatrixXd> x;  // T of in x B (layer input)
  std::vector<Eigen::MatrixXd> r, z, n;  // T of M x B
  std::vector<Eigen::MatrixXd> m;        // W_hn h + b_hn     (needed for dr)
  std::vector<Eigen::MatrixXd> h;        // T of M x B
};

struct ForwardResult {
  std::vector<Eigen::MatrixXd> y;  // T of Q x B
  std::vector<GruLayerCache> layers;
};

/// x: T entries of N x B. The hidden state starts at h0 (one M x B matrix
/// per layer) or at zero when h0 is null; h_T is layers[l].h.back().
ForwardResult gru_forward(const NetworkParams& p,
                          const std::vector<Eigen::MatrixXd>& x,
                          const std::vector<Eigen::MatrixXd>* h0 = nullptr);

/// Full backpropagation through time. dy: T of Q x B. When grad_h0 is
/// non-null it receives the per-layer gradient w.r.t. the initial state.
NetworkGrads gru_backward(const NetworkParams& p, const ForwardResult& fwd,
                          const std::vector<Eigen::MatrixXd>& dy,
                          std::vector<Eigen::MatrixXd>* grad_h0 = nullptr);

/// Mean absolute error over every (t, b, q) element.
double l1_loss(const std::vector<Eigen::MatrixXd>& y,
               const std::vector<Eigen::MatrixXd>& target);

/// Subgradient of l1_loss with respect to y (sign/(T*B*Q), 0 at ties).
std::vector<Eigen::MatrixXd> l1_grad(const std::vector<Eigen::MatrixXd>& y,
                                     const std::vector<Eigen::MatrixXd>& target);

/// Delta-network state cache. Masks are 0/1; hat tensors hold the
/// last-transmitted values after the step's update.
struct DeltaLayerCache {
  std::vector<Eigen::MatrixXd> x;        // layer input (true values)
  std::vector<Eigen::ArrayXXd> mx, mh;   // transmit masks
  std::vector<Eigen::MatrixXd> dx, dh;   // masked deltas actually sent
  std::vector<Eigen::MatrixXd> r, z, n;  // gate activations
  /// All six pre-activation accumulators after the step's update.
  std::vector<Eigen::MatrixXd> a_ir, a_iz, a_in, a_hr, a_hz, a_hn;
  std::vector<Eigen::MatrixXd> h;        // true post-update state
};

struct DeltaForwardResult {
  std::vector<Eigen::MatrixXd> y;
  std::vector<DeltaLayerCache> layers;
  /// Transmitted/suppressed element counts over the whole call, split by
  /// input streams (x of every layer) and recurrent streams (h).
  std::int64_t transmitted_x = 0, skipped_x = 0;
  std::int64_t transmitted_h = 0, skipped_h = 0;
};

/// Delta-update forward pass: elements are transmitted only when they have
/// changed by at least the threshold; gate pre-activations live in
/// accumulators seeded with the biases. With both thresholds at 0 this
/// computes exactly gru_forward.
DeltaForwardResult deltagru_forward(const NetworkParams& p,
                                    const std::vector<Eigen::MatrixXd>& x,
                                    const DeltaThresholds& th);

/// BPTT with the straight-through estimator: masks are treated as constants,
/// gradients flow through the accumulator recursion.
NetworkGrads deltagru_backward(const NetworkParams& p,
                               const DeltaForwardResult& fwd,
                               const std::vector<Eigen::MatrixXd>& dy);

/// Binary network container (magic "DGRU"): little-endian doubles in
/// canonical tensor order. Round-trips bit-exactly.
void save_network(const NetworkParams& p, const std::filesystem::path& path);
NetworkParams load_network(const std::filesystem::path& path);

}  // namespace gaitclone
