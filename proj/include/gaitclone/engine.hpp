#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gaitclone/rnn.hpp"

namespace gaitclone {

/// Activations are Q8.8: value = raw / 256, raw is int16.
constexpr int kActFracBits = 8;
constexpr int kActScale = 1 << kActFracBits;

/// Arithmetic right shift with round-to-nearest-even. n >= 0.
std::int64_t rshift_rne(std::int64_t v, int n);

/// Round-to-nearest-even quantization to Q8.8 with int16 saturation.
std::int16_t quantize_act(double x);
inline double dequantize_act(std::int16_t q) {
  return static_cast<double>(q) / kActScale;
}

/// sigmoid/tanh over pre-activations in [-8, 8) sampled every 1/16; outputs
/// are Q8.8. Entry 256 closes the last interpolation interval.
extern const std::array<std::int16_t, 257> kSigmoidLut;
extern const std::array<std::int16_t, 257> kTanhLut;

/// LUT read with linear interpolation; q is a Q8.8 pre-activation already
/// clamped to [-2048, 2047].
std::int16_t lut_lookup(const std::array<std::int16_t, 257>& lut,
                        std::int32_t q);

/// int8 weight block with its per-tensor scale: value = raw / 2^frac_bits.
struct QuantTensor {
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> w;
  int frac_bits = 0;
};

/// One layer with gate-major stacking: rows [0,M) are the r gate, [M,2M) z,
/// [2M,3M) n. Weight columns are contiguous so a transmitted element updates
/// its accumulator column in one sweep. Per-gate scales, biases in Q8.8.
struct QuantLayer {
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> Wx;  // 3M x in
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> Wh;  // 3M x M
  std::array<int, 3> wf_x{};  // frac bits of W_ir, W_iz, W_in
  std::array<int, 3> wf_h{};
  Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1> bx;  // [b_ir; b_iz; b_in]
  Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1> bh;  // [b_hr; b_hz; b_hn]
};

struct QuantModel {
  NetArch arch;
  std::vector<QuantLayer> layers;
  QuantTensor W_fc;                                     // Q x M
  Eigen::Matrix<std::int16_t, Eigen::Dynamic, 1> b_fc;  // Q8.8
  std::int16_t theta_x_raw = 0;
  std::int16_t theta_h_raw = 0;
};

/// Quantizes a trained network. Per-tensor frac_bits is the largest f <= 7
/// with max|w| < 2^(7-f); weights are rounded to nearest even. Errors if any
/// |weight| >= 128, if a threshold is not a multiple of 1/256, or if a layer
/// is wide enough that a gate accumulator could leave 32 bits.
QuantModel quantize_model(const NetworkParams& p, const DeltaThresholds& th);

/// Engine state plus instrumentation. All buffers are sized at reset; the
/// step path performs no allocation.
struct DeltaStateFx {
  struct Layer {
    std::vector<std::int16_t> xhat, hhat, h, h_next;
    std::vector<std::int64_t> acc_x, acc_h;  // 3M, at scale wf + 8 per gate
  };
  std::vector<Layer> layers;

  std::int64_t steps = 0;
  std::int64_t mac_ops = 0;  // executed multiply-accumulates
  std::int64_t transmitted_x = 0, skipped_x = 0;
  std::int64_t transmitted_h = 0, skipped_h = 0;
  std::int64_t cycles = 0;  // 8-MAC datapath, excluding per-step overhead
};

DeltaStateFx engine_reset(const QuantModel& m);

/// One control tick: x is the Q8.8 input vector (N), y receives Q outputs.
void engine_step(const QuantModel& m, DeltaStateFx& st,
                 std::span<const std::int16_t> x, std::span<std::int16_t> y);

/// Float convenience wrapper: quantizes inputs, dequantizes outputs.
void engine_step(const QuantModel& m, DeltaStateFx& st,
                 std::span<const double> x, std::span<double> y);

/// Feeds the columns of x (N x T) through the engine; returns y (Q x T).
Eigen::MatrixXd engine_run(const QuantModel& m, DeltaStateFx& st,
                           const Eigen::MatrixXd& x);

struct CostReport {
  std::int64_t dense_ops_per_step = 0;   // 2 * weight count of the recurrent+fc path
  double effective_ops_per_step = 0.0;   // 2 * executed MACs / steps
  double op_reduction = 0.0;             // dense / effective
  double mean_cycles_per_step = 0.0;     // datapath + overhead
  double occupancy_x = 0.0;              // transmitted fraction, input streams
  double occupancy_h = 0.0;              // transmitted fraction, recurrent streams
  std::int64_t steps = 0;
};

/// Dense op count for an architecture: 2 * (sum_l 3M(in_l + M) + Q M).
std::int64_t dense_ops_per_step(const NetArch& arch);

CostReport cost_report(const QuantModel& m, const DeltaStateFx& st,
                       int overhead_cycles_per_step);

/// Binary container (magic "EDRN") for the quantized model.
void save_engine_model(const QuantModel& m, const std::filesystem::path& path);
QuantModel load_engine_model(const std::filesystem::path& path);

}  // namespace gaitclone
