#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gaitclone/rnn.hpp"
#include "support/finite_diff.hpp"
#include "support/scalar_gru.hpp"
#include "support/tmpdir.hpp"

using namespace gaitclone;

namespace {

std::vector<Eigen::MatrixXd> random_sequence(int N, int B, int T, Rng& rng) {
  std::vector<Eigen::MatrixXd> x(static_cast<std::size_t>(T));
  for (auto& xt : x) {
    xt.resize(N, B);
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
      for (Eigen::Index j = 0; j < xt.cols(); ++j) {
        xt(i, j) = rng.uniform(-1.0, 1.0);
      }
    }
  }
  return x;
}

NetArch small_arch(int N, int M, int Q = 2, int layers = 2) {
  NetArch a;
  a.n_layers = layers;
  a.input_dim = N;
  a.hidden_dim = M;
  a.output_dim = Q;
  return a;
}

}  // namespace

TEST_CASE("zero network is a fixed point: h stays 0 and y is the bias") {
  NetworkParams p = make_network(small_arch(3, 4));
  p.b_fc << 0.75, -1.5;
  Rng rng(11);
  const auto x = random_sequence(3, 2, 6, rng);
  const ForwardResult fwd = gru_forward(p, x);
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (const auto& layer : fwd.layers) {
      CHECK(layer.h[t].cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(fwd.y[t](0, 0) == 0.75);
    CHECK(fwd.y[t](1, 0) == -1.5);
  }
}

TEST_CASE("saturated update gate freezes the state at h0") {
  Rng rng(21);
  NetworkParams p = init_params(small_arch(3, 5), rng);
  for (auto& lp : p.layers) {
    lp.b_iz.setConstant(20.0);
    lp.b_hz.setConstant(20.0);
  }
  std::vector<Eigen::MatrixXd> h0(2);
  h0[0].resize(5, 1);
  h0[0] << 0.3, -0.4, 0.1, 0.7, -0.2;
  h0[1].resize(5, 1);
  h0[1] << -0.6, 0.2, 0.5, -0.1, 0.05;
  const auto x = random_sequence(3, 1, 8, rng);
  const ForwardResult fwd = gru_forward(p, x, &h0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    CHECK((fwd.layers[0].h[t] - h0[0]).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fwd.layers[1].h[t] - h0[1]).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("forward matches the nested-loop scalar reference to 1e-12") {
  Rng rng(31);
  // The documented case first: M=4, N=3, T=5.
  for (int draw = 0; draw < 12; ++draw) {
    const int N = draw == 0 ? 3 : 2 + static_cast<int>(rng.next_u64() % 3);
    const int M = draw == 0 ? 4 : 2 + static_cast<int>(rng.next_u64() % 5);
    const int T = draw == 0 ? 5 : 2 + static_cast<int>(rng.next_u64() % 5);
    const int B = draw == 0 ? 2 : 1 + static_cast<int>(rng.next_u64() % 3);
    NetworkParams p = init_params(small_arch(N, M), rng);
    const auto x = random_sequence(N, B, T, rng);
    const ForwardResult fwd = gru_forward(p, x);

    const oracle::ScalarNet net = oracle::to_scalar(p);
    for (int b = 0; b < B; ++b) {
      std::vector<std::vector<double>> xb(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) {
        xb[t].resize(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) xb[t][i] = x[t](i, b);
      }
      const auto yb = oracle::scalar_gru(net, xb);
      for (int t = 0; t < T; ++t) {
        for (int q = 0; q < 2; ++q) {
          CHECK(std::abs(fwd.y[t](q, b) - yb[t][q]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("hidden states stay inside (-1, 1)") {
  Rng rng(41);
  NetworkParams p = init_params(small_arch(5, 8), rng);
  const auto x = random_sequence(5, 3, 200, rng);
  const ForwardResult fwd = gru_forward(p, x);
  for (const auto& layer : fwd.layers) {
    for (const auto& h : layer.h) {
      CHECK(h.cwiseAbs().maxCoeff() < 1.0);
    }
  }
}

TEST_CASE("zero output gradient backpropagates to zero everywhere") {
  Rng rng(51);
  NetworkParams p = init_params(small_arch(4, 6), rng);
  const auto x = random_sequence(4, 2, 7, rng);
  const ForwardResult fwd = gru_forward(p, x);
  std::vector<Eigen::MatrixXd> dy(x.size(), Eigen::MatrixXd::Zero(2, 2));
  std::vector<Eigen::MatrixXd> gh0;
  const NetworkGrads g = gru_backward(p, fwd, dy, &gh0);
  for (double v : checker::flatten(g)) CHECK(v == 0.0);
  for (const auto& m : gh0) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single step readout gradient lands on the output bias exactly") {
  Rng rng(61);
  NetworkParams p = init_params(small_arch(3, 4), rng);
  const auto x = random_sequence(3, 1, 1, rng);
  const ForwardResult fwd = gru_forward(p, x);
  std::vector<Eigen::MatrixXd> dy(1);
  dy[0].resize(2, 1);
  dy[0] << 0.37, -1.25;
  const NetworkGrads g = gru_backward(p, fwd, dy);
  CHECK(g.b_fc[0] == 0.37);
  CHECK(g.b_fc[1] == -1.25);
}

TEST_CASE("BPTT matches central finite differences on 20 random nets") {
  Rng rng(71);
  for (int net = 0; net < 20; ++net) {
    const int N = 2 + static_cast<int>(rng.next_u64() % 4);
    const int M = 2 + static_cast<int>(rng.next_u64() % 7);  // <= 8
    const int T = 2 + static_cast<int>(rng.next_u64() % 9);  // <= 10
    const int B = 1 + static_cast<int>(rng.next_u64() % 2);
    NetworkParams p = init_params(small_arch(N, M), rng);
    const auto x = random_sequence(N, B, T, rng);
    // A fixed random linear functional of the outputs keeps the loss smooth
    // while exercising every output path.
    std::vector<Eigen::MatrixXd> w(static_cast<std::size_t>(T));
    for (auto& wt : w) {
      wt.resize(2, B);
      for (Eigen::Index i = 0; i < wt.size(); ++i) {
        wt(i) = rng.uniform(-1.0, 1.0);
      }
    }
    const auto loss = [&x, &w](const NetworkParams& q) {
      const ForwardResult f = gru_forward(q, x);
      double acc = 0.0;
      for (std::size_t t = 0; t < f.y.size(); ++t) {
        acc += (f.y[t].array() * w[t].array()).sum();
      }
      return acc;
    };

    const ForwardResult fwd = gru_forward(p, x);
    const NetworkGrads g = gru_backward(p, fwd, w);
    const std::vector<double> analytic = checker::flatten(g);
    const std::vector<double> numeric = checker::fd_gradient(p, loss, 1e-6);
    REQUIRE(analytic.size() == numeric.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      worst = std::max(worst, checker::rel_err(analytic[i], numeric[i], 1e-4));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("initial-state gradient matches finite differences") {
  Rng rng(81);
  const int N = 3, M = 4, T = 5, B = 2;
  NetworkParams p = init_params(small_arch(N, M), rng);
  const auto x = random_sequence(N, B, T, rng);
  std::vector<Eigen::MatrixXd> h0(2, Eigen::MatrixXd::Zero(M, B));
  for (auto& h : h0) {
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = rng.uniform(-0.5, 0.5);
  }
  std::vector<Eigen::MatrixXd> w(static_cast<std::size_t>(T));
  for (auto& wt : w) {
    wt.resize(2, B);
    for (Eigen::Index i = 0; i < wt.size(); ++i) wt(i) = rng.uniform(-1.0, 1.0);
  }

  const ForwardResult fwd = gru_forward(p, x, &h0);
  std::vector<Eigen::MatrixXd> gh0;
  gru_backward(p, fwd, w, &gh0);

  for (std::size_t l = 0; l < h0.size(); ++l) {
    for (Eigen::Index i = 0; i < h0[l].size(); ++i) {
      const double saved = h0[l](i);
      const auto eval = [&](double v) {
        h0[l](i) = v;
        const ForwardResult f = gru_forward(p, x, &h0);
        double acc = 0.0;
        for (std::size_t t = 0; t < f.y.size(); ++t) {
          acc += (f.y[t].array() * w[t].array()).sum();
        }
        return acc;
      };
      const double fd = (eval(saved + 1e-6) - eval(saved - 1e-6)) / 2e-6;
      h0[l](i) = saved;
      CHECK(checker::rel_err(gh0[l](i), fd, 1e-4) < 1e-5);
    }
  }
}

TEST_CASE("mean absolute error reduction and subgradient") {
  std::vector<Eigen::MatrixXd> y(1), t(1);
  y[0].resize(2, 1);
  t[0].resize(2, 1);
  y[0] << 1.0, 2.0;
  t[0] << 0.0, 0.0;
  CHECK(l1_loss(y, t) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(l1_loss(y, y) == 0.0);

  // Positive homogeneity.
  std::vector<Eigen::MatrixXd> ky(1), kt(1);
  ky[0] = 2.5 * y[0];
  kt[0] = 2.5 * t[0];
  CHECK(l1_loss(ky, kt) == doctest::Approx(2.5 * l1_loss(y, t)).epsilon(1e-15));

  // Subgradient: sign over element count, zero at ties.
  std::vector<Eigen::MatrixXd> yy(2), tt(2);
  yy[0].resize(2, 2);
  yy[1].resize(2, 2);
  tt[0].resize(2, 2);
  tt[1].resize(2, 2);
  yy[0] << 1.0, -3.0, 0.5, 0.5;   // row-major fill
  tt[0] << 0.0, 1.0, 0.5, 2.0;
  yy[1] << 0.0, 0.0, 1.0, -1.0;
  tt[1] << 1.0, -1.0, 1.0, -1.0;
  const auto dy = l1_grad(yy, tt);
  CHECK(dy[0](0, 0) == doctest::Approx(1.0 / 8));
  CHECK(dy[0](0, 1) == doctest::Approx(-1.0 / 8));
  CHECK(dy[0](1, 0) == 0.0);  // tie
  CHECK(dy[0](1, 1) == doctest::Approx(-1.0 / 8));
  CHECK(dy[1](0, 0) == doctest::Approx(-1.0 / 8));
  CHECK(dy[1](0, 1) == doctest::Approx(1.0 / 8));
  CHECK(dy[1](1, 1) == 0.0);  // tie

  // The subgradient agrees with finite differences away from ties.
  const double base = l1_loss(yy, tt);
  yy[0](0, 0) += 1e-7;
  CHECK(std::abs((l1_loss(yy, tt) - base) / 1e-7 - dy[0](0, 0)) < 1e-6);
}

TEST_CASE("network files round-trip bit-exactly and reject corruption") {
  Rng rng(91);
  NetworkParams p = init_params(small_arch(5, 6), rng);
  gaitclone::testing::TmpDir tmp("net");
  const auto path = tmp.path() / "net.dgru";
  save_network(p, path);
  const NetworkParams q = load_network(path);
  CHECK(q.arch.hidden_dim == 6);
  const auto a = checker::flatten(p);
  const auto b = checker::flatten(q);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);
  }

  // Corrupt the magic.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_network(path), std::runtime_error);

  // Truncation.
  save_network(p, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
  CHECK_THROWS_AS(load_network(path), std::runtime_error);

  // Trailing garbage.
  save_network(p, path);
  {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f << "x";
  }
  CHECK_THROWS_AS(load_network(path), std::runtime_error);
}
