#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <regex>
#include <sstream>

#include "optinet/structures.hpp"

using namespace optinet;

namespace {

StructureSpec make_spec(StructureKind kind, std::size_t depth, std::size_t width,
                        CoefficientPolicy policy = CoefficientPolicy::paper_schedule()) {
  StructureSpec s;
  s.kind = kind;
  s.depth = depth;
  s.width = width;
  s.policy = std::move(policy);
  return s;
}

StructureSpec shared_spec(StructureKind kind, std::size_t depth, std::size_t width) {
  StructureSpec s = make_spec(kind, depth, width);
  s.sharing = Sharing::shared;
  return s;
}

double max_deviation(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::map<std::string, int> in_degrees(const std::string& dot) {
  std::map<std::string, int> deg;
  const std::regex edge(R"((\w+) -> (\w+))");
  for (auto it = std::sregex_iterator(dot.begin(), dot.end(), edge); it != std::sregex_iterator(); ++it) {
    ++deg[(*it)[2].str()];
  }
  return deg;
}

}  // namespace

TEST(Structures, NamesRoundTrip) {
  for (StructureKind k : all_structure_kinds()) EXPECT_EQ(structure_from_name(structure_name(k)), k);
  EXPECT_THROW(structure_from_name("transformer"), ParameterError);
}

TEST(Structures, IdentityWeightReluFixesNonnegativeInput) {
  StructureSpec s = shared_spec(StructureKind::feedforward, 6, 3);
  s.activation = Activation::relu();
  const Vector x0{0.5, 0.0, 2.0};
  const Trajectory t = forward_shared(s, Matrix::identity(3), x0);
  ASSERT_EQ(t.iterates.size(), 7u);
  for (const Vector& x : t.iterates) EXPECT_EQ(x, x0);
}

TEST(Structures, HeavyBallWithZeroBetaIsFeedforward) {
  RngStream rng(1);
  const Matrix w = random_spd(5, 0.1, 1.0, rng);
  const Vector x0 = gaussian(5, rng);
  StructureSpec hb = shared_spec(StructureKind::hb_net, 10, 5);
  hb.hb_beta = 0.0;
  const Trajectory a = forward_shared(shared_spec(StructureKind::feedforward, 10, 5), w, x0);
  const Trajectory b = forward_shared(hb, w, x0);
  for (std::size_t k = 0; k <= 10; ++k) EXPECT_EQ(a.iterates[k], b.iterates[k]);
}

TEST(Structures, Agd2FirstLayerIsPlainLayer) {
  RngStream rng(2);
  const Matrix w = random_spd(4, 0.1, 1.0, rng);
  const Vector x0 = gaussian(4, rng);
  const Trajectory t = forward_shared(shared_spec(StructureKind::agd2_net, 3, 4), w, x0);
  EXPECT_LE(max_deviation(t.iterates[1], Activation::sigmoid().phi(w * x0)), 1e-15);
}

TEST(Structures, SharedRecurrencesMatchHandIteration) {
  RngStream rng(3);
  const Matrix w = random_spd(4, 0.1, 1.0, rng);
  const Vector x0 = gaussian(4, rng);
  const Activation act = Activation::sigmoid();
  const std::size_t depth = 8;

  // hb_net: x_{k+1} = Phi(W x_k) + beta (x_k - x_{k-1})
  {
    StructureSpec s = shared_spec(StructureKind::hb_net, depth, 4);
    s.hb_beta = 0.4;
    const Trajectory t = forward_shared(s, w, x0);
    Vector prev = x0;
    Vector x = x0;
    for (std::size_t k = 0; k < depth; ++k) {
      Vector next = act.phi(w * x) + 0.4 * (x - prev);
      prev = x;
      x = next;
      EXPECT_LE(max_deviation(t.iterates[k + 1], x), 1e-14);
    }
  }
  // agd_net: x_{k+1} = Phi(W (x_k + beta_k (x_k - x_{k-1})))
  {
    const Trajectory t = forward_shared(shared_spec(StructureKind::agd_net, depth, 4), w, x0);
    ThetaSchedule theta;
    theta.ensure(depth);
    Vector prev = x0;
    Vector x = x0;
    for (std::size_t k = 0; k < depth; ++k) {
      Vector next = act.phi(w * (x + theta.momentum(k) * (x - prev)));
      prev = x;
      x = next;
      EXPECT_LE(max_deviation(t.iterates[k + 1], x), 1e-14);
    }
  }
}

TEST(Structures, ResNetRecurrenceFromHeavyBallCoefficients) {
  RngStream rng(4);
  const std::size_t d = 4;
  std::vector<double> coef;
  for (std::size_t k = 0; k < d; ++k) coef.insert(coef.end(), {1.0, 0.0});
  const StructureSpec hb = make_spec(StructureKind::hb_net, d, 3, CoefficientPolicy::constants(coef));
  const StructureParams p = init_params(hb, rng);
  const Vector x0 = gaussian(3, rng);
  const ParamForward f = forward_param(hb, p, x0);
  Vector x = x0;
  for (std::size_t k = 0; k < d; ++k) x = Activation::sigmoid().phi(p.weights[k] * x) + x;
  EXPECT_LE(max_deviation(f.output, x), 1e-14);
}

TEST(Structures, TwoTermRecurrenceHasPeriodSix) {
  const std::size_t d = 13;
  std::vector<double> coef;
  for (std::size_t k = 0; k < d; ++k) coef.insert(coef.end(), {1.0, -1.0});
  StructureSpec s = make_spec(StructureKind::hb_net, d, 2, CoefficientPolicy::constants(coef));
  s.activation = Activation(ActivationKind::tanh);
  RngStream rng(1);
  StructureParams p = init_params(s, rng);
  for (Matrix& m : p.weights) m.fill(0.0);
  const Vector a{1.5, -2.0};
  const ParamForward f = forward_param(s, p, a);
  // x_{-1} = x_0 = a gives x_1 = 0 and then a, 0, -a, -a, 0, a, a, 0, ...
  const std::vector<Vector> cycle{a, Vector(2), -1.0 * a, -1.0 * a, Vector(2), a};
  for (std::size_t k = 0; k <= d; ++k) {
    const Matrix& out = f.state.outputs[k];
    EXPECT_EQ(out.column(0), cycle[k % 6]) << "k=" << k;
  }
}

TEST(Structures, Agd2RunningFormMatchesExplicitHistory) {
  RngStream rng(5);
  for (double residual : {1.0, 0.1}) {
    StructureSpec sched = make_spec(StructureKind::agd2_net, 12, 6);
    sched.agd2_residual = residual;
    StructureSpec explicit_form = sched;
    explicit_form.policy = CoefficientPolicy::constants(schedule_coefficients(sched));
    const StructureParams p = init_params(sched, rng);
    Matrix x0(6, 5);
    for (double& v : x0.values()) v = rng.normal();
    const BatchForward a = forward_batch(sched, p, x0);
    const BatchForward b = forward_batch(explicit_form, p, x0);
    double dev = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) {
      dev = std::max(dev, std::abs(a.value().values()[i] - b.value().values()[i]));
    }
    EXPECT_LE(dev, 1e-12) << "residual " << residual;
  }
}

TEST(Structures, BatchForwardMatchesPerSampleForward) {
  RngStream rng(6);
  for (StructureKind kind : all_structure_kinds()) {
    StructureSpec s = make_spec(kind, 4, 3);
    s.bias = true;
    StructureParams p = init_params(s, rng);
    for (Matrix& b : p.biases) for (double& v : b.values()) v = 0.1 * rng.normal();
    Matrix x0(3, 4);
    for (double& v : x0.values()) v = rng.normal();
    const BatchForward batch = forward_batch(s, p, x0);
    for (std::size_t c = 0; c < 4; ++c) {
      const ParamForward single = forward_param(s, p, x0.column(c));
      EXPECT_LE(max_deviation(single.output, batch.value().column(c)), 1e-14) << structure_name(kind);
    }
  }
}

TEST(Structures, ParamCounts) {
  const std::size_t d = 5;
  const std::size_t w = 7;
  EXPECT_EQ(param_count(make_spec(StructureKind::feedforward, d, w)), d * w * w);
  EXPECT_EQ(param_count(make_spec(StructureKind::hb_net, d, w)), d * w * w);
  EXPECT_EQ(param_count(make_spec(StructureKind::hb_net, d, w, CoefficientPolicy::learnable())), d * w * w + 2 * d);
  StructureSpec shared = make_spec(StructureKind::feedforward, d, w);
  shared.sharing = Sharing::shared;
  EXPECT_EQ(param_count(shared), w * w);
  StructureSpec biased = make_spec(StructureKind::feedforward, d, w);
  biased.bias = true;
  EXPECT_EQ(param_count(biased), d * w * w + d * w);
}

TEST(Structures, CoefficientArityIsValidated) {
  EXPECT_THROW(make_spec(StructureKind::hb_net, 3, 2, CoefficientPolicy::constants({1.0})).validate(), ParameterError);
  EXPECT_THROW(make_spec(StructureKind::feedforward, 0, 2).validate(), ParameterError);
  EXPECT_NO_THROW(make_spec(StructureKind::agd2_net, 3, 2, CoefficientPolicy::constants(std::vector<double>(12)))
                      .validate());
}

TEST(Structures, InitIsXavierUniformAndDeterministic) {
  const StructureSpec s = make_spec(StructureKind::feedforward, 3, 32);
  RngStream a(9);
  RngStream b(9);
  const StructureParams pa = init_params(s, a);
  EXPECT_EQ(pa, init_params(s, b));
  const double bound = std::sqrt(6.0 / 64.0);
  double maxabs = 0.0;
  for (const Matrix& m : pa.weights) for (double v : m.values()) maxabs = std::max(maxabs, std::abs(v));
  EXPECT_LE(maxabs, bound);
  EXPECT_GT(maxabs, 0.9 * bound);
}

TEST(Structures, CheckParamsRejectsWrongShapes) {
  const StructureSpec s = make_spec(StructureKind::feedforward, 2, 3);
  RngStream rng(1);
  StructureParams p = init_params(s, rng);
  p.weights.pop_back();
  EXPECT_THROW(check_params(s, p), ParameterError);
}

TEST(DotExport, FeedforwardIsChain) {
  const std::string dot = export_dot(make_spec(StructureKind::feedforward, 3, 4));
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  const auto deg = in_degrees(dot);
  EXPECT_EQ(std::count(dot.begin(), dot.end(), '>'), 6);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(deg.at("op" + std::to_string(k)), 1);
    EXPECT_EQ(deg.at("layer" + std::to_string(k + 1)), 1);
  }
  EXPECT_EQ(dot.find("op3"), std::string::npos);
}

TEST(DotExport, HeavyBallInDegreeIsThree) {
  const auto deg = in_degrees(export_dot(make_spec(StructureKind::hb_net, 5, 4)));
  for (int k = 2; k <= 5; ++k) EXPECT_EQ(deg.at("layer" + std::to_string(k)), 3) << k;
}

TEST(DotExport, Agd2InDegreeGrowsWithDepth) {
  const auto deg = in_degrees(export_dot(make_spec(StructureKind::agd2_net, 5, 4)));
  for (int k = 0; k < 5; ++k) EXPECT_EQ(deg.at("layer" + std::to_string(k + 1)), 2 * (k + 1)) << k;
}

TEST(DotExport, Deterministic) {
  for (StructureKind k : all_structure_kinds()) {
    EXPECT_EQ(export_dot(make_spec(k, 4, 3)), export_dot(make_spec(k, 4, 3)));
  }
}
