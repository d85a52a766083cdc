#include "optinet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "optinet/structures.hpp"

namespace optinet {

namespace {

void check_inputs(const char* name, const Matrix& w, const Vector& x0) {
  if (!w.square() || w.rows() != x0.dim()) {
    std::ostringstream msg;
    msg << name << ": W is " << w.rows() << "x" << w.cols() << " but x0 has dimension " << x0.dim();
    throw DimensionError(msg.str());
  }
}

StructureSpec shared_spec(StructureKind kind, const Activation& act, std::size_t width, std::size_t layers) {
  StructureSpec spec;
  spec.kind = kind;
  spec.depth = layers;
  spec.width = width;
  spec.sharing = Sharing::shared;
  spec.activation = act;
  return spec;
}

}  // namespace

double relative_deviation(const Vector& reference, const Vector& other) {
  return norm(reference - other) / (1.0 + norm(reference));
}

EquivalenceReport make_report(std::string check, std::vector<double> per_step, double tolerance) {
  EquivalenceReport r;
  r.check = std::move(check);
  r.per_step = std::move(per_step);
  r.tolerance = tolerance;
  for (double d : r.per_step) r.max_deviation = std::max(r.max_deviation, std::isnan(d) ? INFINITY : d);
  r.pass = r.max_deviation <= tolerance;
  return r;
}

EquivalenceReport check_lemma1(const Activation& act, const Matrix& w, const Vector& x0, std::size_t layers,
                               double tolerance) {
  check_inputs("check_lemma1", w, x0);
  const SpdRoot root = spd_root(w);
  if (layers == 0) return make_report("lemma1", {0.0}, tolerance);

  const Trajectory net = forward_shared(shared_spec(StructureKind::feedforward, act, x0.dim(), layers), w, x0);
  const GradientOracle oracle = make_oracle(InducedObjective(root.root, act));
  StopRule stop;
  stop.max_iters = layers;
  const Trajectory gd = run(AlgoConfig::gd(), oracle, root.root * x0, stop);

  std::vector<double> dev;
  for (std::size_t k = 0; k <= layers; ++k) {
    dev.push_back(relative_deviation(net.iterates[k], root.inverse_root * gd.iterates[k]));
  }
  return make_report("lemma1", std::move(dev), tolerance);
}

EquivalenceReport check_agd_forms(const Activation& act, const Matrix& w, const Vector& x0, std::size_t layers,
                                  double tolerance) {
  check_inputs("check_agd_forms", w, x0);
  spd_root(w);
  if (layers == 0) return make_report("agd_forms", {0.0}, tolerance);

  const std::size_t n = x0.dim();
  const Trajectory agd = forward_shared(shared_spec(StructureKind::agd_net, act, n, layers), w, x0);
  const Trajectory agd2 = forward_shared(shared_spec(StructureKind::agd2_net, act, n, layers), w, x0);

  ThetaSchedule theta;
  theta.ensure(layers);
  std::vector<double> dev;
  for (std::size_t k = 0; k <= layers; ++k) {
    const Vector& xk = agd.iterates[k];
    const Vector& xprev = agd.iterates[k == 0 ? 0 : k - 1];
    const double beta = theta.momentum(k);
    Vector extrapolated(n);
    for (std::size_t i = 0; i < n; ++i) extrapolated[i] = xk[i] + beta * (xk[i] - xprev[i]);
    dev.push_back(relative_deviation(extrapolated, agd2.iterates[k]));
  }
  return make_report("agd_forms", std::move(dev), tolerance);
}

EquivalenceReport check_admm_consistency(const Activation& act, const Matrix& w, const Vector& x0,
                                         std::size_t layers, double tolerance) {
  check_inputs("check_admm_consistency", w, x0);
  const SpdRoot root = spd_root(w);
  if (layers == 0) return make_report("admm_consistency", {0.0}, tolerance);

  const Trajectory net = forward_shared(shared_spec(StructureKind::admm_net, act, x0.dim(), layers), w, x0);
  const GradientOracle oracle = make_oracle(InducedObjective(root.root, act));
  OptimizerState state(AlgoConfig::admm(), root.root * x0);

  std::vector<double> dev{0.0};
  for (std::size_t k = 1; k <= layers; ++k) {
    state.step(oracle);
    const double dx = relative_deviation(net.iterates[k], root.inverse_root * state.y());
    const double dxp = relative_deviation(net.secondary[k], root.inverse_root * state.z());
    dev.push_back(std::max(dx, dxp));
  }
  return make_report("admm_consistency", std::move(dev), tolerance);
}

EquivalenceReport check_antiderivative(const Activation& act, double lo, double hi, std::size_t points, double step,
                                       double tolerance) {
  if (points < 2 || !(hi > lo)) throw ParameterError("check_antiderivative: need hi > lo and at least 2 points");
  if (!(step > 0.0)) throw ParameterError("check_antiderivative: step must be positive");
  std::vector<double> err;
  err.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double fd = (act.psi(x + step) - act.psi(x - step)) / (2.0 * step);
    err.push_back(std::abs(fd - act.phi(x)));
  }
  return make_report("antiderivative_" + std::string(act.name()), std::move(err), tolerance);
}

std::vector<RaceRow> convergence_race(double kappa, std::size_t dim, double eps, RngStream& rng,
                                      const RaceOptions& options) {
  if (!(kappa >= 1.0)) throw ParameterError("convergence_race: kappa must be >= 1");
  if (!(eps > 0.0)) throw ParameterError("convergence_race: eps must be > 0");
  if (dim == 0) throw ParameterError("convergence_race: dim must be positive");

  const double mu = 1.0 / kappa;
  Matrix a = random_spd(dim, mu, 1.0, rng);
  const Vector zstar = gaussian(dim, rng);
  const Vector z0 = gaussian(dim, rng);
  const Vector b = a * zstar;
  const GradientOracle oracle = quadratic_oracle(std::move(a), b);
  const double target = eps * norm(z0 - zstar);

  StopRule stop;
  stop.max_iters = options.max_iters;
  stop.record = false;
  stop.converged = [&](const Vector& z) { return norm(z - zstar) <= target; };

  std::vector<RaceRow> rows;
  for (Algorithm alg : options.algorithms) {
    AlgoConfig cfg;
    switch (alg) {
      case Algorithm::gd: cfg = AlgoConfig::gd(); break;
      case Algorithm::hb: cfg = AlgoConfig::hb(tuned_heavy_ball_beta(kappa)); break;
      case Algorithm::agd: cfg = AlgoConfig::agd_strongly_convex(1.0, mu); break;
      case Algorithm::agd2: cfg = AlgoConfig::agd2_strongly_convex(1.0, mu); break;
      case Algorithm::admm: cfg = AlgoConfig::admm(); break;
    }
    const Trajectory t = run(cfg, oracle, z0, stop);
    rows.push_back({alg, kappa, t.iterations, t.converged});
  }
  return rows;
}

void write_summary(std::ostream& os, const std::vector<EquivalenceReport>& reports) {
  const auto flags = os.flags();
  for (const auto& r : reports) {
    os << std::left << std::setw(28) << r.check << " max_dev=" << std::scientific << std::setprecision(3)
       << r.max_deviation << " tol=" << r.tolerance << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  os.flags(flags);
}

}  // namespace optinet
