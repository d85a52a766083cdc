#include "optinet/optimizers.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace optinet {

GradientOracle make_oracle(const InducedObjective& objective) {
  GradientOracle oracle;
  oracle.dim = objective.dim();
  oracle.gradient = [objective](const Vector& z) { return objective.gradient(z); };
  oracle.value = [objective](const Vector& z) { return objective.value(z); };
  return oracle;
}

GradientOracle quadratic_oracle(Matrix a, Vector b) {
  if (!a.square() || a.rows() != b.dim()) throw DimensionError("quadratic_oracle: shape mismatch");
  GradientOracle oracle;
  oracle.dim = b.dim();
  oracle.gradient = [a, b](const Vector& z) { return a * z - b; };
  oracle.value = [a, b](const Vector& z) { return 0.5 * dot(z, a * z) - dot(b, z); };
  return oracle;
}

double ThetaSchedule::next() {
  const double p2 = thetas_.back() * thetas_.back();
  // positive root of theta^2 + p2 theta - p2 = 0, rationalized
  const double theta = 2.0 * p2 / (p2 + std::sqrt(p2 * p2 + 4.0 * p2));
  thetas_.push_back(theta);
  return theta;
}

void ThetaSchedule::ensure(std::size_t k) {
  while (thetas_.size() <= k) next();
}

double ThetaSchedule::momentum(std::size_t k) const {
  if (k == 0) return 0.0;
  const double prev = thetas_.at(k - 1);
  return thetas_.at(k) * (1.0 - prev) / prev;
}

double HCoefficients::operator()(std::size_t k, std::size_t j) const {
  const auto r = row(k);
  if (j >= r.size()) throw DimensionError("HCoefficients: column index out of range");
  return r[j];
}

std::span<const double> HCoefficients::row(std::size_t k) const {
  if (k == 0 || k > count_) throw DimensionError("HCoefficients: row index out of range");
  if (!retain_rows_) {
    if (k != count_) throw StateError("HCoefficients: only the most recent row is retained");
    return table_.back();
  }
  return table_[k - 1];
}

std::span<const double> HCoefficients::last_row() const {
  if (count_ == 0) throw StateError("HCoefficients: no rows built yet");
  return table_.back();
}

void HCoefficients::extend(double factor) {
  // building row k+1 from row k
  const std::size_t k = count_;
  std::vector<double> next(k + 1);
  if (k >= 1) {
    const std::vector<double>& prev = table_.back();
    for (std::size_t j = 0; j + 2 <= k; ++j) next[j] = factor * prev[j];
    next[k - 1] = factor * (prev[k - 1] - 1.0);
  }
  next[k] = 1.0 + factor;
  if (retain_rows_) {
    table_.push_back(std::move(next));
  } else {
    table_.assign(1, std::move(next));
  }
  ++count_;
}

void HCoefficients::extend(const ThetaSchedule& schedule) {
  const std::size_t k = count_;
  if (schedule.size() <= k + 1) {
    throw StateError("HCoefficients::extend: theta schedule must reach index " + std::to_string(k + 1));
  }
  extend(schedule.momentum(k + 1));
}

HCoefficients h_extend(HCoefficients h, const ThetaSchedule& schedule) {
  h.extend(schedule);
  return h;
}

namespace {

constexpr std::array<std::string_view, 5> kAlgorithmNames{"gd", "hb", "agd", "agd2", "admm"};

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept { return kAlgorithmNames[static_cast<std::size_t>(a)]; }

Algorithm algorithm_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kAlgorithmNames.size(); ++i) {
    if (kAlgorithmNames[i] == name) return static_cast<Algorithm>(i);
  }
  throw ParameterError("unknown algorithm '" + std::string(name) + "'");
}

double strongly_convex_momentum(double lipschitz, double mu) {
  if (!(mu > 0.0) || !(lipschitz >= mu)) {
    std::ostringstream msg;
    msg << "strongly convex momentum needs 0 < mu <= L (got L=" << lipschitz << ", mu=" << mu << ")";
    throw ParameterError(msg.str());
  }
  const double sl = std::sqrt(lipschitz);
  const double sm = std::sqrt(mu);
  return (sl - sm) / (sl + sm);
}

double tuned_heavy_ball_beta(double kappa) {
  if (!(kappa >= 1.0)) throw ParameterError("tuned_heavy_ball_beta: kappa must be >= 1");
  const double s = std::sqrt(kappa);
  const double r = (s - 1.0) / (s + 1.0);
  return r * r;
}

AlgoConfig AlgoConfig::agd_strongly_convex(double lipschitz, double mu) {
  return {Algorithm::agd, 0.0, strongly_convex_momentum(lipschitz, mu)};
}

AlgoConfig AlgoConfig::agd2_strongly_convex(double lipschitz, double mu) {
  return {Algorithm::agd2, 0.0, strongly_convex_momentum(lipschitz, mu)};
}

OptimizerState::OptimizerState(const AlgoConfig& config, Vector z0)
    : config_(config), z_(std::move(z0)), z_prev_(z_), y_(z_), lambda_(z_.dim(), 0.0) {
  if (z_.dim() == 0) throw DimensionError("OptimizerState: empty initial point");
}

const Vector& OptimizerState::primary() const noexcept {
  switch (config_.algorithm) {
    case Algorithm::gd:
    case Algorithm::hb:
      return z_;
    default:
      return y_;
  }
}

double OptimizerState::agd_momentum(std::size_t k) {
  if (config_.fixed_momentum) return *config_.fixed_momentum;
  schedule_.ensure(k);
  return schedule_.momentum(k);
}

void OptimizerState::step(const GradientOracle& oracle) {
  if (oracle.dim != z_.dim()) {
    std::ostringstream msg;
    msg << "optimizer step: state dim " << z_.dim() << " but oracle dim " << oracle.dim;
    throw DimensionError(msg.str());
  }
  switch (config_.algorithm) {
    case Algorithm::gd: {
      z_ -= oracle.gradient(z_);
      y_ = z_;
      break;
    }
    case Algorithm::hb: {
      Vector next = z_ - oracle.gradient(z_);
      for (std::size_t i = 0; i < next.dim(); ++i) next[i] += config_.beta * (z_[i] - z_prev_[i]);
      z_prev_ = std::move(z_);
      z_ = std::move(next);
      y_ = z_;
      break;
    }
    case Algorithm::agd: {
      Vector next = y_ - oracle.gradient(y_);
      const double beta = agd_momentum(k_ + 1);
      Vector y_next = next;
      for (std::size_t i = 0; i < next.dim(); ++i) y_next[i] += beta * (next[i] - z_[i]);
      z_prev_ = std::move(z_);
      z_ = std::move(next);
      y_ = std::move(y_next);
      break;
    }
    case Algorithm::agd2: {
      grad_history_.push_back(oracle.gradient(y_));
      if (config_.fixed_momentum) {
        h_.extend(*config_.fixed_momentum);
      } else {
        schedule_.ensure(k_ + 1);
        h_.extend(schedule_);
      }
      const auto row = h_.last_row();
      for (std::size_t j = 0; j <= k_; ++j) axpy(-row[j], grad_history_[j], y_);
      z_ = y_;
      break;
    }
    case Algorithm::admm: {
      // both proximal subproblems are quadratics with closed-form minimizers
      const Vector gz = oracle.gradient(z_);
      const Vector gy = oracle.gradient(y_);
      Vector z_next(z_.dim());
      for (std::size_t i = 0; i < z_.dim(); ++i) z_next[i] = 0.5 * (z_[i] - gz[i] + y_[i] - lambda_[i]);
      Vector y_next(y_.dim());
      for (std::size_t i = 0; i < y_.dim(); ++i) y_next[i] = 0.5 * (y_[i] - gy[i] + z_next[i] + lambda_[i]);
      for (std::size_t i = 0; i < y_.dim(); ++i) lambda_[i] += z_next[i] - y_next[i];
      z_prev_ = std::move(z_);
      z_ = std::move(z_next);
      y_ = std::move(y_next);
      break;
    }
  }
  ++k_;
}

OptimizerState step(OptimizerState state, const GradientOracle& oracle) {
  state.step(oracle);
  return state;
}

Trajectory run(const AlgoConfig& config, const GradientOracle& oracle, const Vector& z0, const StopRule& stop) {
  if (z0.dim() != oracle.dim) throw DimensionError("run: initial point and oracle dimensions differ");
  OptimizerState state(config, z0);
  Trajectory traj;
  traj.iterates.push_back(z0);

  auto done = [&](const Vector& x) {
    if (stop.converged && stop.converged(x)) return true;
    if (stop.grad_tol > 0.0 && norm(oracle.gradient(x)) <= stop.grad_tol) return true;
    return false;
  };

  traj.converged = done(state.primary());
  while (!traj.converged && state.k() < stop.max_iters) {
    state.step(oracle);
    if (stop.record) traj.iterates.push_back(state.primary());
    traj.converged = done(state.primary());
  }
  traj.iterations = state.k();
  if (!stop.record && state.k() > 0) traj.iterates.push_back(state.primary());
  return traj;
}

}  // namespace optinet
