#pragma once

// First-order iteration schemes with unit step size: gradient descent, heavy
// ball, Nesterov acceleration in extrapolation form (agd) and gradient-history
// form (agd2), and linearized ADMM with unit penalty. Oracles are expected
// to be scaled so that the gradient is 1-Lipschitz.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optinet/activation.hpp"
#include "optinet/tensor.hpp"

namespace optinet {

struct GradientOracle {
  std::size_t dim = 0;
  std::function<Vector(const Vector&)> gradient;
  std::function<double(const Vector&)> value;  // may be empty
};

/// Oracle for the induced objective of an activation and a symmetric U.
GradientOracle make_oracle(const InducedObjective& objective);
/// f(z) = z^T A z / 2 - b^T z
GradientOracle quadratic_oracle(Matrix a, Vector b);

/// theta_0 = 1, (1 - theta_k) / theta_k^2 = 1 / theta_{k-1}^2.
class ThetaSchedule {
 public:
  ThetaSchedule() : thetas_{1.0} {}

  /// Appends and returns the next theta.
  double next();
  /// Extends the schedule so that index k exists.
  void ensure(std::size_t k);

  double operator[](std::size_t k) const { return thetas_.at(k); }
  std::size_t size() const noexcept { return thetas_.size(); }

  /// theta_k (1 - theta_{k-1}) / theta_{k-1} for k >= 1; zero for k = 0.
  double momentum(std::size_t k) const;

 private:
  std::vector<double> thetas_;
};

/// Triangular weights h_{k+1,j}, 0 <= j <= k, of the gradient-history form
/// y_{k+1} = y_k - sum_j h_{k+1,j} grad f(y_j).
///
/// Row k+1 is built from row k and the factor
/// c_{k+1} = theta_{k+1} (1 - theta_k) / theta_k:
///   h_{k+1,j}   = c h_{k,j}            j <= k-2
///   h_{k+1,k-1} = c (h_{k,k-1} - 1)
///   h_{k+1,k}   = 1 + c
class HCoefficients {
 public:
  /// With retain_rows = false only the most recent row is kept.
  explicit HCoefficients(bool retain_rows = true) : retain_rows_(retain_rows) {}

  /// Number of rows built so far; rows are indexed 1..rows().
  std::size_t rows() const noexcept { return count_; }
  /// h_{k,j} for 1 <= k <= rows(), 0 <= j < k.
  double operator()(std::size_t k, std::size_t j) const;
  std::span<const double> row(std::size_t k) const;
  std::span<const double> last_row() const;

  /// Appends row rows()+1 using an explicit factor c_{rows()+1}.
  void extend(double factor);
  /// Appends row rows()+1 using the theta schedule; the schedule must
  /// already reach theta_{rows()+1}.
  void extend(const ThetaSchedule& schedule);

 private:
  bool retain_rows_;
  std::size_t count_ = 0;
  std::vector<std::vector<double>> table_;  // table_[i] holds row i+1 (or only the last row)
};

/// Free-function form of HCoefficients::extend(schedule).
HCoefficients h_extend(HCoefficients h, const ThetaSchedule& schedule);

enum class Algorithm { gd, hb, agd, agd2, admm };

std::string_view algorithm_name(Algorithm a) noexcept;
/// "gd", "hb", "agd", "agd2", "admm"; throws ParameterError otherwise.
Algorithm algorithm_from_name(std::string_view name);

/// Momentum used by agd / agd2: the theta schedule by default, or the fixed
/// value (sqrt L - sqrt mu) / (sqrt L + sqrt mu) for strongly convex problems.
struct AlgoConfig {
  Algorithm algorithm = Algorithm::gd;
  double beta = 0.3;                    // heavy-ball momentum
  std::optional<double> fixed_momentum;  // agd / agd2 only

  static AlgoConfig gd() { return {Algorithm::gd, 0.0, std::nullopt}; }
  static AlgoConfig hb(double beta = 0.3) { return {Algorithm::hb, beta, std::nullopt}; }
  static AlgoConfig agd() { return {Algorithm::agd, 0.0, std::nullopt}; }
  static AlgoConfig agd2() { return {Algorithm::agd2, 0.0, std::nullopt}; }
  static AlgoConfig admm() { return {Algorithm::admm, 0.0, std::nullopt}; }
  static AlgoConfig agd_strongly_convex(double lipschitz, double mu);
  static AlgoConfig agd2_strongly_convex(double lipschitz, double mu);
};

double strongly_convex_momentum(double lipschitz, double mu);
/// ((sqrt kappa - 1) / (sqrt kappa + 1))^2
double tuned_heavy_ball_beta(double kappa);

/// Iteration state for one run of one scheme. The primary iterate is z for
/// gd and hb, the extrapolated point y for agd and agd2, and y for admm.
class OptimizerState {
 public:
  OptimizerState(const AlgoConfig& config, Vector z0);

  const AlgoConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return z_.dim(); }
  std::size_t k() const noexcept { return k_; }

  const Vector& primary() const noexcept;
  const Vector& z() const noexcept { return z_; }
  const Vector& y() const noexcept { return y_; }
  const Vector& lambda() const noexcept { return lambda_; }
  const Vector& previous_z() const noexcept { return z_prev_; }
  const HCoefficients& h() const noexcept { return h_; }
  const ThetaSchedule& schedule() const noexcept { return schedule_; }
  std::size_t gradient_history_size() const noexcept { return grad_history_.size(); }

  /// One iteration of the configured scheme.
  void step(const GradientOracle& oracle);

 private:
  double agd_momentum(std::size_t k);

  AlgoConfig config_;
  std::size_t k_ = 0;
  Vector z_;
  Vector z_prev_;
  Vector y_;
  Vector lambda_;
  ThetaSchedule schedule_;
  HCoefficients h_{false};
  std::vector<Vector> grad_history_;
};

/// Stateless wrapper: returns the advanced state.
OptimizerState step(OptimizerState state, const GradientOracle& oracle);

struct StopRule {
  std::size_t max_iters = 1000;
  /// Stop once |grad f(primary)| <= grad_tol (disabled when <= 0).
  double grad_tol = 0.0;
  /// Optional extra convergence test on the primary iterate.
  std::function<bool(const Vector&)> converged;
  /// Record every iterate (otherwise only the first and last).
  bool record = true;
};

struct Trajectory {
  std::vector<Vector> iterates;
  /// Second path where the scheme has one (x' for the ADMM network).
  std::vector<Vector> secondary;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Runs from z0 until a stop condition holds. With max_iters = 0 the
/// trajectory is exactly [z0].
Trajectory run(const AlgoConfig& config, const GradientOracle& oracle, const Vector& z0, const StopRule& stop);

}  // namespace optinet
