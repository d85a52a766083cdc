#pragma once

// Numerical equivalence checks between network recurrences and the
// optimization iterations they are derived from, plus the convergence race.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "optinet/activation.hpp"
#include "optinet/optimizers.hpp"
#include "optinet/tensor.hpp"

namespace optinet {

inline constexpr double kLemma1Tolerance = 1e-9;
inline constexpr double kAgdFormsTolerance = 1e-8;
inline constexpr double kAdmmTolerance = 1e-9;
inline constexpr double kAntiderivativeTolerance = 1e-6;

struct EquivalenceReport {
  std::string check;
  double max_deviation = 0.0;
  std::vector<double> per_step;  // entry k compares x_k
  double tolerance = 0.0;
  bool pass = false;
};

/// |a - b| / (1 + |a|)
double relative_deviation(const Vector& reference, const Vector& other);

/// Builds a report from per-step deviations; pass iff max <= tolerance.
EquivalenceReport make_report(std::string check, std::vector<double> per_step, double tolerance);

/// Feedforward x_{k+1} = Phi(W x_k) against gradient descent on the induced
/// objective started at z_0 = U x_0 and mapped back through U^{-1}.
EquivalenceReport check_lemma1(const Activation& act, const Matrix& w, const Vector& x0, std::size_t layers,
                               double tolerance = kLemma1Tolerance);

/// Shared-weight agd2_net against agd_net. agd2_net follows the extrapolated
/// point, so x_k of agd2_net is compared with x_k + beta_k (x_k - x_{k-1})
/// of agd_net.
EquivalenceReport check_agd_forms(const Activation& act, const Matrix& w, const Vector& x0, std::size_t layers,
                                  double tolerance = kAgdFormsTolerance);

/// Shared-weight admm_net against linearized ADMM on the induced objective
/// (lambda_0 = 0, y_0 = z_0 = U x_0), with x = U^{-1} y and x' = U^{-1} z.
/// Per-step entries take the larger of the two path deviations.
EquivalenceReport check_admm_consistency(const Activation& act, const Matrix& w, const Vector& x0,
                                         std::size_t layers, double tolerance = kAdmmTolerance);

/// Central differences of Psi against Phi on an evenly spaced grid over
/// [lo, hi]; per_step holds |error| at each grid point.
EquivalenceReport check_antiderivative(const Activation& act, double lo = -5.0, double hi = 5.0,
                                       std::size_t points = 201, double step = 1e-6,
                                       double tolerance = kAntiderivativeTolerance);

struct RaceOptions {
  std::size_t max_iters = 1'000'000;
  std::vector<Algorithm> algorithms = {Algorithm::gd, Algorithm::hb, Algorithm::agd, Algorithm::agd2,
                                       Algorithm::admm};
};

struct RaceRow {
  Algorithm algorithm = Algorithm::gd;
  double kappa = 1.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Iterations until |z_k - z*| <= eps |z_0 - z*| on a random quadratic
/// with spectrum [1/kappa, 1]. hb uses the kappa-tuned beta; agd and agd2
/// use the strongly convex momentum.
std::vector<RaceRow> convergence_race(double kappa, std::size_t dim, double eps, RngStream& rng,
                                      const RaceOptions& options = {});

/// One line per report: name, max deviation, tolerance, PASS/FAIL.
void write_summary(std::ostream& os, const std::vector<EquivalenceReport>& reports);

}  // namespace optinet
