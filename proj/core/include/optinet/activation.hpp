#pragma once

#include <array>
#include <cmath>
#include <string>
#include <span>
#include <string_view>

#include "optinet/tensor.hpp"

namespace optinet {

enum class ActivationKind { sigmoid, tanh, softplus, softsign, relu, leaky_relu, elu, swish, identity };

/// An activation Phi together with its derivative and its antiderivative Psi.
///
/// Psi is normalized so that Psi(0) = 0. For softplus and swish the
/// antiderivative involves a dilogarithm; those kinds integrate Phi
/// numerically (adaptive Simpson, absolute tolerance 1e-10) instead.
class Activation {
 public:
  explicit Activation(ActivationKind kind) : Activation(kind, default_param_for(kind)) {}
  /// alpha for leaky_relu (must lie in (0,1)), a for elu (must be > 0);
  /// ignored by the other kinds.
  Activation(ActivationKind kind, double param);

  static Activation sigmoid() { return Activation(ActivationKind::sigmoid); }
  static Activation relu() { return Activation(ActivationKind::relu); }
  static Activation leaky_relu(double alpha = 0.01) { return Activation(ActivationKind::leaky_relu, alpha); }
  static Activation elu(double a = 1.0) { return Activation(ActivationKind::elu, a); }
  static Activation identity() { return Activation(ActivationKind::identity); }

  /// Lowercase names: "sigmoid", "tanh", "softplus", "softsign", "relu",
  /// "leaky_relu", "elu", "swish", "identity". Throws ParameterError otherwise.
  static Activation from_name(std::string_view name);
  static Activation from_name(std::string_view name, double param);
  static double default_param_for(ActivationKind kind) noexcept;

  ActivationKind kind() const noexcept { return kind_; }
  double param() const noexcept { return param_; }
  std::string_view name() const noexcept;

  double phi(double x) const noexcept;
  double dphi(double x) const noexcept;
  double psi(double x) const;

  Vector phi(const Vector& x) const;

  /// out[i] = Phi(x[i]) over a contiguous block; x and out may alias.
  void apply(std::span<const double> x, std::span<double> out) const;
  /// acc[i] += g[i] * Phi'(x[i]), where y = Phi(x).
  void accumulate_backward(std::span<const double> x, std::span<const double> y, std::span<const double> g,
                           std::span<double> acc) const;

  /// True when Psi is evaluated by quadrature rather than closed form.
  bool psi_by_quadrature() const noexcept {
    return kind_ == ActivationKind::softplus || kind_ == ActivationKind::swish;
  }
  /// True when Phi' is discontinuous at 0.
  bool has_kink() const noexcept {
    return kind_ == ActivationKind::relu || kind_ == ActivationKind::leaky_relu || kind_ == ActivationKind::elu;
  }

  friend bool operator==(const Activation&, const Activation&) = default;

 private:
  ActivationKind kind_;
  double param_;
};

/// Every activation kind with its default parameter.
std::array<Activation, 9> all_activations();
/// The eight kinds with a nontrivial objective (everything except identity).
std::array<Activation, 8> nonlinear_activations();

/// Adaptive Simpson quadrature of a smooth integrand on [a, b].
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth = 48);

/// f(z) = |z|^2/2 - sum_i Psi(U_i^T z), whose unit gradient step reproduces
/// one feedforward layer Phi(U U z).
class InducedObjective {
 public:
  /// u must be square and symmetric.
  InducedObjective(Matrix u, Activation act);

  const Matrix& u() const noexcept { return u_; }
  const Activation& activation() const noexcept { return act_; }
  std::size_t dim() const noexcept { return u_.rows(); }

  double value(const Vector& z) const;
  /// z - U Phi(U z)
  Vector gradient(const Vector& z) const;

 private:
  Matrix u_;
  Activation act_;
};

// ---------------------------------------------------------------------------

namespace detail {

template <typename F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace optinet
