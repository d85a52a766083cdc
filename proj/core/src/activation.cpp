#include "optinet/activation.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include <Eigen/Core>

namespace optinet {

namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kQuadratureTol = 1e-10;

struct NamedKind {
  std::string_view name;
  ActivationKind kind;
};

constexpr std::array<NamedKind, 9> kNames{{
    {"sigmoid", ActivationKind::sigmoid},
    {"tanh", ActivationKind::tanh},
    {"softplus", ActivationKind::softplus},
    {"softsign", ActivationKind::softsign},
    {"relu", ActivationKind::relu},
    {"leaky_relu", ActivationKind::leaky_relu},
    {"elu", ActivationKind::elu},
    {"swish", ActivationKind::swish},
    {"identity", ActivationKind::identity},
}};

double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow
double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

Activation::Activation(ActivationKind kind, double param) : kind_(kind), param_(param) {
  if (kind == ActivationKind::leaky_relu && !(param > 0.0 && param < 1.0)) {
    std::ostringstream msg;
    msg << "leaky_relu: alpha must lie in (0,1), got " << param;
    throw ParameterError(msg.str());
  }
  if (kind == ActivationKind::elu && !(param > 0.0)) {
    std::ostringstream msg;
    msg << "elu: a must be > 0, got " << param;
    throw ParameterError(msg.str());
  }
  if (kind != ActivationKind::leaky_relu && kind != ActivationKind::elu) param_ = 0.0;
}

double Activation::default_param_for(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::leaky_relu:
      return 0.01;
    case ActivationKind::elu:
      return 1.0;
    default:
      return 0.0;
  }
}

Activation Activation::from_name(std::string_view name) {
  for (const auto& entry : kNames) {
    if (entry.name == name) return Activation(entry.kind);
  }
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

Activation Activation::from_name(std::string_view name, double param) {
  return Activation(from_name(name).kind(), param);
}

std::string_view Activation::name() const noexcept {
  for (const auto& entry : kNames) {
    if (entry.kind == kind_) return entry.name;
  }
  return "unknown";
}

double Activation::phi(double x) const noexcept {
  switch (kind_) {
    case ActivationKind::sigmoid:
      return logistic(x);
    case ActivationKind::tanh:
      return std::tanh(x);
    case ActivationKind::softplus:
      return softplus(x);
    case ActivationKind::softsign:
      return x / (1.0 + std::abs(x));
    case ActivationKind::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::leaky_relu:
      return x > 0.0 ? x : param_ * x;
    case ActivationKind::elu:
      return x > 0.0 ? x : param_ * std::expm1(x);
    case ActivationKind::swish:
      return x * logistic(x);
    case ActivationKind::identity:
      return x;
  }
  return x;
}

// Kinked kinds take the right limit at 0.
double Activation::dphi(double x) const noexcept {
  switch (kind_) {
    case ActivationKind::sigmoid: {
      const double s = logistic(x);
      return s * (1.0 - s);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::softplus:
      return logistic(x);
    case ActivationKind::softsign: {
      const double d = 1.0 + std::abs(x);
      return 1.0 / (d * d);
    }
    case ActivationKind::relu:
      return x >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu:
      return x >= 0.0 ? 1.0 : param_;
    case ActivationKind::elu:
      return x >= 0.0 ? 1.0 : param_ * std::exp(x);
    case ActivationKind::swish: {
      const double s = logistic(x);
      return s + x * s * (1.0 - s);
    }
    case ActivationKind::identity:
      return 1.0;
  }
  return 1.0;
}

double Activation::psi(double x) const {
  switch (kind_) {
    case ActivationKind::sigmoid:
      // x + log(e^-x + 1) - log 2
      return softplus(x) - kLog2;
    case ActivationKind::tanh:
      // x + log(e^-2x + 1) - log 2 = log cosh x
      return std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))) - kLog2;
    case ActivationKind::softsign:
      return x > 0.0 ? x - std::log1p(x) : -x - std::log1p(-x);
    case ActivationKind::relu:
      return x > 0.0 ? 0.5 * x * x : 0.0;
    case ActivationKind::leaky_relu:
      return x > 0.0 ? 0.5 * x * x : 0.5 * param_ * x * x;
    case ActivationKind::elu:
      // a (e^x - x) shifted so that Psi(0) = 0
      return x > 0.0 ? 0.5 * x * x : param_ * (std::expm1(x) - x);
    case ActivationKind::identity:
      return 0.5 * x * x;
    case ActivationKind::softplus:
    case ActivationKind::swish:
      return adaptive_simpson([this](double t) { return phi(t); }, 0.0, x, kQuadratureTol);
  }
  return 0.0;
}

Vector Activation::phi(const Vector& x) const {
  Vector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] = phi(x[i]);
  return out;
}

namespace {

using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;

ConstArrayMap view(std::span<const double> s) { return {s.data(), static_cast<Eigen::Index>(s.size())}; }
ArrayMap view(std::span<double> s) { return {s.data(), static_cast<Eigen::Index>(s.size())}; }

// 1 / (1 + exp(-x)) with exp evaluated by range reduction and a degree-13
// polynomial, written so the compiler vectorizes both loops. Relative error
// stays below 1e-15. Safe when x and y alias.
void sigmoid_kernel(const double* x, double* y, std::size_t n) {
  constexpr double log2e = 1.4426950408889634074;
  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  constexpr double round_bias = 0x1.8p52;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = -x[i];
    const double lo = v < -708.0 ? -708.0 : v;
    y[i] = lo > 709.0 ? 709.0 : lo;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double v = y[i];
    const double shifted = v * log2e + round_bias;
    const double k = shifted - round_bias;
    double r = std::fma(-k, ln2_hi, v);
    r = std::fma(-k, ln2_lo, r);
    double p = 1.0 / 6227020800.0;
    p = std::fma(p, r, 1.0 / 479001600.0);
    p = std::fma(p, r, 1.0 / 39916800.0);
    p = std::fma(p, r, 1.0 / 3628800.0);
    p = std::fma(p, r, 1.0 / 362880.0);
    p = std::fma(p, r, 1.0 / 40320.0);
    p = std::fma(p, r, 1.0 / 5040.0);
    p = std::fma(p, r, 1.0 / 720.0);
    p = std::fma(p, r, 1.0 / 120.0);
    p = std::fma(p, r, 1.0 / 24.0);
    p = std::fma(p, r, 1.0 / 6.0);
    p = std::fma(p, r, 0.5);
    p = std::fma(p, r, 1.0);
    p = std::fma(p, r, 1.0);
    const double scale = std::bit_cast<double>((std::bit_cast<std::uint64_t>(shifted) + 1023) << 52);
    y[i] = 1.0 / (1.0 + p * scale);
  }
}

void require_equal_length(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("Activation: block lengths differ");
}

}  // namespace

void Activation::apply(std::span<const double> x, std::span<double> out) const {
  require_equal_length(x.size(), out.size());
  const auto in = view(x);
  auto dst = view(out);
  switch (kind_) {
    case ActivationKind::sigmoid:
      sigmoid_kernel(x.data(), out.data(), x.size());
      break;
    case ActivationKind::softplus:
      dst = in.max(0.0) + (-in.abs()).exp().log1p();
      break;
    case ActivationKind::swish: {
      std::array<double, 256> buf;
      for (std::size_t i = 0; i < x.size(); i += buf.size()) {
        const std::size_t m = std::min(buf.size(), x.size() - i);
        sigmoid_kernel(x.data() + i, buf.data(), m);
        for (std::size_t j = 0; j < m; ++j) out[i + j] = x[i + j] * buf[j];
      }
      break;
    }
    case ActivationKind::elu:
      dst = (in > 0.0).select(in, param_ * in.expm1());
      break;
    default:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = phi(x[i]);
      break;
  }
}

void Activation::accumulate_backward(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> g, std::span<double> acc) const {
  require_equal_length(x.size(), y.size());
  require_equal_length(x.size(), g.size());
  require_equal_length(x.size(), acc.size());
  const auto in = view(x);
  const auto out = view(y);
  const auto grad = view(g);
  auto dst = view(acc);
  switch (kind_) {
    case ActivationKind::sigmoid:
      dst += grad * out * (1.0 - out);
      break;
    case ActivationKind::tanh:
      dst += grad * (1.0 - out.square());
      break;
    case ActivationKind::softplus:
      dst += grad * ((-in).exp() + 1.0).inverse();
      break;
    case ActivationKind::swish: {
      const Eigen::ArrayXd s = ((-in).exp() + 1.0).inverse();
      dst += grad * (s + in * s * (1.0 - s));
      break;
    }
    default:
      for (std::size_t i = 0; i < x.size(); ++i) acc[i] += g[i] * dphi(x[i]);
      break;
  }
}

std::array<Activation, 9> all_activations() {
  return {Activation(ActivationKind::sigmoid),    Activation(ActivationKind::tanh),
          Activation(ActivationKind::softplus),   Activation(ActivationKind::softsign),
          Activation(ActivationKind::relu),       Activation(ActivationKind::leaky_relu),
          Activation(ActivationKind::elu),        Activation(ActivationKind::swish),
          Activation(ActivationKind::identity)};
}

std::array<Activation, 8> nonlinear_activations() {
  return {Activation(ActivationKind::sigmoid),  Activation(ActivationKind::tanh),
          Activation(ActivationKind::softplus), Activation(ActivationKind::softsign),
          Activation(ActivationKind::relu),     Activation(ActivationKind::leaky_relu),
          Activation(ActivationKind::elu),      Activation(ActivationKind::swish)};
}

InducedObjective::InducedObjective(Matrix u, Activation act) : u_(std::move(u)), act_(act) {
  if (!u_.square()) throw DimensionError("InducedObjective: U must be square");
  if (asymmetry(u_) > 1e-12 * frobenius_norm(u_)) {
    throw DimensionError("InducedObjective: U must be symmetric");
  }
}

double InducedObjective::value(const Vector& z) const {
  if (z.dim() != u_.cols()) throw DimensionError("InducedObjective::value: dimension mismatch");
  // U_i^T z over the columns of U
  const Vector projections = transpose_times(u_, z);
  double acc = 0.5 * dot(z, z);
  for (double p : projections) acc -= act_.psi(p);
  return acc;
}

Vector InducedObjective::gradient(const Vector& z) const {
  if (z.dim() != u_.cols()) throw DimensionError("InducedObjective::gradient: dimension mismatch");
  return z - u_ * act_.phi(u_ * z);
}

}  // namespace optinet
