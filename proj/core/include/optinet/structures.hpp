#pragma once

// Network structures derived from optimization iterations.
//
// Theory mode (forward_shared) runs the recurrences with one shared matrix W:
//   feedforward  x_{k+1} = Phi(W x_k)
//   hb_net       x_{k+1} = Phi(W x_k) + beta (x_k - x_{k-1})
//   agd_net      x_{k+1} = Phi(W (x_k + beta_k (x_k - x_{k-1})))
//   agd2_net     x_{k+1} = sum_j h_{k+1,j} Phi(W x_j) + x_k - sum_j h_{k+1,j} x_j
//   admm_net     x'_{k+1} = (Phi(W x'_k) + x_k - s_k) / 2
//                x_{k+1}  = (Phi(W x_k) + x'_{k+1} + s_k) / 2,  s_k = sum_{t=1..k} (x'_t - x_t)
// with x_{-1} := x_0 and x'_0 := x_0.
//
// Engineering mode (forward_param) replaces Phi(W x) by a per-layer operator
// T_k(x) = Phi(W_k x + b_k) and relaxes the coefficients:
//   hb_net       x_{k+1} = T_k(x_k) + a_k x_k + b_k x_{k-1}
//   agd_net      x_{k+1} = T_k(a_k x_k + b_k x_{k-1})
//   agd2_net     x_{k+1} = sum_j alpha_{k+1}^j T_j(x_j) + sum_j beta_{k+1}^j x_j
//   admm_net     x'_{k+1} = T_k(x'_k) + sum_t alpha_{k+1}^t x'_t + sum_t beta_{k+1}^t x_t
//                x_{k+1}  = T_k(x_k)  + sum_t alpha_{k+1}^t x'_t + sum_t beta_{k+1}^t x_t
//   resnet_form        x_{k+1} = T_k(x_k) + x_k
//   densenet_sum_form  x_{k+1} = sum_j T_j(x_j)
//   dmr_form           x'_{k+1} = T_k(x'_k) + x'_k/2 + x_k/2,  x_{k+1} = T_k(x_k) + x'_k/2 + x_k/2
// Under the paper_schedule policy admm_net keeps the exact two-path
// recurrence above (with T_k in place of Phi(W .)) and has no coefficients.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "optinet/activation.hpp"
#include "optinet/optimizers.hpp"
#include "optinet/tape.hpp"
#include "optinet/tensor.hpp"

namespace optinet {

enum class StructureKind {
  feedforward,
  hb_net,
  agd_net,
  agd2_net,
  admm_net,
  resnet_form,
  densenet_sum_form,
  dmr_form,
};

std::string_view structure_name(StructureKind kind) noexcept;
StructureKind structure_from_name(std::string_view name);
std::vector<StructureKind> all_structure_kinds();

enum class CoefficientMode { paper_schedule, constants, learnable };

struct CoefficientPolicy {
  CoefficientMode mode = CoefficientMode::paper_schedule;
  /// constants: the full coefficient list. learnable: initial values, or
  /// empty to start from the default schedule.
  std::vector<double> values;

  static CoefficientPolicy paper_schedule() { return {}; }
  static CoefficientPolicy constants(std::vector<double> v) { return {CoefficientMode::constants, std::move(v)}; }
  static CoefficientPolicy learnable(std::vector<double> v = {}) {
    return {CoefficientMode::learnable, std::move(v)};
  }
};

enum class Sharing { shared, per_layer };

/// Residual weight of the agd2 history form, x_{k+1} = sum alpha T(x_j) +
/// w (x_k - sum h x_j). w = 1 is the exact accelerated-gradient network;
/// deep engineering variants typically use 0.1.
inline constexpr double kExactAgd2Residual = 1.0;
inline constexpr double kEngineeringAgd2Residual = 0.1;
inline constexpr double kDefaultHeavyBallBeta = 0.3;

struct StructureSpec {
  StructureKind kind = StructureKind::feedforward;
  std::size_t depth = 1;
  std::size_t width = 1;
  CoefficientPolicy policy;
  Sharing sharing = Sharing::per_layer;
  Activation activation = Activation::sigmoid();
  bool bias = false;
  double hb_beta = kDefaultHeavyBallBeta;
  double agd2_residual = kExactAgd2Residual;

  /// Throws ParameterError on zero depth/width or wrong coefficient arity.
  void validate() const;
};

/// Number of recurrence coefficients the kind uses at this depth
/// (0 for the fixed forms and for admm_net under paper_schedule).
std::size_t coefficient_count(const StructureSpec& spec);
/// Index of alpha_{k+1}^j (or beta_{k+1}^j when second_half) for the
/// agd2_net / admm_net layouts; j <= k.
std::size_t history_coefficient_index(std::size_t k, std::size_t j, bool second_half);
/// Coefficients produced by the default schedule (theta / h recurrences,
/// heavy-ball beta). For admm_net with a constants or learnable policy, the DMR
/// setting alpha_{k+1}^k = beta_{k+1}^k = 1/2.
std::vector<double> schedule_coefficients(const StructureSpec& spec);
/// The coefficients the spec resolves to (constants, learnable initial
/// values, or the schedule).
std::vector<double> resolve_coefficients(const StructureSpec& spec);

/// (beta, -beta) per layer: the hb_net recurrence with momentum beta.
std::vector<double> heavy_ball_coefficients(std::size_t depth, double beta);

/// Exact number of trainable scalars: weights, biases when enabled, and
/// coefficients when the policy is learnable.
std::size_t param_count(const StructureSpec& spec);

/// Xavier-uniform weights, zero biases, resolved coefficients.
StructureParams init_params(const StructureSpec& spec, RngStream& rng);
/// Shared-weight parameters that reuse one matrix W.
StructureParams params_from_weight(const StructureSpec& spec, const Matrix& w);
/// Checks block counts and shapes against the spec; throws ParameterError.
void check_params(const StructureSpec& spec, const StructureParams& params);

/// Theory-mode propagation with one shared W; iterates hold x_0..x_depth
/// and, for the two-path kinds, secondary holds x'_0..x'_depth.
Trajectory forward_shared(const StructureSpec& spec, const Matrix& w, const Vector& x0);

struct PropagationState {
  std::vector<Matrix> outputs;    // x_0 .. x_k, width x batch
  std::vector<Matrix> secondary;  // x'_0 .. x'_k for the two-path kinds
  std::vector<Matrix> transforms; // cached T_j(x_j) for agd2_net / densenet_sum_form
};

struct BatchForward {
  Tape tape;
  Tape::Slot output;
  std::vector<Tape::Slot> outputs;
  std::vector<Tape::Slot> secondary;
  std::vector<Tape::Slot> transforms;

  const Matrix& value() const { return tape.value(output); }
  PropagationState state() const;
};

/// Engineering-mode forward pass over a width x batch input, recorded on a
/// tape for backward().
BatchForward forward_batch(const StructureSpec& spec, const StructureParams& params, Matrix x0);

struct ParamForward {
  Vector output;
  PropagationState state;
};
ParamForward forward_param(const StructureSpec& spec, const StructureParams& params, const Vector& x0);

/// Independent constant-width blocks applied in sequence.
Vector forward_blocks(std::span<const StructureSpec> blocks, std::span<const StructureParams> params,
                      const Vector& x0);

/// Graphviz digraph: node layer{k} per output x_k (layerp{k} for x'_k),
/// node op{k} per operator T_k (opp{k} on the x' path), one edge per term.
std::string export_dot(const StructureSpec& spec);

}  // namespace optinet
