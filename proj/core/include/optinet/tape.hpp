#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "optinet/activation.hpp"
#include "optinet/tensor.hpp"

namespace optinet {

/// Trainable (and fixed) parameters of a structure. Weights are width x width;
/// biases are width x 1. The coefficient vector always holds the full set of
/// recurrence coefficients; which of them are learnable is decided by the
/// structure's coefficient policy.
struct StructureParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;
  std::vector<double> coefficients;

  /// Same shapes, all zero.
  StructureParams zeros_like() const;
  std::size_t scalar_count() const noexcept;
  /// Spans over every block: weights, then biases, then coefficients.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  friend bool operator==(const StructureParams&, const StructureParams&) = default;
};

/// Scalar weight of one term in a weighted sum. A non-negative index refers
/// to a learnable coefficient (whose gradient is tracked); otherwise the
/// value is a constant.
struct CoefRef {
  double value = 1.0;
  long index = -1;

  static CoefRef constant(double v) { return {v, -1}; }
  bool learnable() const noexcept { return index >= 0; }
};

/// Reverse-mode record of a batched forward pass. Each slot is a
/// width x batch matrix (one sample per column) written exactly once;
/// operations are appended in topological order.
class Tape {
 public:
  using Slot = std::size_t;

  /// The parameters must outlive the tape.
  Tape(const StructureParams& params, Activation act);

  Slot input(Matrix x);
  /// W x (+ b), with W = params.weights[weight], b = params.biases[bias] when bias >= 0.
  Slot affine(Slot in, std::size_t weight, long bias = -1);
  /// Phi applied elementwise.
  Slot activate(Slot in);
  /// sum_i c_i x_i over at least one term.
  Slot combine(std::span<const std::pair<Slot, CoefRef>> terms);

  void finalize(Slot output);
  bool finalized() const noexcept { return finalized_; }
  Slot output() const;

  const Matrix& value(Slot s) const { return values_.at(s); }
  std::size_t slots() const noexcept { return values_.size(); }
  std::size_t operations() const noexcept { return ops_.size(); }
  const StructureParams& params() const noexcept { return *params_; }
  const Activation& activation() const noexcept { return act_; }

 private:
  friend StructureParams backward(const Tape& tape, const Matrix& output_grad);

  enum class OpKind { affine, activate, combine };
  struct Op {
    OpKind kind;
    Slot out;
    Slot in = 0;
    std::size_t weight = 0;
    long bias = -1;
    std::vector<std::pair<Slot, CoefRef>> terms;
  };

  Slot push(Matrix value);
  void check_slot(Slot s) const;

  const StructureParams* params_;
  Activation act_;
  std::vector<Matrix> values_;
  std::vector<Op> ops_;
  Slot output_ = 0;
  bool finalized_ = false;
};

/// Exact reverse-mode gradients of <output_grad, output> with respect to
/// every weight, bias, and learnable coefficient (non-learnable coefficients
/// get zero). Throws StateError if the tape was not finalized.
StructureParams backward(const Tape& tape, const Matrix& output_grad);

}  // namespace optinet
