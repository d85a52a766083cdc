#include "optinet/tape.hpp"

#include <sstream>

namespace optinet {

StructureParams StructureParams::zeros_like() const {
  StructureParams z;
  z.weights.reserve(weights.size());
  for (const auto& w : weights) z.weights.emplace_back(w.rows(), w.cols());
  z.biases.reserve(biases.size());
  for (const auto& b : biases) z.biases.emplace_back(b.rows(), b.cols());
  z.coefficients.assign(coefficients.size(), 0.0);
  return z;
}

std::size_t StructureParams::scalar_count() const noexcept {
  std::size_t n = coefficients.size();
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

std::vector<std::span<double>> StructureParams::blocks() {
  std::vector<std::span<double>> out;
  for (auto& w : weights) out.push_back(w.values());
  for (auto& b : biases) out.push_back(b.values());
  out.emplace_back(coefficients);
  return out;
}

std::vector<std::span<const double>> StructureParams::blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& w : weights) out.push_back(w.values());
  for (const auto& b : biases) out.push_back(b.values());
  out.emplace_back(coefficients);
  return out;
}

Tape::Tape(const StructureParams& params, Activation act) : params_(&params), act_(act) {}

Tape::Slot Tape::push(Matrix value) {
  if (finalized_) throw StateError("Tape: cannot record after finalize");
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

void Tape::check_slot(Slot s) const {
  if (s >= values_.size()) throw StateError("Tape: slot " + std::to_string(s) + " does not exist");
}

Tape::Slot Tape::input(Matrix x) { return push(std::move(x)); }

Tape::Slot Tape::affine(Slot in, std::size_t weight, long bias) {
  check_slot(in);
  const Matrix& w = params_->weights.at(weight);
  const Matrix& x = values_[in];
  if (w.cols() != x.rows()) {
    std::ostringstream msg;
    msg << "Tape::affine: weight " << w.rows() << "x" << w.cols() << " applied to " << x.rows() << " rows";
    throw DimensionError(msg.str());
  }
  Matrix out = Matrix::uninitialized(w.rows(), x.cols());
  gemm(w, x, out);
  if (bias >= 0) {
    const Matrix& b = params_->biases.at(static_cast<std::size_t>(bias));
    for (std::size_t r = 0; r < out.rows(); ++r) {
      const double br = b(r, 0);
      for (double& v : out.row(r)) v += br;
    }
  }
  const Slot s = push(std::move(out));
  ops_.push_back({OpKind::affine, s, in, weight, bias, {}});
  return s;
}

Tape::Slot Tape::activate(Slot in) {
  check_slot(in);
  const Matrix& x = values_[in];
  Matrix out = Matrix::uninitialized(x.rows(), x.cols());
  act_.apply(x.values(), out.values());
  const Slot s = push(std::move(out));
  ops_.push_back({OpKind::activate, s, in, 0, -1, {}});
  return s;
}

Tape::Slot Tape::combine(std::span<const std::pair<Slot, CoefRef>> terms) {
  if (terms.empty()) throw StateError("Tape::combine: no terms");
  std::vector<std::pair<Slot, CoefRef>> resolved(terms.begin(), terms.end());
  for (auto& [slot, coef] : resolved) {
    check_slot(slot);
    if (coef.learnable()) coef.value = params_->coefficients.at(static_cast<std::size_t>(coef.index));
  }
  const Matrix& first = values_[resolved.front().first];
  Matrix out = Matrix::uninitialized(first.rows(), first.cols());
  const double c0 = resolved.front().second.value;
  const double* src = first.data();
  double* dst = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) dst[i] = c0 * src[i];
  for (std::size_t i = 1; i < resolved.size(); ++i) axpy(resolved[i].second.value, values_[resolved[i].first], out);
  const Slot s = push(std::move(out));
  ops_.push_back({OpKind::combine, s, 0, 0, -1, std::move(resolved)});
  return s;
}

void Tape::finalize(Slot output) {
  check_slot(output);
  output_ = output;
  finalized_ = true;
}

Tape::Slot Tape::output() const {
  if (!finalized_) throw StateError("Tape: not finalized");
  return output_;
}

StructureParams backward(const Tape& tape, const Matrix& output_grad) {
  if (!tape.finalized_) throw StateError("backward: tape not finalized");
  const Matrix& out = tape.values_[tape.output_];
  if (out.rows() != output_grad.rows() || out.cols() != output_grad.cols()) {
    throw DimensionError("backward: output gradient shape does not match the tape output");
  }
  const StructureParams& params = *tape.params_;
  StructureParams grads = params.zeros_like();

  // An adjoint is created by its first contribution, which overwrites
  // instead of accumulating.
  std::vector<Matrix> adj(tape.values_.size());
  std::vector<bool> touched(tape.values_.size(), false);
  auto adjoint = [&](Tape::Slot s) -> Matrix& {
    if (!touched[s]) {
      adj[s] = Matrix(tape.values_[s].rows(), tape.values_[s].cols());
      touched[s] = true;
    }
    return adj[s];
  };
  auto add_scaled = [&](Tape::Slot s, double c, const Matrix& g) {
    if (touched[s]) {
      axpy(c, g, adj[s]);
      return;
    }
    adj[s] = Matrix::uninitialized(g.rows(), g.cols());
    touched[s] = true;
    const double* src = g.data();
    double* dst = adj[s].data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] = c * src[i];
  };
  adjoint(tape.output_) = output_grad;

  for (auto it = tape.ops_.rbegin(); it != tape.ops_.rend(); ++it) {
    const auto& op = *it;
    if (!touched[op.out]) continue;
    const Matrix& g = adj[op.out];
    switch (op.kind) {
      case Tape::OpKind::affine: {
        const Matrix& x = tape.values_[op.in];
        gemm_nt_acc(g, x, grads.weights[op.weight]);
        if (op.bias >= 0) {
          Matrix& gb = grads.biases[static_cast<std::size_t>(op.bias)];
          for (std::size_t r = 0; r < g.rows(); ++r) {
            double acc = 0.0;
            for (double v : g.row(r)) acc += v;
            gb(r, 0) += acc;
          }
        }
        if (touched[op.in]) {
          gemm_tn_acc(params.weights[op.weight], g, adj[op.in]);
        } else {
          adj[op.in] = Matrix::uninitialized(g.rows(), g.cols());
          touched[op.in] = true;
          gemm_tn(params.weights[op.weight], g, adj[op.in]);
        }
        break;
      }
      case Tape::OpKind::activate: {
        const Matrix& x = tape.values_[op.in];
        Matrix& gi = adjoint(op.in);
        tape.act_.accumulate_backward(x.values(), tape.values_[op.out].values(), g.values(), gi.values());
        break;
      }
      case Tape::OpKind::combine: {
        for (const auto& [slot, coef] : op.terms) {
          if (coef.learnable()) {
            grads.coefficients[static_cast<std::size_t>(coef.index)] += inner(g, tape.values_[slot]);
          }
          if (coef.value != 0.0) add_scaled(slot, coef.value, g);
        }
        break;
      }
    }
  }
  return grads;
}

}  // namespace optinet
