#include "optinet/structures.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace optinet {

namespace {

constexpr std::array<std::string_view, 8> kStructureNames{
    "feedforward", "hb_net", "agd_net", "agd2_net", "admm_net", "resnet_form", "densenet_sum_form", "dmr_form",
};

bool two_path(StructureKind kind) { return kind == StructureKind::admm_net || kind == StructureKind::dmr_form; }

std::size_t weight_count(const StructureSpec& spec) { return spec.sharing == Sharing::shared ? 1 : spec.depth; }

std::size_t layer_weight(const StructureSpec& spec, std::size_t k) { return spec.sharing == Sharing::shared ? 0 : k; }

}  // namespace

std::string_view structure_name(StructureKind kind) noexcept {
  return kStructureNames[static_cast<std::size_t>(kind)];
}

StructureKind structure_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStructureNames.size(); ++i) {
    if (kStructureNames[i] == name) return static_cast<StructureKind>(i);
  }
  throw ParameterError("unknown structure '" + std::string(name) + "'");
}

std::vector<StructureKind> all_structure_kinds() {
  std::vector<StructureKind> out;
  for (std::size_t i = 0; i < kStructureNames.size(); ++i) out.push_back(static_cast<StructureKind>(i));
  return out;
}

std::size_t coefficient_count(const StructureSpec& spec) {
  switch (spec.kind) {
    case StructureKind::hb_net:
    case StructureKind::agd_net:
      return 2 * spec.depth;
    case StructureKind::agd2_net:
      return spec.depth * (spec.depth + 1);
    case StructureKind::admm_net:
      return spec.policy.mode == CoefficientMode::paper_schedule ? 0 : spec.depth * (spec.depth + 1);
    default:
      return 0;
  }
}

std::size_t history_coefficient_index(std::size_t k, std::size_t j, bool second_half) {
  return k * (k + 1) + (second_half ? k + 1 : 0) + j;
}

void StructureSpec::validate() const {
  if (depth == 0) throw ParameterError("structure depth must be positive");
  if (width == 0) throw ParameterError("structure width must be positive");
  if (policy.mode == CoefficientMode::constants ||
      (policy.mode == CoefficientMode::learnable && !policy.values.empty())) {
    const std::size_t need = coefficient_count(*this);
    if (policy.values.size() != need) {
      std::ostringstream msg;
      msg << structure_name(kind) << " at depth " << depth << " takes " << need << " coefficients, got "
          << policy.values.size();
      throw ParameterError(msg.str());
    }
  }
}

std::vector<double> heavy_ball_coefficients(std::size_t depth, double beta) {
  std::vector<double> out;
  out.reserve(2 * depth);
  for (std::size_t k = 0; k < depth; ++k) {
    out.push_back(beta);
    out.push_back(-beta);
  }
  return out;
}

std::vector<double> schedule_coefficients(const StructureSpec& spec) {
  const std::size_t d = spec.depth;
  switch (spec.kind) {
    case StructureKind::hb_net:
      return heavy_ball_coefficients(d, spec.hb_beta);
    case StructureKind::agd_net: {
      ThetaSchedule theta;
      theta.ensure(d);
      std::vector<double> out;
      for (std::size_t k = 0; k < d; ++k) {
        const double beta = theta.momentum(k);
        out.push_back(1.0 + beta);
        out.push_back(-beta);
      }
      return out;
    }
    case StructureKind::agd2_net: {
      ThetaSchedule theta;
      theta.ensure(d);
      HCoefficients h;
      std::vector<double> out(coefficient_count(spec), 0.0);
      const double w = spec.agd2_residual;
      for (std::size_t k = 0; k < d; ++k) {
        h.extend(theta);
        const auto row = h.row(k + 1);
        for (std::size_t j = 0; j <= k; ++j) {
          out[history_coefficient_index(k, j, false)] = row[j];
          out[history_coefficient_index(k, j, true)] = -w * row[j] + (j == k ? w : 0.0);
        }
      }
      return out;
    }
    case StructureKind::admm_net: {
      if (spec.policy.mode == CoefficientMode::paper_schedule) return {};
      std::vector<double> out(spec.depth * (spec.depth + 1), 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        out[history_coefficient_index(k, k, false)] = 0.5;
        out[history_coefficient_index(k, k, true)] = 0.5;
      }
      return out;
    }
    default:
      return {};
  }
}

std::vector<double> resolve_coefficients(const StructureSpec& spec) {
  spec.validate();
  if (spec.policy.mode == CoefficientMode::constants) return spec.policy.values;
  if (spec.policy.mode == CoefficientMode::learnable && !spec.policy.values.empty()) return spec.policy.values;
  return schedule_coefficients(spec);
}

std::size_t param_count(const StructureSpec& spec) {
  const std::size_t w = spec.width;
  std::size_t n = weight_count(spec) * w * w;
  if (spec.bias) n += weight_count(spec) * w;
  if (spec.policy.mode == CoefficientMode::learnable) n += coefficient_count(spec);
  return n;
}

StructureParams init_params(const StructureSpec& spec, RngStream& rng) {
  spec.validate();
  StructureParams p;
  const std::size_t w = spec.width;
  // Xavier / Glorot uniform: fan_in = fan_out = width
  const double limit = std::sqrt(6.0 / static_cast<double>(w + w));
  for (std::size_t l = 0; l < weight_count(spec); ++l) {
    Matrix m(w, w);
    for (double& x : m.values()) x = rng.uniform(-limit, limit);
    p.weights.push_back(std::move(m));
    if (spec.bias) p.biases.emplace_back(w, 1);
  }
  p.coefficients = resolve_coefficients(spec);
  return p;
}

StructureParams params_from_weight(const StructureSpec& spec, const Matrix& w) {
  spec.validate();
  if (w.rows() != spec.width || w.cols() != spec.width) {
    throw DimensionError("params_from_weight: weight must be width x width");
  }
  StructureParams p;
  for (std::size_t l = 0; l < weight_count(spec); ++l) {
    p.weights.push_back(w);
    if (spec.bias) p.biases.emplace_back(spec.width, 1);
  }
  p.coefficients = resolve_coefficients(spec);
  return p;
}

void check_params(const StructureSpec& spec, const StructureParams& params) {
  spec.validate();
  std::ostringstream msg;
  if (params.weights.size() != weight_count(spec)) {
    msg << structure_name(spec.kind) << ": expected " << weight_count(spec) << " weight matrices, got "
        << params.weights.size();
    throw ParameterError(msg.str());
  }
  for (const auto& w : params.weights) {
    if (w.rows() != spec.width || w.cols() != spec.width) throw ParameterError("weight matrix is not width x width");
  }
  const std::size_t nb = spec.bias ? weight_count(spec) : 0;
  if (params.biases.size() != nb) {
    msg << structure_name(spec.kind) << ": expected " << nb << " bias vectors, got " << params.biases.size();
    throw ParameterError(msg.str());
  }
  for (const auto& b : params.biases) {
    if (b.rows() != spec.width || b.cols() != 1) throw ParameterError("bias is not width x 1");
  }
  if (params.coefficients.size() != coefficient_count(spec)) {
    msg << structure_name(spec.kind) << ": expected " << coefficient_count(spec) << " coefficients, got "
        << params.coefficients.size();
    throw ParameterError(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Theory mode

namespace {

Vector layer_map(const Activation& act, const Matrix& w, const Vector& x) { return act.phi(w * x); }

Trajectory theory_recurrence(const StructureSpec& spec, const Matrix& w, const Vector& x0) {
  const Activation& act = spec.activation;
  const std::size_t n = x0.dim();
  Trajectory t;
  t.iterates.push_back(x0);

  switch (spec.kind) {
    case StructureKind::feedforward:
      for (std::size_t k = 0; k < spec.depth; ++k) t.iterates.push_back(layer_map(act, w, t.iterates.back()));
      break;

    case StructureKind::hb_net:
      for (std::size_t k = 0; k < spec.depth; ++k) {
        const Vector& xk = t.iterates[k];
        const Vector& xprev = t.iterates[k == 0 ? 0 : k - 1];
        Vector next = layer_map(act, w, xk);
        for (std::size_t i = 0; i < n; ++i) next[i] += spec.hb_beta * (xk[i] - xprev[i]);
        t.iterates.push_back(std::move(next));
      }
      break;

    case StructureKind::agd_net: {
      ThetaSchedule theta;
      for (std::size_t k = 0; k < spec.depth; ++k) {
        theta.ensure(k);
        const double beta = theta.momentum(k);
        const Vector& xk = t.iterates[k];
        const Vector& xprev = t.iterates[k == 0 ? 0 : k - 1];
        Vector extrapolated(n);
        for (std::size_t i = 0; i < n; ++i) extrapolated[i] = xk[i] + beta * (xk[i] - xprev[i]);
        t.iterates.push_back(layer_map(act, w, extrapolated));
      }
      break;
    }

    case StructureKind::agd2_net: {
      ThetaSchedule theta;
      HCoefficients h(false);
      std::vector<Vector> mapped;  // Phi(W x_j)
      const double r = spec.agd2_residual;
      for (std::size_t k = 0; k < spec.depth; ++k) {
        theta.ensure(k + 1);
        h.extend(theta);
        mapped.push_back(layer_map(act, w, t.iterates[k]));
        const auto row = h.last_row();
        Vector resid = t.iterates[k];
        for (std::size_t j = 0; j <= k; ++j) axpy(-row[j], t.iterates[j], resid);
        Vector next = r * resid;
        for (std::size_t j = 0; j <= k; ++j) axpy(row[j], mapped[j], next);
        t.iterates.push_back(std::move(next));
      }
      break;
    }

    case StructureKind::admm_net: {
      t.secondary.push_back(x0);
      Vector correction(n, 0.0);  // sum_{t=1..k} (x'_t - x_t)
      for (std::size_t k = 0; k < spec.depth; ++k) {
        const Vector& xk = t.iterates[k];
        Vector xp = layer_map(act, w, t.secondary[k]);
        for (std::size_t i = 0; i < n; ++i) xp[i] = 0.5 * (xp[i] + xk[i] - correction[i]);
        Vector x = layer_map(act, w, xk);
        for (std::size_t i = 0; i < n; ++i) x[i] = 0.5 * (x[i] + xp[i] + correction[i]);
        for (std::size_t i = 0; i < n; ++i) correction[i] += xp[i] - x[i];
        t.secondary.push_back(std::move(xp));
        t.iterates.push_back(std::move(x));
      }
      break;
    }

    default:
      throw StateError("theory_recurrence: kind has no theory-mode recurrence");
  }
  t.iterations = spec.depth;
  return t;
}

}  // namespace

Trajectory forward_shared(const StructureSpec& spec, const Matrix& w, const Vector& x0) {
  spec.validate();
  if (spec.sharing != Sharing::shared) throw ParameterError("forward_shared requires shared weights");
  if (!w.square() || w.rows() != spec.width) {
    std::ostringstream msg;
    msg << "forward_shared: W is " << w.rows() << "x" << w.cols() << " but width is " << spec.width;
    throw DimensionError(msg.str());
  }
  if (x0.dim() != spec.width) throw DimensionError("forward_shared: x0 dimension differs from width");

  const bool theory_kind = spec.kind == StructureKind::feedforward || spec.kind == StructureKind::hb_net ||
                           spec.kind == StructureKind::agd_net || spec.kind == StructureKind::agd2_net ||
                           spec.kind == StructureKind::admm_net;
  if (theory_kind && spec.policy.mode == CoefficientMode::paper_schedule && !spec.bias) {
    return theory_recurrence(spec, w, x0);
  }

  const StructureParams params = params_from_weight(spec, w);
  const ParamForward fwd = forward_param(spec, params, x0);
  Trajectory t;
  for (const auto& m : fwd.state.outputs) t.iterates.push_back(m.column(0));
  for (const auto& m : fwd.state.secondary) t.secondary.push_back(m.column(0));
  t.iterations = spec.depth;
  return t;
}

// ---------------------------------------------------------------------------
// Engineering mode

namespace {

using Term = std::pair<Tape::Slot, CoefRef>;

class Recorder {
 public:
  Recorder(const StructureSpec& spec, const StructureParams& params) : spec_(spec), params_(params) {}

  CoefRef coef(std::size_t index) const {
    if (spec_.policy.mode == CoefficientMode::learnable) return {params_.coefficients[index], static_cast<long>(index)};
    return CoefRef::constant(params_.coefficients[index]);
  }

  Tape::Slot transform(Tape& tape, Tape::Slot in, std::size_t k) const {
    const std::size_t w = layer_weight(spec_, k);
    const Tape::Slot pre = tape.affine(in, w, spec_.bias ? static_cast<long>(w) : -1);
    return tape.activate(pre);
  }

 private:
  const StructureSpec& spec_;
  const StructureParams& params_;
};

}  // namespace

PropagationState BatchForward::state() const {
  PropagationState s;
  for (auto slot : outputs) s.outputs.push_back(tape.value(slot));
  for (auto slot : secondary) s.secondary.push_back(tape.value(slot));
  for (auto slot : transforms) s.transforms.push_back(tape.value(slot));
  return s;
}

BatchForward forward_batch(const StructureSpec& spec, const StructureParams& params, Matrix x0) {
  check_params(spec, params);
  if (x0.rows() != spec.width) {
    std::ostringstream msg;
    msg << structure_name(spec.kind) << ": input has " << x0.rows() << " rows but width is " << spec.width;
    throw DimensionError(msg.str());
  }

  BatchForward f{Tape(params, spec.activation), 0, {}, {}, {}};
  Tape& tape = f.tape;
  const Recorder rec(spec, params);
  auto& xs = f.outputs;
  auto& xps = f.secondary;
  auto& ts = f.transforms;
  xs.push_back(tape.input(std::move(x0)));
  if (two_path(spec.kind)) xps.push_back(xs.front());

  std::vector<Term> terms;
  Tape::Slot correction = 0;  // running sum of x'_t - x_t (scheduled admm_net)
  bool have_correction = false;
  ThetaSchedule theta;                  // scheduled agd2_net
  std::vector<Tape::Slot> differences;  // T_j(x_j) - w x_j
  Tape::Slot history = 0;               // sum_j h_{k+1,j} (T_j(x_j) - w x_j)

  for (std::size_t k = 0; k < spec.depth; ++k) {
    const Tape::Slot xk = xs[k];
    const Tape::Slot xprev = xs[k == 0 ? 0 : k - 1];
    terms.clear();
    switch (spec.kind) {
      case StructureKind::feedforward:
        xs.push_back(rec.transform(tape, xk, k));
        break;

      case StructureKind::resnet_form: {
        const Tape::Slot tk = rec.transform(tape, xk, k);
        terms = {{tk, CoefRef::constant(1.0)}, {xk, CoefRef::constant(1.0)}};
        xs.push_back(tape.combine(terms));
        break;
      }

      case StructureKind::hb_net: {
        const Tape::Slot tk = rec.transform(tape, xk, k);
        terms = {{tk, CoefRef::constant(1.0)}, {xk, rec.coef(2 * k)}, {xprev, rec.coef(2 * k + 1)}};
        xs.push_back(tape.combine(terms));
        break;
      }

      case StructureKind::agd_net: {
        terms = {{xk, rec.coef(2 * k)}, {xprev, rec.coef(2 * k + 1)}};
        const Tape::Slot mixed = tape.combine(terms);
        xs.push_back(rec.transform(tape, mixed, k));
        break;
      }

      case StructureKind::agd2_net:
        if (spec.policy.mode == CoefficientMode::paper_schedule) {
          // Running form of the history sum: with D_j = T_j(x_j) - w x_j and
          // S_{k+1} = sum_j h_{k+1,j} D_j, the h recurrence gives
          // S_{k+1} = c S_k - c D_{k-1} + (1 + c) D_k, c = c_{k+1}.
          const double w = spec.agd2_residual;
          theta.ensure(k + 1);
          const double c = theta.momentum(k + 1);
          ts.push_back(rec.transform(tape, xk, k));
          terms = {{ts[k], CoefRef::constant(1.0)}, {xk, CoefRef::constant(-w)}};
          differences.push_back(tape.combine(terms));
          terms = {{differences[k], CoefRef::constant(1.0 + c)}};
          if (k >= 1) {
            terms.push_back({history, CoefRef::constant(c)});
            terms.push_back({differences[k - 1], CoefRef::constant(-c)});
          }
          history = tape.combine(terms);
          terms = {{history, CoefRef::constant(1.0)}, {xk, CoefRef::constant(w)}};
          xs.push_back(tape.combine(terms));
          break;
        }
        [[fallthrough]];
      case StructureKind::densenet_sum_form: {
        ts.push_back(rec.transform(tape, xk, k));
        const bool dense = spec.kind == StructureKind::densenet_sum_form;
        for (std::size_t j = 0; j <= k; ++j) {
          terms.push_back({ts[j], dense ? CoefRef::constant(1.0) : rec.coef(history_coefficient_index(k, j, false))});
        }
        if (!dense) {
          for (std::size_t j = 0; j <= k; ++j) terms.push_back({xs[j], rec.coef(history_coefficient_index(k, j, true))});
        }
        xs.push_back(tape.combine(terms));
        break;
      }

      case StructureKind::admm_net:
        if (spec.policy.mode == CoefficientMode::paper_schedule) {
          const Tape::Slot tp = rec.transform(tape, xps[k], k);
          terms = {{tp, CoefRef::constant(0.5)}, {xk, CoefRef::constant(0.5)}};
          if (have_correction) terms.push_back({correction, CoefRef::constant(-0.5)});
          const Tape::Slot xp_next = tape.combine(terms);
          const Tape::Slot tx = rec.transform(tape, xk, k);
          terms = {{tx, CoefRef::constant(0.5)}, {xp_next, CoefRef::constant(0.5)}};
          if (have_correction) terms.push_back({correction, CoefRef::constant(0.5)});
          const Tape::Slot x_next = tape.combine(terms);
          terms = {{xp_next, CoefRef::constant(1.0)}, {x_next, CoefRef::constant(-1.0)}};
          if (have_correction) terms.push_back({correction, CoefRef::constant(1.0)});
          correction = tape.combine(terms);
          have_correction = true;
          xps.push_back(xp_next);
          xs.push_back(x_next);
        } else {
          std::vector<Term> shared;
          for (std::size_t t = 0; t <= k; ++t) shared.push_back({xps[t], rec.coef(history_coefficient_index(k, t, false))});
          for (std::size_t t = 0; t <= k; ++t) shared.push_back({xs[t], rec.coef(history_coefficient_index(k, t, true))});
          terms = {{rec.transform(tape, xps[k], k), CoefRef::constant(1.0)}};
          terms.insert(terms.end(), shared.begin(), shared.end());
          const Tape::Slot xp_next = tape.combine(terms);
          terms = {{rec.transform(tape, xk, k), CoefRef::constant(1.0)}};
          terms.insert(terms.end(), shared.begin(), shared.end());
          const Tape::Slot x_next = tape.combine(terms);
          xps.push_back(xp_next);
          xs.push_back(x_next);
        }
        break;

      case StructureKind::dmr_form: {
        const Tape::Slot tp = rec.transform(tape, xps[k], k);
        terms = {{tp, CoefRef::constant(1.0)}, {xps[k], CoefRef::constant(0.5)}, {xk, CoefRef::constant(0.5)}};
        const Tape::Slot xp_next = tape.combine(terms);
        const Tape::Slot tx = rec.transform(tape, xk, k);
        terms = {{tx, CoefRef::constant(1.0)}, {xps[k], CoefRef::constant(0.5)}, {xk, CoefRef::constant(0.5)}};
        const Tape::Slot x_next = tape.combine(terms);
        xps.push_back(xp_next);
        xs.push_back(x_next);
        break;
      }
    }
  }
  f.output = xs.back();
  tape.finalize(f.output);
  return f;
}

ParamForward forward_param(const StructureSpec& spec, const StructureParams& params, const Vector& x0) {
  Matrix input(x0.dim(), 1, std::vector<double>(x0.begin(), x0.end()));
  const BatchForward f = forward_batch(spec, params, std::move(input));
  return {f.value().column(0), f.state()};
}

Vector forward_blocks(std::span<const StructureSpec> blocks, std::span<const StructureParams> params,
                      const Vector& x0) {
  if (blocks.size() != params.size()) throw ParameterError("forward_blocks: one parameter set per block");
  Vector x = x0;
  for (std::size_t b = 0; b < blocks.size(); ++b) x = forward_param(blocks[b], params[b], x).output;
  return x;
}

}  // namespace optinet
