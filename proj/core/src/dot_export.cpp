#include <sstream>
#include <string>

#include "optinet/structures.hpp"

namespace optinet {

namespace {

class DotWriter {
 public:
  DotWriter(const StructureSpec& spec) : spec_(spec) {
    if (spec.policy.mode == CoefficientMode::constants) coefficients_ = spec.policy.values;
  }

  void node(const std::string& id, const std::string& label, const char* shape) {
    out_ << "  " << id << " [label=\"" << label << "\", shape=" << shape << "];\n";
  }

  void edge(const std::string& from, const std::string& to, const std::string& label = {}) {
    out_ << "  " << from << " -> " << to;
    if (!label.empty()) out_ << " [label=\"" << label << "\"]";
    out_ << ";\n";
  }

  // Terms whose constant coefficient is exactly zero are dropped.
  bool active(std::size_t coefficient) const {
    return coefficients_.empty() || coefficients_.at(coefficient) != 0.0;
  }

  std::ostringstream& stream() { return out_; }

 private:
  const StructureSpec& spec_;
  std::vector<double> coefficients_;
  std::ostringstream out_;
};

std::string layer(std::size_t k) { return "layer" + std::to_string(k); }
std::string layerp(std::size_t k) { return "layerp" + std::to_string(k); }
std::string op(std::size_t k) { return "op" + std::to_string(k); }
std::string opp(std::size_t k) { return "opp" + std::to_string(k); }

}  // namespace

std::string export_dot(const StructureSpec& spec) {
  spec.validate();
  DotWriter dot(spec);
  const std::size_t d = spec.depth;
  const bool paired = spec.kind == StructureKind::admm_net || spec.kind == StructureKind::dmr_form;
  const bool admm_exact = spec.kind == StructureKind::admm_net && spec.policy.mode == CoefficientMode::paper_schedule;

  auto& os = dot.stream();
  os << "digraph " << structure_name(spec.kind) << " {\n";
  os << "  rankdir=LR;\n";
  for (std::size_t k = 0; k <= d; ++k) dot.node(layer(k), "x" + std::to_string(k), "ellipse");
  if (paired) {
    for (std::size_t k = 1; k <= d; ++k) dot.node(layerp(k), "x'" + std::to_string(k), "ellipse");
  }
  for (std::size_t k = 0; k < d; ++k) {
    dot.node(op(k), "T" + std::to_string(k), "box");
    if (paired) dot.node(opp(k), "T'" + std::to_string(k), "box");
  }

  // x'_0 is x_0
  auto xp = [&](std::size_t k) { return k == 0 ? layer(0) : layerp(k); };

  for (std::size_t k = 0; k < d; ++k) {
    const std::string next = layer(k + 1);
    switch (spec.kind) {
      case StructureKind::feedforward:
        dot.edge(layer(k), op(k));
        dot.edge(op(k), next);
        break;
      case StructureKind::resnet_form:
        dot.edge(layer(k), op(k));
        dot.edge(op(k), next);
        dot.edge(layer(k), next);
        break;
      case StructureKind::hb_net:
        dot.edge(layer(k), op(k));
        dot.edge(op(k), next);
        if (dot.active(2 * k)) dot.edge(layer(k), next, "x_k");
        if (k >= 1 && dot.active(2 * k + 1)) dot.edge(layer(k - 1), next, "x_k-1");
        break;
      case StructureKind::agd_net:
        if (dot.active(2 * k)) dot.edge(layer(k), op(k), "x_k");
        if (k >= 1 && dot.active(2 * k + 1)) dot.edge(layer(k - 1), op(k), "x_k-1");
        dot.edge(op(k), next);
        break;
      case StructureKind::agd2_net:
        dot.edge(layer(k), op(k));
        for (std::size_t j = 0; j <= k; ++j) {
          if (dot.active(history_coefficient_index(k, j, false))) dot.edge(op(j), next, "alpha");
        }
        for (std::size_t j = 0; j <= k; ++j) {
          if (dot.active(history_coefficient_index(k, j, true))) dot.edge(layer(j), next, "beta");
        }
        break;
      case StructureKind::densenet_sum_form:
        dot.edge(layer(k), op(k));
        for (std::size_t j = 0; j <= k; ++j) dot.edge(op(j), next);
        break;
      case StructureKind::admm_net:
        dot.edge(xp(k), opp(k));
        dot.edge(layer(k), op(k));
        dot.edge(opp(k), layerp(k + 1));
        dot.edge(op(k), next);
        if (admm_exact) {
          dot.edge(layer(k), layerp(k + 1));
          dot.edge(layerp(k + 1), next);
          for (std::size_t t = 1; t <= k; ++t) {
            dot.edge(layerp(t), layerp(k + 1), "sum");
            dot.edge(layer(t), layerp(k + 1), "sum");
            dot.edge(layerp(t), next, "sum");
            dot.edge(layer(t), next, "sum");
          }
        } else {
          for (std::size_t t = 0; t <= k; ++t) {
            if (dot.active(history_coefficient_index(k, t, false))) {
              if (t > 0) dot.edge(xp(t), layerp(k + 1), "alpha");
              dot.edge(xp(t), next, "alpha");
            }
            if (dot.active(history_coefficient_index(k, t, true))) {
              dot.edge(layer(t), layerp(k + 1), "beta");
              if (t > 0) dot.edge(layer(t), next, "beta");
            }
          }
        }
        break;
      case StructureKind::dmr_form:
        dot.edge(xp(k), opp(k));
        dot.edge(layer(k), op(k));
        dot.edge(opp(k), layerp(k + 1));
        dot.edge(op(k), next);
        if (k > 0) {
          dot.edge(layerp(k), layerp(k + 1), "1/2");
          dot.edge(layerp(k), next, "1/2");
        }
        dot.edge(layer(k), layerp(k + 1), "1/2");
        if (k > 0) dot.edge(layer(k), next, "1/2");
        break;
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace optinet
