#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace optinet::cli {

namespace {

using nlohmann::json;

// Wraps one JSON object and records which keys were read, so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + "must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& at(const std::string& key) { return obj_.at(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    return as_unsigned(obj_.at(key), field(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  template <class T, class F>
  std::vector<T> list(const std::string& key, std::vector<T> fallback, F convert) {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(convert(v[i], field(key) + "[" + std::to_string(i) + "]"));
    }
    if (out.empty()) throw ConfigError(field(key) + ": must not be empty");
    return out;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where() + "unknown key '" + it.key() + "'");
    }
  }

  static std::uint64_t as_unsigned(const json& v, const std::string& name) {
    if (!v.is_number_unsigned()) {
      if (v.is_number_integer()) throw ConfigError(name + ": must be non-negative");
      throw ConfigError(name + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string as_string(const json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError(name + ": expected a string");
  return v.get<std::string>();
}

std::size_t as_size(const json& v, const std::string& name) {
  return static_cast<std::size_t>(Section::as_unsigned(v, name));
}

std::uint64_t as_seed(const json& v, const std::string& name) { return Section::as_unsigned(v, name); }

double as_double(const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError(name + ": expected a number");
  return v.get<double>();
}

template <class F>
auto named(const std::string& value, const std::string& name, F lookup) {
  try {
    return lookup(value);
  } catch (const optinet::Error& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

StructureKind as_structure(const json& v, const std::string& name) {
  return named(as_string(v, name), name, [](const std::string& s) { return structure_from_name(s); });
}

Algorithm as_algorithm(const json& v, const std::string& name) {
  return named(as_string(v, name), name, [](const std::string& s) { return algorithm_from_name(s); });
}

ActivationKind activation_kind(const std::string& value, const std::string& name) {
  return named(value, name, [](const std::string& s) { return Activation::from_name(s).kind(); });
}

Activation as_activation(const json& v, const std::string& name) {
  return Activation(activation_kind(as_string(v, name), name));
}

CheckKind as_check(const json& v, const std::string& name) {
  const std::string s = as_string(v, name);
  if (s == "lemma1") return CheckKind::lemma1;
  if (s == "antiderivative") return CheckKind::antiderivative;
  if (s == "agd_forms") return CheckKind::agd_forms;
  if (s == "admm") return CheckKind::admm;
  throw ConfigError(name + ": unknown check '" + s + "' (expected lemma1, antiderivative, agd_forms or admm)");
}

CoefficientMode coefficient_mode(const std::string& s, const std::string& name) {
  if (s == "paper_schedule") return CoefficientMode::paper_schedule;
  if (s == "learnable") return CoefficientMode::learnable;
  throw ConfigError(name + ": unknown coefficient mode '" + s + "' (expected paper_schedule or learnable)");
}

json parse_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  return doc;
}

CommonConfig read_common(Section& s) {
  CommonConfig c;
  c.seed = s.unsigned_int("seed", c.seed);
  c.out = s.string("out", c.out.string());
  return c;
}

void put_common(json& j, const CommonConfig& c) {
  j["seed"] = c.seed;
  j["out"] = c.out.string();
}

template <class T, class F>
json names(const std::vector<T>& items, F name) {
  json arr = json::array();
  for (const auto& item : items) arr.push_back(std::string(name(item)));
  return arr;
}

void require_positive(std::size_t v, const std::string& name) {
  if (v == 0) throw ConfigError(name + ": must be >= 1");
}

}  // namespace

std::string check_name(CheckKind kind) {
  switch (kind) {
    case CheckKind::lemma1: return "lemma1";
    case CheckKind::antiderivative: return "antiderivative";
    case CheckKind::agd_forms: return "agd_forms";
    case CheckKind::admm: return "admm";
  }
  return "unknown";
}

std::string coefficient_mode_name(CoefficientMode mode) {
  switch (mode) {
    case CoefficientMode::paper_schedule: return "paper_schedule";
    case CoefficientMode::constants: return "constants";
    case CoefficientMode::learnable: return "learnable";
  }
  return "unknown";
}

std::string apply_overrides(const std::string& json_text, std::optional<std::uint64_t> seed,
                            std::optional<std::string> out) {
  json doc = parse_document(json_text);
  if (seed) doc["seed"] = *seed;
  if (out) doc["out"] = *out;
  return doc.dump();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Loaded<VerifyConfig> parse_verify(const std::string& json_text) {
  const json doc = parse_document(json_text);
  Section s(doc, "");
  Loaded<VerifyConfig> out;
  out.common = read_common(s);
  VerifyConfig& v = out.command;
  v.checks = s.list("checks", v.checks, as_check);
  const auto kinds = nonlinear_activations();
  const std::vector<Activation> defaults(kinds.begin(), kinds.end());
  v.activations = s.list("activations", defaults, as_activation);
  v.dims = s.list("dims", v.dims, as_size);
  v.draws = s.unsigned_int("draws", v.draws);
  v.lemma1_layers = s.unsigned_int("lemma1_layers", v.lemma1_layers);
  v.agd_layers = s.unsigned_int("agd_layers", v.agd_layers);
  v.admm_layers = s.unsigned_int("admm_layers", v.admm_layers);
  if (s.has("spectrum")) {
    const json& sp = s.at("spectrum");
    if (!sp.is_array() || sp.size() != 2) throw ConfigError("spectrum: expected [min, max]");
    v.spectrum_min = as_double(sp[0], "spectrum[0]");
    v.spectrum_max = as_double(sp[1], "spectrum[1]");
  }
  if (s.has("tolerance") && !s.at("tolerance").is_null()) v.tolerance = as_double(s.at("tolerance"), "tolerance");
  s.finish();

  for (std::size_t d : v.dims) require_positive(d, "dims");
  require_positive(v.draws, "draws");
  if (!(v.spectrum_min > 0.0 && v.spectrum_min <= v.spectrum_max)) {
    throw ConfigError("spectrum: need 0 < min <= max");
  }
  if (v.tolerance && !(*v.tolerance >= 0.0)) throw ConfigError("tolerance: must be >= 0");

  json r;
  put_common(r, out.common);
  r["checks"] = names(v.checks, check_name);
  r["activations"] = names(v.activations, [](const Activation& a) { return a.name(); });
  r["dims"] = v.dims;
  r["draws"] = v.draws;
  r["lemma1_layers"] = v.lemma1_layers;
  r["agd_layers"] = v.agd_layers;
  r["admm_layers"] = v.admm_layers;
  r["spectrum"] = {v.spectrum_min, v.spectrum_max};
  r["tolerance"] = v.tolerance ? json(*v.tolerance) : json(nullptr);
  out.resolved_json = r.dump();
  return out;
}

Loaded<RaceConfig> parse_race(const std::string& json_text) {
  const json doc = parse_document(json_text);
  Section s(doc, "");
  Loaded<RaceConfig> out;
  out.common = read_common(s);
  RaceConfig& c = out.command;
  c.kappas = s.list("kappas", c.kappas, as_double);
  c.dim = s.unsigned_int("dim", c.dim);
  c.eps = s.number("eps", c.eps);
  c.seeds = s.list("seeds", c.seeds, as_seed);
  c.algorithms = s.list("algorithms", c.algorithms, as_algorithm);
  c.max_iters = s.unsigned_int("max_iters", c.max_iters);
  s.finish();

  for (double k : c.kappas) {
    if (!(k >= 1.0)) throw ConfigError("kappas: every kappa must be >= 1");
  }
  require_positive(c.dim, "dim");
  if (!(c.eps > 0.0)) throw ConfigError("eps: must be > 0");

  json r;
  put_common(r, out.common);
  r["kappas"] = c.kappas;
  r["dim"] = c.dim;
  r["eps"] = c.eps;
  r["seeds"] = c.seeds;
  r["algorithms"] = names(c.algorithms, algorithm_name);
  r["max_iters"] = c.max_iters;
  out.resolved_json = r.dump();
  return out;
}

Loaded<SimulateConfig> parse_simulate(const std::string& json_text) {
  const json doc = parse_document(json_text);
  Section s(doc, "");
  Loaded<SimulateConfig> out;
  out.common = read_common(s);
  SimulateConfig& c = out.command;
  c.structures = s.list("structures", c.structures, as_structure);
  c.depths = s.list("depths", c.depths, as_size);
  c.width = s.unsigned_int("width", c.width);
  c.samples = s.unsigned_int("samples", c.samples);
  c.seeds = s.list("seeds", c.seeds, as_seed);
  const ActivationKind kind = activation_kind(s.string("activation", "sigmoid"), "activation");
  const double param = s.number("activation_param", Activation::default_param_for(kind));
  try {
    c.activation = Activation(kind, param);
  } catch (const optinet::Error& e) {
    throw ConfigError(std::string("activation_param: ") + e.what());
  }
  c.coefficients = coefficient_mode(s.string("coefficients", "paper_schedule"), "coefficients");
  c.bias = s.boolean("bias", c.bias);
  c.hb_beta = s.number("hb_beta", c.hb_beta);
  c.agd2_residual = s.number("agd2_residual", c.agd2_residual);
  c.train.epochs = s.unsigned_int("epochs", c.train.epochs);
  c.train.batch_size = s.unsigned_int("batch_size", c.train.batch_size);
  c.train.learn_coefficients = s.boolean("learn_coefficients", c.train.learn_coefficients);
  c.train.shuffle = s.boolean("shuffle", c.train.shuffle);
  c.write_losses = s.boolean("write_losses", c.write_losses);
  if (s.has("optimizer")) {
    Section o(s.at("optimizer"), "optimizer");
    const std::string name = o.string("kind", "adam");
    if (name == "adam") {
      AdamConfig a;
      a.lr = o.number("lr", a.lr);
      a.beta1 = o.number("beta1", a.beta1);
      a.beta2 = o.number("beta2", a.beta2);
      a.eps = o.number("eps", a.eps);
      c.train.optimizer = a;
    } else if (name == "sgd") {
      SgdConfig g;
      g.lr = o.number("lr", g.lr);
      g.momentum = o.number("momentum", g.momentum);
      c.train.optimizer = g;
    } else {
      throw ConfigError("optimizer.kind: unknown optimizer '" + name + "' (expected adam or sgd)");
    }
    o.finish();
  }
  s.finish();

  require_positive(c.width, "width");
  require_positive(c.samples, "samples");
  for (std::size_t d : c.depths) require_positive(d, "depths");
  try {
    c.train.validate();
  } catch (const optinet::Error& e) {
    throw ConfigError(e.what());
  }

  json r;
  put_common(r, out.common);
  r["structures"] = names(c.structures, structure_name);
  r["depths"] = c.depths;
  r["width"] = c.width;
  r["samples"] = c.samples;
  r["seeds"] = c.seeds;
  r["activation"] = std::string(c.activation.name());
  r["activation_param"] = c.activation.param();
  r["coefficients"] = coefficient_mode_name(c.coefficients);
  r["bias"] = c.bias;
  r["hb_beta"] = c.hb_beta;
  r["agd2_residual"] = c.agd2_residual;
  r["epochs"] = c.train.epochs;
  r["batch_size"] = c.train.batch_size;
  r["learn_coefficients"] = c.train.learn_coefficients;
  r["shuffle"] = c.train.shuffle;
  r["write_losses"] = c.write_losses;
  if (const auto* a = std::get_if<AdamConfig>(&c.train.optimizer)) {
    r["optimizer"] = {{"kind", "adam"}, {"lr", a->lr}, {"beta1", a->beta1}, {"beta2", a->beta2}, {"eps", a->eps}};
  } else {
    const auto& g = std::get<SgdConfig>(c.train.optimizer);
    r["optimizer"] = {{"kind", "sgd"}, {"lr", g.lr}, {"momentum", g.momentum}};
  }
  out.resolved_json = r.dump();
  return out;
}

Loaded<ExportConfig> parse_export(const std::string& json_text) {
  const json doc = parse_document(json_text);
  Section s(doc, "");
  Loaded<ExportConfig> out;
  out.common = read_common(s);
  ExportConfig& c = out.command;
  c.structures = s.list("structures", c.structures, as_structure);
  c.depths = s.list("depths", c.depths, as_size);
  c.width = s.unsigned_int("width", c.width);
  c.coefficients = coefficient_mode(s.string("coefficients", "paper_schedule"), "coefficients");
  s.finish();

  require_positive(c.width, "width");
  for (std::size_t d : c.depths) require_positive(d, "depths");

  json r;
  put_common(r, out.common);
  r["structures"] = names(c.structures, structure_name);
  r["depths"] = c.depths;
  r["width"] = c.width;
  r["coefficients"] = coefficient_mode_name(c.coefficients);
  out.resolved_json = r.dump();
  return out;
}

}  // namespace optinet::cli
