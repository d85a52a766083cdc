#pragma once

// Experiment configs for the optinet command-line tool. Each command reads a
// JSON object; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optinet/activation.hpp"
#include "optinet/optimizers.hpp"
#include "optinet/structures.hpp"
#include "optinet/train.hpp"

namespace optinet::cli {

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output location missing or unwritable (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CheckKind { lemma1, antiderivative, agd_forms, admm };

struct VerifyConfig {
  std::vector<CheckKind> checks = {CheckKind::lemma1, CheckKind::antiderivative, CheckKind::agd_forms,
                                   CheckKind::admm};
  std::vector<Activation> activations;  // defaults to the eight nonlinear kinds
  std::vector<std::size_t> dims = {4, 16, 32};
  std::size_t draws = 10;
  std::size_t lemma1_layers = 20;
  std::size_t agd_layers = 30;
  std::size_t admm_layers = 20;
  double spectrum_min = 0.05;
  double spectrum_max = 1.0;
  std::optional<double> tolerance;  // overrides every per-check default
};

struct RaceConfig {
  std::vector<double> kappas = {1.0, 10.0, 100.0, 1e4};
  std::size_t dim = 32;
  double eps = 1e-6;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<Algorithm> algorithms = {Algorithm::gd, Algorithm::hb, Algorithm::agd, Algorithm::agd2,
                                       Algorithm::admm};
  std::size_t max_iters = 1'000'000;
};

struct SimulateConfig {
  std::vector<StructureKind> structures = {StructureKind::feedforward, StructureKind::hb_net, StructureKind::agd_net,
                                           StructureKind::agd2_net, StructureKind::admm_net};
  std::vector<std::size_t> depths = {10, 20, 30};
  std::size_t width = 32;
  std::size_t samples = 2000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  Activation activation = Activation::sigmoid();
  CoefficientMode coefficients = CoefficientMode::paper_schedule;
  bool bias = false;
  double hb_beta = kDefaultHeavyBallBeta;
  double agd2_residual = kExactAgd2Residual;
  TrainConfig train;  // seed is replaced per cell
  bool write_losses = true;
};

struct ExportConfig {
  std::vector<StructureKind> structures = all_structure_kinds();
  std::vector<std::size_t> depths = {3, 5};
  std::size_t width = 4;
  CoefficientMode coefficients = CoefficientMode::paper_schedule;
};

/// Fields shared by every command.
struct CommonConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "optinet-out";
};

template <class T>
struct Loaded {
  CommonConfig common;
  T command;
  std::string resolved_json;  // full config with defaults filled in
};

Loaded<VerifyConfig> parse_verify(const std::string& json_text);
Loaded<RaceConfig> parse_race(const std::string& json_text);
Loaded<SimulateConfig> parse_simulate(const std::string& json_text);
Loaded<ExportConfig> parse_export(const std::string& json_text);

std::string check_name(CheckKind kind);
std::string coefficient_mode_name(CoefficientMode mode);

/// Replaces the top-level "seed" and "out" fields of a JSON config with
/// command-line values. Throws ConfigError on malformed JSON.
std::string apply_overrides(const std::string& json_text, std::optional<std::uint64_t> seed,
                            std::optional<std::string> out);

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace optinet::cli
