#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "optinet/train.hpp"
#include "optinet/verify.hpp"

namespace optinet::cli {

/// --jobs if given, else OPTINET_JOBS, else 1. Throws ConfigError on a
/// zero or unparsable value.
std::size_t resolve_jobs(std::optional<std::size_t> flag);

struct VerifyRow {
  std::string check;
  std::string activation;
  std::size_t dim = 0;   // 0 for antiderivative rows
  std::size_t draw = 0;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RaceResult {
  Algorithm algorithm = Algorithm::gd;
  double kappa = 1.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct SimulateRow {
  StructureKind structure = StructureKind::feedforward;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  double final_mse = 0.0;
  double wall_time_s = 0.0;
  std::vector<LossRecord> losses;
};

struct MedianRow {
  StructureKind structure = StructureKind::feedforward;
  std::size_t depth = 0;
  double median_mse = 0.0;
};

std::vector<VerifyRow> verify_rows(const VerifyConfig& cfg, std::uint64_t master_seed, std::size_t jobs);
std::vector<RaceResult> race_rows(const RaceConfig& cfg, std::uint64_t master_seed, std::size_t jobs);
/// Rows in config order: structure, then depth, then seed. progress, when
/// set, receives one line per finished cell.
std::vector<SimulateRow> simulate_rows(const SimulateConfig& cfg, std::uint64_t master_seed, std::size_t jobs,
                                       std::ostream* progress = nullptr);
std::vector<MedianRow> medians(const SimulateConfig& cfg, const std::vector<SimulateRow>& rows);

/// Seeds of one simulate cell. The dataset depends only on the seed; the
/// training stream also mixes in the structure and depth.
std::uint64_t simulate_data_seed(std::uint64_t master_seed, std::uint64_t seed);
std::uint64_t simulate_train_seed(std::uint64_t data_seed, StructureKind kind, std::size_t depth);

StructureSpec simulate_spec(const SimulateConfig& cfg, StructureKind kind, std::size_t depth);

/// Metadata lines for CSV headers: version, command, resolved config.
std::vector<std::string> metadata(const std::string& command, const std::string& resolved_json);

int cmd_verify(const Loaded<VerifyConfig>& cfg, std::size_t jobs, std::ostream& log);
int cmd_race(const Loaded<RaceConfig>& cfg, std::size_t jobs, std::ostream& log);
int cmd_simulate(const Loaded<SimulateConfig>& cfg, std::size_t jobs, std::ostream& log);
int cmd_export(const Loaded<ExportConfig>& cfg, std::ostream& log);

/// Parses arguments and dispatches; returns the process exit code.
int run_main(int argc, char** argv);

}  // namespace optinet::cli
