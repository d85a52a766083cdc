#pragma once

// Training for the fixed-structure model min_params sum_i |f_i - Net(x0_i)|^2.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "optinet/structures.hpp"
#include "optinet/tape.hpp"
#include "optinet/tensor.hpp"

namespace optinet {

/// Paired inputs and targets stored column-wise (one sample per column).
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix inputs, Matrix targets);
  Dataset(const std::vector<Vector>& inputs, const std::vector<Vector>& targets);

  std::size_t size() const noexcept { return inputs_.cols(); }
  std::size_t dim() const noexcept { return inputs_.rows(); }
  const Matrix& inputs() const noexcept { return inputs_; }
  const Matrix& targets() const noexcept { return targets_; }
  Vector input(std::size_t i) const { return inputs_.column(i); }
  Vector target(std::size_t i) const { return targets_.column(i); }

  /// Columns [begin, begin+count) or the listed indices, as a batch.
  std::pair<Matrix, Matrix> batch(std::span<const std::size_t> indices) const;

 private:
  Matrix inputs_;
  Matrix targets_;
};

/// Independent N(0, I) inputs and targets.
Dataset gaussian_dataset(std::size_t samples, std::size_t dim, RngStream& rng);

struct SgdConfig {
  double lr = 1e-2;
  double momentum = 0.0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::variant<AdamConfig, SgdConfig> optimizer = AdamConfig{};
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  /// Coefficients are updated only when this is set and the structure's
  /// policy is learnable.
  bool learn_coefficients = true;
  /// Reshuffle samples each epoch; otherwise batches follow dataset order.
  bool shuffle = true;

  void validate() const;
};

struct LossRecord {
  std::size_t epoch = 0;  // 1-based
  double mse = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  StructureParams params;
  std::vector<LossRecord> losses;
};

/// Mean over samples of the per-coordinate mean squared error.
double evaluate_mse(const StructureSpec& spec, const StructureParams& params, const Dataset& data);

/// Gradient of the batch MSE (mean over batch and coordinates) and its value.
std::pair<StructureParams, double> mse_gradient(const StructureSpec& spec, const StructureParams& params,
                                                const Matrix& inputs, const Matrix& targets);

/// Trains from init_params(spec, seed-derived stream). Each loss record is the
/// training-set MSE after that epoch's updates.
TrainResult train(const StructureSpec& spec, const Dataset& data, const TrainConfig& cfg);
/// Trains from the given initial parameters.
TrainResult train(const StructureSpec& spec, const Dataset& data, const TrainConfig& cfg, StructureParams initial);

/// Derived stream that init_params draws from inside train().
RngStream init_stream(const TrainConfig& cfg);

std::string describe(const TrainConfig& cfg);

/// Raises the allocator's trim and mmap thresholds so that per-batch tape
/// buffers are recycled in-process rather than returned to the OS and
/// faulted back in. Process-wide; no-op where unsupported.
void retain_freed_memory();

/// CSV with columns epoch,mse,wall_time_s; each metadata line is written
/// first, prefixed by "# ".
void write_loss_csv(std::ostream& os, const std::vector<LossRecord>& records,
                    const std::vector<std::string>& metadata);

}  // namespace optinet
