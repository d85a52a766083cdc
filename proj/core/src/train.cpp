#include "optinet/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Core>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace optinet {

namespace {

constexpr std::size_t kEvalChunk = 64;

double squared_error(const Matrix& out, const Matrix& target) {
  const double* po = out.data();
  const double* pt = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = po[i] - pt[i];
    acc += d * d;
  }
  return acc;
}

void check_dims(const StructureSpec& spec, const Dataset& data) {
  if (data.dim() != spec.width) {
    std::ostringstream msg;
    msg << structure_name(spec.kind) << " has width " << spec.width << " but data has dimension " << data.dim();
    throw DimensionError(msg.str());
  }
}

Eigen::Map<Eigen::ArrayXd> view(std::span<double> s) { return {s.data(), static_cast<Eigen::Index>(s.size())}; }
Eigen::Map<const Eigen::ArrayXd> view(std::span<const double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

class Updater {
 public:
  Updater(const TrainConfig& cfg, const StructureParams& params, bool update_coefficients)
      : cfg_(cfg), first_(params.zeros_like()), second_(params.zeros_like()), coefficients_(update_coefficients) {}

  void apply(StructureParams& params, const StructureParams& grads) {
    ++t_;
    auto p = params.blocks();
    const auto g = grads.blocks();
    auto m = first_.blocks();
    auto v = second_.blocks();
    // coefficients are always the last block
    const std::size_t nblocks = coefficients_ ? p.size() : p.size() - 1;
    if (const auto* adam = std::get_if<AdamConfig>(&cfg_.optimizer)) {
      const double c1 = 1.0 - std::pow(adam->beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(adam->beta2, static_cast<double>(t_));
      for (std::size_t b = 0; b < nblocks; ++b) {
        auto pb = view(p[b]);
        auto mb = view(m[b]);
        auto vb = view(v[b]);
        const auto gb = view(g[b]);
        mb = adam->beta1 * mb + (1.0 - adam->beta1) * gb;
        vb = adam->beta2 * vb + (1.0 - adam->beta2) * gb.square();
        pb -= adam->lr * (mb / c1) / ((vb / c2).sqrt() + adam->eps);
      }
    } else {
      const auto& sgd = std::get<SgdConfig>(cfg_.optimizer);
      for (std::size_t b = 0; b < nblocks; ++b) {
        auto pb = view(p[b]);
        auto mb = view(m[b]);
        mb = sgd.momentum * mb - sgd.lr * view(g[b]);
        pb += mb;
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  StructureParams first_;
  StructureParams second_;
  bool coefficients_;
  std::size_t t_ = 0;
};

}  // namespace

Dataset::Dataset(Matrix inputs, Matrix targets) : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (inputs_.rows() != targets_.rows() || inputs_.cols() != targets_.cols()) {
    throw DimensionError("Dataset: inputs and targets must have equal counts and dimensions");
  }
}

Dataset::Dataset(const std::vector<Vector>& inputs, const std::vector<Vector>& targets) {
  if (inputs.size() != targets.size()) throw DimensionError("Dataset: inputs and targets differ in count");
  if (inputs.empty()) return;
  const std::size_t dim = inputs.front().dim();
  inputs_ = Matrix(dim, inputs.size());
  targets_ = Matrix(dim, inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].dim() != dim || targets[i].dim() != dim) {
      throw DimensionError("Dataset: sample " + std::to_string(i) + " has inconsistent dimension");
    }
    for (std::size_t r = 0; r < dim; ++r) {
      inputs_(r, i) = inputs[i][r];
      targets_(r, i) = targets[i][r];
    }
  }
}

std::pair<Matrix, Matrix> Dataset::batch(std::span<const std::size_t> indices) const {
  Matrix x(dim(), indices.size());
  Matrix f(dim(), indices.size());
  for (std::size_t r = 0; r < dim(); ++r) {
    const auto xin = inputs_.row(r);
    const auto fin = targets_.row(r);
    auto xout = x.row(r);
    auto fout = f.row(r);
    for (std::size_t c = 0; c < indices.size(); ++c) {
      xout[c] = xin[indices[c]];
      fout[c] = fin[indices[c]];
    }
  }
  return {std::move(x), std::move(f)};
}

Dataset gaussian_dataset(std::size_t samples, std::size_t dim, RngStream& rng) {
  if (samples == 0 || dim == 0) throw ParameterError("gaussian_dataset: samples and dim must be positive");
  Matrix x(dim, samples);
  Matrix f(dim, samples);
  // sample-major draw order: x_0^i then f_i, for i = 0..N-1
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t r = 0; r < dim; ++r) x(r, i) = rng.normal();
    for (std::size_t r = 0; r < dim; ++r) f(r, i) = rng.normal();
  }
  return Dataset(std::move(x), std::move(f));
}

void TrainConfig::validate() const {
  if (const auto* adam = std::get_if<AdamConfig>(&optimizer)) {
    if (!(adam->lr > 0.0)) throw ParameterError("train: adam lr must be > 0");
    if (!(adam->beta1 >= 0.0 && adam->beta1 < 1.0) || !(adam->beta2 >= 0.0 && adam->beta2 < 1.0)) {
      throw ParameterError("train: adam betas must lie in [0,1)");
    }
    if (!(adam->eps > 0.0)) throw ParameterError("train: adam eps must be > 0");
  } else {
    const auto& sgd = std::get<SgdConfig>(optimizer);
    if (!(sgd.lr > 0.0)) throw ParameterError("train: sgd lr must be > 0");
    if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) throw ParameterError("train: sgd momentum must lie in [0,1)");
  }
  if (batch_size == 0) throw ParameterError("train: batch size must be >= 1");
}

double evaluate_mse(const StructureSpec& spec, const StructureParams& params, const Dataset& data) {
  check_dims(spec, data);
  if (data.size() == 0) throw ParameterError("evaluate_mse: empty dataset");
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, data.size() - start);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), start);
    auto [x, f] = data.batch(idx);
    const BatchForward fwd = forward_batch(spec, params, std::move(x));
    total += squared_error(fwd.value(), f);
  }
  return total / static_cast<double>(data.size() * data.dim());
}

std::pair<StructureParams, double> mse_gradient(const StructureSpec& spec, const StructureParams& params,
                                                const Matrix& inputs, const Matrix& targets) {
  const BatchForward fwd = forward_batch(spec, params, inputs);
  const Matrix& out = fwd.value();
  if (out.rows() != targets.rows() || out.cols() != targets.cols()) {
    throw DimensionError("mse_gradient: targets do not match network output");
  }
  const double scale = 1.0 / static_cast<double>(out.size());
  Matrix g(out.rows(), out.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.data()[i] - targets.data()[i];
    loss += d * d;
    g.data()[i] = 2.0 * scale * d;
  }
  return {backward(fwd.tape, g), loss * scale};
}

RngStream init_stream(const TrainConfig& cfg) { return RngStream(cfg.seed).derive(1); }

TrainResult train(const StructureSpec& spec, const Dataset& data, const TrainConfig& cfg) {
  RngStream rng = init_stream(cfg);
  return train(spec, data, cfg, init_params(spec, rng));
}

TrainResult train(const StructureSpec& spec, const Dataset& data, const TrainConfig& cfg, StructureParams initial) {
  cfg.validate();
  check_dims(spec, data);
  check_params(spec, initial);
  if (data.size() == 0) throw ParameterError("train: empty dataset");

  TrainResult result{std::move(initial), {}};
  const bool learn_coefficients =
      cfg.learn_coefficients && spec.policy.mode == CoefficientMode::learnable && coefficient_count(spec) > 0;
  Updater updater(cfg, result.params, learn_coefficients);
  RngStream order_rng = RngStream(cfg.seed).derive(2);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[order_rng.index(i + 1)]);
    }
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - b);
      auto [x, f] = data.batch(std::span<const std::size_t>(order.data() + b, count));
      auto grads = mse_gradient(spec, result.params, x, f).first;
      updater.apply(result.params, grads);
    }
    const double mse = evaluate_mse(spec, result.params, data);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    result.losses.push_back({epoch + 1, mse, elapsed.count()});
  }
  return result;
}

void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

std::string describe(const TrainConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (const auto* adam = std::get_if<AdamConfig>(&cfg.optimizer)) {
    os << "optimizer=adam lr=" << adam->lr << " beta1=" << adam->beta1 << " beta2=" << adam->beta2
       << " eps=" << adam->eps;
  } else {
    const auto& sgd = std::get<SgdConfig>(cfg.optimizer);
    os << "optimizer=sgd lr=" << sgd.lr << " momentum=" << sgd.momentum;
  }
  os << " epochs=" << cfg.epochs << " batch_size=" << cfg.batch_size << " seed=" << cfg.seed
     << " learn_coefficients=" << (cfg.learn_coefficients ? "true" : "false")
     << " shuffle=" << (cfg.shuffle ? "true" : "false");
  return os.str();
}

void write_loss_csv(std::ostream& os, const std::vector<LossRecord>& records,
                    const std::vector<std::string>& metadata) {
  for (const auto& line : metadata) os << "# " << line << '\n';
  os << "epoch,mse,wall_time_s\n";
  os << std::setprecision(17);
  for (const auto& r : records) os << r.epoch << ',' << r.mse << ',' << r.wall_time_s << '\n';
}

}  // namespace optinet
