#pragma once

// Dense real vectors and matrices, seeded random streams, and the symmetric
// factorizations (Jacobi eigendecomposition, SPD square root) used across
// the library. Matrices are row-major.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <new>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace optinet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (also raised for non-square / asymmetric input).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite is not.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

/// Out-of-domain scalar parameter or wrong parameter arity.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Object used in a state that does not permit the call.
class StateError : public Error {
 public:
  using Error::Error;
};

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }

  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s) noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double s, Vector v);
Vector operator*(Vector v, double s);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
/// y += a * x
void axpy(double a, const Vector& x, Vector& y);

namespace detail {

/// Allocator whose value-initialization is default-initialization, so that
/// resize() on a vector of doubles leaves the new elements unset. Storage is
/// 64-byte aligned.
template <class T>
struct DefaultInitAllocator : std::allocator<T> {
  static constexpr std::align_val_t alignment{64};

  template <class U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  using std::allocator<T>::allocator;

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t n) noexcept { ::operator delete(p, n * sizeof(T), alignment); }

  template <class U>
  void construct(U* p) noexcept(std::is_nothrow_default_constructible_v<U>) {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

}  // namespace detail

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  /// Nested-list literal, one inner list per row.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  /// Entries are left unset; every one must be written before it is read.
  static Matrix uninitialized(std::size_t rows, std::size_t cols);
  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  Vector column(std::size_t c) const;
  Matrix transpose() const;
  bool all_finite() const noexcept;
  void fill(double v) noexcept;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double, detail::DefaultInitAllocator<double>> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix m);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& m, const Vector& v);

/// out = m^T v
Vector transpose_times(const Matrix& m, const Vector& v);
double frobenius_norm(const Matrix& m);
/// max |m(i,j) - m(j,i)|; requires a square matrix.
double asymmetry(const Matrix& m);

// Batched kernels. Each sample is one column; the caller owns the output
// buffer and its shape must already match.

/// out = a * b (overwrites out)
void gemm(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a^T * b (overwrites out)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a^T * b
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// y += s * x, elementwise over equal-shaped matrices.
void axpy(double s, const Matrix& x, Matrix& y);
/// sum_ij a(i,j) * b(i,j)
double inner(const Matrix& a, const Matrix& b);

/// Seeded pseudo-random stream. Identical (seed, algorithm) pairs replay
/// bit-identical draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  static constexpr const char* algorithm() noexcept { return "mt19937_64"; }

  double normal();
  double uniform(double lo, double hi);
  std::uint64_t next_u64() { return engine_(); }
  /// Index in [0, n).
  std::size_t index(std::size_t n);

  /// Independent child stream; does not advance this stream.
  RngStream derive(std::uint64_t salt) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer, used to mix seeds into derived streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

struct SymEig {
  Matrix vectors;  // columns are orthonormal eigenvectors
  Vector values;   // ascending
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
/// symmetrized as (M + M^T)/2 after the symmetry check.
SymEig sym_eig(const Matrix& m);

/// Principal square root U of an SPD matrix (U symmetric, U*U = W).
Matrix spd_sqrt(const Matrix& w);

/// The pair (sqrt(W), sqrt(W)^-1) from a single eigendecomposition.
struct SpdRoot {
  Matrix root;
  Matrix inverse_root;
};
SpdRoot spd_root(const Matrix& w);

/// Q * diag(values) * Q^T
Matrix compose_symmetric(const Matrix& q, const Vector& values);

/// Haar-distributed orthogonal matrix (Gram-Schmidt on a Gaussian draw).
Matrix random_orthogonal(std::size_t dim, RngStream& rng);

/// Random symmetric matrix whose spectrum lies in [lambda_min, lambda_max].
/// For dim >= 2 both endpoints are attained, so the condition number is
/// exactly lambda_max / lambda_min.
Matrix random_spd(std::size_t dim, double lambda_min, double lambda_max, RngStream& rng);

/// i.i.d. standard normal entries.
Vector gaussian(std::size_t dim, RngStream& rng);

}  // namespace optinet
