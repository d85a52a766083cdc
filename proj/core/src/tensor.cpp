#include "optinet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

namespace optinet {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<RowMajor> view(Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
Eigen::Map<const RowMajor> view(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.dim() != b.dim()) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw DimensionError(msg.str());
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << what << ": shape mismatch (" << a.rows() << "x" << a.cols() << " vs " << b.rows()
        << "x" << b.cols() << ")";
    throw DimensionError(msg.str());
  }
}

void require_symmetric(const Matrix& m, const char* what) {
  if (!m.square()) {
    std::ostringstream msg;
    msg << what << ": matrix must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(msg.str());
  }
  const double scale = frobenius_norm(m);
  const double asym = asymmetry(m);
  if (asym > 1e-12 * scale) {
    std::ostringstream msg;
    msg << what << ": matrix is not symmetric (max |m_ij - m_ji| = " << asym << ")";
    throw DimensionError(msg.str());
  }
}

}  // namespace

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(*this, other, "Vector +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dim(*this, other, "Vector -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double s, Vector v) { return v *= s; }
Vector operator*(Vector v, double s) { return v *= s; }

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void axpy(double a, const Vector& x, Vector& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.dim(); ++i) y[i] += a * x[i];
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(row_major.begin(), row_major.end()) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length does not equal rows*cols");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged row list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::uninitialized(std::size_t rows, std::size_t cols) {
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_.resize(rows * cols);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& d) {
  Matrix m(d.dim(), d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "Matrix +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "Matrix -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix m) { return m *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  gemm(a, b, out);
  return out;
}

Vector operator*(const Matrix& m, const Vector& v) {
  if (m.cols() != v.dim()) {
    std::ostringstream msg;
    msg << "matrix-vector product: " << m.rows() << "x" << m.cols() << " times dim " << v.dim();
    throw DimensionError(msg.str());
  }
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.data() + r * m.cols();
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vector transpose_times(const Matrix& m, const Vector& v) {
  if (m.rows() != v.dim()) throw DimensionError("transpose_times: dimension mismatch");
  Vector out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * v[r];
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (double x : m.values()) acc += x * x;
  return std::sqrt(acc);
}

double asymmetry(const Matrix& m) {
  if (!m.square()) throw DimensionError("asymmetry: matrix must be square");
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols()) {
    throw DimensionError("gemm: shape mismatch");
  }
  view(out).noalias() = view(a) * view(b);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw DimensionError("gemm_tn: shape mismatch");
  }
  view(out).noalias() = view(a).transpose() * view(b);
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
    throw DimensionError("gemm_tn_acc: shape mismatch");
  }
  view(out).noalias() += view(a).transpose() * view(b);
}

void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols() || out.rows() != a.rows() || out.cols() != b.rows()) {
    throw DimensionError("gemm_nt_acc: shape mismatch");
  }
  view(out).noalias() += view(a) * view(b).transpose();
}

void axpy(double s, const Matrix& x, Matrix& y) {
  require_same_shape(x, y, "axpy");
  const double* __restrict src = x.data();
  double* __restrict dst = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] += s * src[i];
}

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  const double* pa = a.data();
  const double* pb = b.data();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  const std::size_t n = a.size();
  for (; i + 4 <= n; i += 4) {
    s0 += pa[i] * pb[i];
    s1 += pa[i + 1] * pb[i + 1];
    s2 += pa[i + 2] * pb[i + 2];
    s3 += pa[i + 3] * pb[i + 3];
  }
  for (; i < n; ++i) s0 += pa[i] * pb[i];
  return (s0 + s1) + (s2 + s3);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::size_t RngStream::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

RngStream RngStream::derive(std::uint64_t salt) const { return RngStream(mix_seed(seed_, salt)); }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SymEig sym_eig(const Matrix& m) {
  require_symmetric(m, "sym_eig");
  const std::size_t n = m.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  const double target = 1e-14 * frobenius_norm(a);
  auto off_diagonal = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J for the (p, q) plane rotation
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SymEig out{Matrix(n, n), Vector(n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

Matrix compose_symmetric(const Matrix& q, const Vector& values) {
  if (!q.square() || q.rows() != values.dim()) throw DimensionError("compose_symmetric: shape mismatch");
  const std::size_t n = q.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += q(i, k) * values[k] * q(j, k);
      out(i, j) = acc;
      out(j, i) = acc;
    }
  }
  return out;
}

namespace {

SymEig positive_spectrum(const Matrix& w, const char* what) {
  SymEig eig = sym_eig(w);
  for (std::size_t i = 0; i < eig.values.dim(); ++i) {
    if (!(eig.values[i] > 0.0)) {
      std::ostringstream msg;
      msg << what << ": matrix is not positive definite (eigenvalue " << eig.values[i] << " at index " << i
          << ")";
      throw DefinitenessError(msg.str());
    }
  }
  return eig;
}

}  // namespace

Matrix spd_sqrt(const Matrix& w) {
  SymEig eig = positive_spectrum(w, "spd_sqrt");
  Vector roots(eig.values.dim());
  for (std::size_t i = 0; i < roots.dim(); ++i) roots[i] = std::sqrt(eig.values[i]);
  return compose_symmetric(eig.vectors, roots);
}

SpdRoot spd_root(const Matrix& w) {
  SymEig eig = positive_spectrum(w, "spd_root");
  Vector roots(eig.values.dim());
  Vector inv_roots(eig.values.dim());
  for (std::size_t i = 0; i < roots.dim(); ++i) {
    roots[i] = std::sqrt(eig.values[i]);
    inv_roots[i] = 1.0 / roots[i];
  }
  return {compose_symmetric(eig.vectors, roots), compose_symmetric(eig.vectors, inv_roots)};
}

Matrix random_orthogonal(std::size_t dim, RngStream& rng) {
  Matrix q(dim, dim);
  for (double& x : q.values()) x = rng.normal();
  // modified Gram-Schmidt over columns, two passes for orthogonality
  for (std::size_t c = 0; c < dim; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < c; ++p) {
        double proj = 0.0;
        for (std::size_t r = 0; r < dim; ++r) proj += q(r, p) * q(r, c);
        for (std::size_t r = 0; r < dim; ++r) q(r, c) -= proj * q(r, p);
      }
    }
    double len = 0.0;
    for (std::size_t r = 0; r < dim; ++r) len += q(r, c) * q(r, c);
    len = std::sqrt(len);
    for (std::size_t r = 0; r < dim; ++r) q(r, c) /= len;
  }
  return q;
}

Matrix random_spd(std::size_t dim, double lambda_min, double lambda_max, RngStream& rng) {
  if (dim == 0) throw ParameterError("random_spd: dim must be positive");
  if (!(lambda_min > 0.0)) throw ParameterError("random_spd: lambda_min must be > 0");
  if (!(lambda_max >= lambda_min)) throw ParameterError("random_spd: lambda_max must be >= lambda_min");
  Vector spectrum(dim);
  for (std::size_t i = 0; i < dim; ++i) spectrum[i] = rng.uniform(lambda_min, lambda_max);
  if (dim >= 2) {
    spectrum[0] = lambda_min;
    spectrum[dim - 1] = lambda_max;
  } else if (lambda_min == lambda_max) {
    spectrum[0] = lambda_min;
  }
  return compose_symmetric(random_orthogonal(dim, rng), spectrum);
}

Vector gaussian(std::size_t dim, RngStream& rng) {
  if (dim == 0) throw ParameterError("gaussian: dim must be positive");
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace optinet
