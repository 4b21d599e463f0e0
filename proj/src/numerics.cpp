#include "upr/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "upr/error.hpp"

namespace upr {

namespace {

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    fail(ErrorKind::Dimension, std::string(what) + ": length " + std::to_string(got) +
                                   " does not match " + std::to_string(want));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  if (!std::isfinite(fill)) fail(ErrorKind::Numerical, "matrix " + shape() + " fill value is not finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    fail(ErrorKind::Dimension, "matrix " + shape() + " given " + std::to_string(values_.size()) +
                                   " values");
  }
  if (!all_finite(values_)) fail(ErrorKind::Numerical, "matrix " + shape() + " has non-finite entries");
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Vector values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) fail(ErrorKind::Dimension, "ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::string Matrix::shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

Vector matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) {
    fail(ErrorKind::Dimension,
         "matvec: matrix " + m.shape() + " times vector of length " + std::to_string(x.size()));
  }
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Vector tmatvec(const Matrix& m, std::span<const double> u) {
  if (u.size() != m.rows()) {
    fail(ErrorKind::Dimension, "tmatvec: transpose of matrix " + m.shape() +
                                   " times vector of length " + std::to_string(u.size()));
  }
  Vector out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    const double ui = u[i];
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * ui;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_length(b.size(), a.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  require_length(y.size(), x.size(), "axpy");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

bool all_finite(std::span<const double> a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a
std::uint64_t hash_bytes(std::span<const unsigned char> bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_matrix(const Matrix& m) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t word) {
    unsigned char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(word >> (8 * k));
    h = hash_bytes(buf, h);
  };
  feed(m.rows());
  feed(m.cols());
  for (double v : m.values()) feed(std::bit_cast<std::uint64_t>(v));
  return h;
}

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

std::uint64_t SeededRng::next_u64() { return engine_(); }

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double SeededRng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorKind::InvalidArgument, "SeededRng::below: zero bound");
  // rejection keeps the draw unbiased
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % bound;
}

SeededRng SeededRng::derive(std::string_view label) const {
  const auto* bytes = reinterpret_cast<const unsigned char*>(label.data());
  const std::uint64_t h = hash_bytes({bytes, label.size()});
  return SeededRng(mix64(seed_ ^ mix64(h)));
}

Vector gaussian_vector(SeededRng& rng, std::size_t len) {
  if (len == 0) fail(ErrorKind::InvalidArgument, "gaussian_vector: length must be positive");
  Vector v(len);
  for (double& x : v) x = rng.gaussian();
  return v;
}

Matrix gaussian_matrix(SeededRng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) fail(ErrorKind::InvalidArgument, "gaussian_matrix: empty shape");
  Vector values(rows * cols);
  for (double& x : values) x = rng.gaussian();
  return Matrix(rows, cols, std::move(values));
}

EigenPair power_iteration(const Matrix& g, int max_iters, double tol) {
  const std::size_t n = g.rows();
  if (n == 0 || g.cols() != n) fail(ErrorKind::Dimension, "power_iteration: matrix " + g.shape() + " is not square");

  double scale = 0.0;
  for (double v : g.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(g(i, j) - g(j, i)) > 1e-9 * std::max(1.0, scale))
        fail(ErrorKind::InvalidArgument, "power_iteration: matrix is not symmetric");

  EigenPair out;
  if (scale == 0.0) {
    out.vector.assign(n, 0.0);
    out.vector[0] = 1.0;
    out.degenerate = true;
    out.converged = true;
    return out;
  }

  SeededRng start(0x5eedULL);
  Vector v = gaussian_vector(start, n);
  {
    const double s = norm2(v);
    for (double& x : v) x /= s;
  }

  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = matvec(g, v);
    lambda = dot(v, w);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (w[i] - lambda * v[i]) * (w[i] - lambda * v[i]);
    out.iterations = it + 1;
    if (std::sqrt(res) <= tol * std::max(lambda, 1.0)) {
      out.converged = true;
      break;
    }
    const double wn = norm2(w);
    if (wn == 0.0) {
      // start landed in the null space
      out.degenerate = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
  }
  if (!out.converged) lambda = dot(v, matvec(g, v));

  // entries at the convergence noise level do not decide the sign
  const double floor = std::sqrt(tol);
  auto lead = std::find_if(v.begin(), v.end(), [floor](double x) { return std::abs(x) > floor; });
  if (lead != v.end() && *lead < 0.0)
    for (double& x : v) x = -x;

  out.vector = std::move(v);
  out.value = lambda;
  return out;
}

}  // namespace upr
