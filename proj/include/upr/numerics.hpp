#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace upr {

using Vector = std::vector<double>;

/// Dense row-major real matrix. A sensing operator is stored m x n with the
/// sensing vectors as rows, so measurements are matvec(M, x).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, Vector values);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }

  Matrix transposed() const;

  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector values_;
};

Vector matvec(const Matrix& m, std::span<const double> x);
Vector tmatvec(const Matrix& m, std::span<const double> u);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y + alpha * x
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);

bool all_finite(std::span<const double> a) noexcept;

/// Reproducible random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard. Normal deviates use the Box-Muller
/// transform on 53-bit uniforms:
///   u1 in (0, 1], u2 in [0, 1)
///   r = sqrt(-2 ln u1), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2)
/// with z1 held back for the next call.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double gaussian();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Child stream that depends only on (seed, label), never on how much of
  /// this stream has been consumed.
  SeededRng derive(std::string_view label) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_bytes(std::span<const unsigned char> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t hash_matrix(const Matrix& m) noexcept;

Vector gaussian_vector(SeededRng& rng, std::size_t len);
Matrix gaussian_matrix(SeededRng& rng, std::size_t rows, std::size_t cols);

struct EigenPair {
  Vector vector;  // unit norm; first entry above sqrt(tol) in magnitude is positive
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // zero matrix: vector is e1 and value is 0
};

/// Leading eigenpair of a symmetric positive semidefinite matrix.
EigenPair power_iteration(const Matrix& g, int max_iters = 1000, double tol = 1e-8);

}  // namespace upr
