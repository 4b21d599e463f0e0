#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>

#include "upr/numerics.hpp"

namespace upr {

/// Real phase-retrieval problem: y_i = |<a_i, x*>| with the a_i as rows of
/// the sensing matrix. The sensing matrix is shared and immutable so many
/// instances can reuse one operator.
class ProblemInstance {
 public:
  /// Checks y = |M x*| elementwise to 1e-12 (scaled by max(1, |y_i|)).
  ProblemInstance(std::shared_ptr<const Matrix> sensing, Vector truth, Vector measurements,
                  std::uint64_t seed = 0);

  const Matrix& sensing() const noexcept { return *sensing_; }
  const std::shared_ptr<const Matrix>& shared_sensing() const noexcept { return sensing_; }
  const Vector& truth() const noexcept { return truth_; }
  const Vector& measurements() const noexcept { return measurements_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::size_t n() const noexcept { return truth_.size(); }
  std::size_t m() const noexcept { return measurements_.size(); }

 private:
  std::shared_ptr<const Matrix> sensing_;
  Vector truth_;
  Vector measurements_;
  std::uint64_t seed_;
};

struct SmoothingConfig {
  double c = 1000.0;

  void validate() const;
};

/// How the phase (sign) of M x is taken inside a gradient step.
class PhaseModel {
 public:
  enum class Kind { Exact, Smooth, Oracle };

  static PhaseModel exact() { return PhaseModel(Kind::Exact, 0.0, {}); }
  static PhaseModel smooth(double c);
  /// Fixed signs, typically sign(M x*); ignores the argument's signs.
  static PhaseModel oracle(Vector signs);

  Kind kind() const noexcept { return kind_; }
  double sharpness() const noexcept { return c_; }

  Vector apply(std::span<const double> w) const;

 private:
  PhaseModel(Kind kind, double c, Vector signs) : kind_(kind), c_(c), signs_(std::move(signs)) {}

  Kind kind_;
  double c_;
  Vector signs_;
};

/// Instance with x* ~ N(0, I) and i.i.d. N(0, 1) sensing rows; the sensing
/// matrix is drawn first.
ProblemInstance generate_instance(int n, int m, SeededRng& rng);
/// Instance over an existing sensing matrix; measurements computed here.
ProblemInstance make_instance(std::shared_ptr<const Matrix> sensing, Vector truth, std::uint64_t seed = 0);

Vector measure(const Matrix& sensing, std::span<const double> x);

/// (1/2m) || y - |M x| ||^2
double loss(std::span<const double> x, const ProblemInstance& inst);
double loss(std::span<const double> x, const Matrix& sensing, std::span<const double> y);

Vector sign_exact(std::span<const double> z);
Vector smooth_sign(std::span<const double> z, const SmoothingConfig& cfg);

/// min(||x - x*||, ||x + x*||)
double distance(std::span<const double> x, std::span<const double> xstar);
double relative_error(std::span<const double> x, std::span<const double> xstar);

// Binary instance container, little-endian:
//   "UPRINST\0" | u32 version (=1) | u64 n | u64 m | u64 seed |
//   f64 sensing[m*n] row-major | f64 truth[n] | f64 measurements[m]
void save_instance(const ProblemInstance& inst, const std::filesystem::path& path);
ProblemInstance load_instance(const std::filesystem::path& path);

}  // namespace upr
