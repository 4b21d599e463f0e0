#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "upr/model.hpp"
#include "upr/numerics.hpp"

namespace upr {

struct InitConfig {
  double lambda_factor = 1.2533141373155002;  // sqrt(pi / 2)
  int power_iters = 1000;
  double power_tol = 1e-8;

  void validate() const;
};

struct InitialPoint {
  Vector x;
  double eigenvalue = 0.0;
  bool converged = false;
  bool degenerate = false;  // G was zero; x is the zero vector
};

enum class Sampling { Cyclic, UniformRandom };

struct SolverConfig {
  double step = 1.0;
  int iterations = 20;
  /// 0 selects max(1, m / 16).
  int batch_size = 0;
  Sampling sampling = Sampling::UniformRandom;
  std::uint64_t seed = 0;
  PhaseModel phase = PhaseModel::exact();

  void validate() const;
  int resolved_batch(std::size_t m) const;
};

struct Trajectory {
  std::vector<Vector> iterates;  // x_0 ... x_L
  /// relative_error(x_k, x*) per iterate; NaN when x* = 0.
  std::vector<double> relative_errors;

  const Vector& final_iterate() const { return iterates.back(); }
};

/// G = (1/m) sum_i y_i a_i a_i^T, accumulated on the upper triangle and
/// mirrored, so G is exactly symmetric.
Matrix build_init_matrix(const Matrix& sensing, std::span<const double> y);
Matrix build_init_matrix(const ProblemInstance& inst);

/// x0 = lambda_factor * mean(y) * z with z the unit leading eigenvector of G.
/// E|a^T x| = sqrt(2/pi) ||x|| for Gaussian a, so the scale estimates ||x*||.
InitialPoint initialize(const Matrix& sensing, std::span<const double> y, const InitConfig& cfg = {});
InitialPoint initialize(const ProblemInstance& inst, const InitConfig& cfg = {});

/// (1/m) M^T (M x - y . phase(M x))
Vector rwf_gradient(std::span<const double> x, const Matrix& sensing, std::span<const double> y,
                    const PhaseModel& phase = PhaseModel::exact());
Vector rwf_gradient(std::span<const double> x, const ProblemInstance& inst);

/// Same expression restricted to the rows in `rows` (ascending), scaled by
/// 1/|rows|. With rows = 0..m-1 it is bitwise equal to rwf_gradient.
Vector subset_gradient(std::span<const double> x, const Matrix& sensing, std::span<const double> y,
                       std::span<const std::size_t> rows, const PhaseModel& phase = PhaseModel::exact());

/// Full-batch RWF: x_{k+1} = x_k - step * rwf_gradient(x_k).
Trajectory run_rwf(const ProblemInstance& inst, std::span<const double> x0, const SolverConfig& cfg);

/// Mini-batch IRWF. Each outer iteration draws one subset S of batch_size
/// rows and applies x <- x - step * (1/|S|) M_S^T (M_S x - y_S . sign(M_S x)).
/// Cyclic sampling walks consecutive blocks (wrapping); uniform sampling draws
/// S without replacement from the solver seed.
Trajectory run_minibatch_irwf(const ProblemInstance& inst, std::span<const double> x0, const SolverConfig& cfg);

}  // namespace upr
