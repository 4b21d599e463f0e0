#include "upr/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "upr/error.hpp"

namespace upr {

void InitConfig::validate() const {
  if (!(lambda_factor > 0.0)) fail(ErrorKind::InvalidArgument, "init: lambda_factor must be positive");
  if (power_iters < 1) fail(ErrorKind::InvalidArgument, "init: power_iters must be at least 1");
  if (!(power_tol > 0.0)) fail(ErrorKind::InvalidArgument, "init: power_tol must be positive");
}

void SolverConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) fail(ErrorKind::InvalidArgument, "solver: step must be positive");
  if (iterations < 0) fail(ErrorKind::InvalidArgument, "solver: iterations must be nonnegative");
  if (batch_size < 0) fail(ErrorKind::InvalidArgument, "solver: batch_size must be nonnegative");
}

int SolverConfig::resolved_batch(std::size_t m) const {
  if (batch_size == 0) return std::max(1, static_cast<int>(m / 16));
  if (static_cast<std::size_t>(batch_size) > m)
    fail(ErrorKind::InvalidArgument, "solver: batch_size " + std::to_string(batch_size) +
                                         " exceeds m = " + std::to_string(m));
  return batch_size;
}

Matrix build_init_matrix(const Matrix& sensing, std::span<const double> y) {
  const std::size_t m = sensing.rows();
  const std::size_t n = sensing.cols();
  if (y.size() != m)
    fail(ErrorKind::Dimension, "build_init_matrix: " + std::to_string(y.size()) + " measurements for sensing " + sensing.shape());
  Matrix g(n, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (y[i] == 0.0) continue;
    const auto a = sensing.row(i);
    for (std::size_t r = 0; r < n; ++r) {
      const double s = y[i] * a[r];
      for (std::size_t c = r; c < n; ++c) g(r, c) += s * a[c];
    }
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) {
      g(r, c) *= inv_m;
      g(c, r) = g(r, c);
    }
  }
  return g;
}

Matrix build_init_matrix(const ProblemInstance& inst) {
  return build_init_matrix(inst.sensing(), inst.measurements());
}

InitialPoint initialize(const Matrix& sensing, std::span<const double> y, const InitConfig& cfg) {
  cfg.validate();
  const Matrix g = build_init_matrix(sensing, y);
  EigenPair eig = power_iteration(g, cfg.power_iters, cfg.power_tol);
  InitialPoint out;
  out.eigenvalue = eig.value;
  out.converged = eig.converged;
  if (eig.degenerate) {
    out.degenerate = true;
    out.x.assign(sensing.cols(), 0.0);
    return out;
  }
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  const double scale = cfg.lambda_factor * mean_y;
  out.x = std::move(eig.vector);
  for (double& v : out.x) v *= scale;
  return out;
}

InitialPoint initialize(const ProblemInstance& inst, const InitConfig& cfg) {
  return initialize(inst.sensing(), inst.measurements(), cfg);
}

Vector rwf_gradient(std::span<const double> x, const Matrix& sensing, std::span<const double> y,
                    const PhaseModel& phase) {
  if (y.size() != sensing.rows())
    fail(ErrorKind::Dimension, "rwf_gradient: " + std::to_string(y.size()) + " measurements for sensing " + sensing.shape());
  Vector w = matvec(sensing, x);
  const Vector s = phase.apply(w);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= y[i] * s[i];
  Vector g = tmatvec(sensing, w);
  const double k = static_cast<double>(sensing.rows());
  for (double& v : g) v /= k;
  return g;
}

Vector rwf_gradient(std::span<const double> x, const ProblemInstance& inst) {
  return rwf_gradient(x, inst.sensing(), inst.measurements());
}

Vector subset_gradient(std::span<const double> x, const Matrix& sensing, std::span<const double> y,
                       std::span<const std::size_t> rows, const PhaseModel& phase) {
  if (x.size() != sensing.cols())
    fail(ErrorKind::Dimension, "subset_gradient: vector of length " + std::to_string(x.size()) + " for sensing " + sensing.shape());
  if (y.size() != sensing.rows())
    fail(ErrorKind::Dimension, "subset_gradient: measurement count mismatch");
  if (rows.empty()) fail(ErrorKind::InvalidArgument, "subset_gradient: empty row subset");

  Vector w(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto a = sensing.row(rows[k]);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * x[j];
    w[k] = acc;
  }
  const Vector s = phase.apply(w);
  Vector g(sensing.cols(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double u = w[k] - y[rows[k]] * s[k];
    const auto a = sensing.row(rows[k]);
    for (std::size_t j = 0; j < a.size(); ++j) g[j] += a[j] * u;
  }
  const double count = static_cast<double>(rows.size());
  for (double& v : g) v /= count;
  return g;
}

namespace {

double safe_relative_error(std::span<const double> x, std::span<const double> truth) {
  if (norm2(truth) == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return relative_error(x, truth);
}

Trajectory start_trajectory(const ProblemInstance& inst, std::span<const double> x0, const SolverConfig& cfg) {
  cfg.validate();
  if (x0.size() != inst.n())
    fail(ErrorKind::Dimension, "initial point of length " + std::to_string(x0.size()) + " for n = " + std::to_string(inst.n()));
  if (!all_finite(x0)) fail(ErrorKind::Numerical, "initial point is not finite");
  Trajectory t;
  t.iterates.reserve(cfg.iterations + 1);
  t.iterates.emplace_back(x0.begin(), x0.end());
  t.relative_errors.push_back(safe_relative_error(x0, inst.truth()));
  return t;
}

void push_iterate(Trajectory& t, Vector x, const ProblemInstance& inst, int k, const char* who) {
  if (!all_finite(x))
    fail(ErrorKind::Numerical, std::string(who) + ": non-finite iterate at iteration " + std::to_string(k));
  t.relative_errors.push_back(safe_relative_error(x, inst.truth()));
  t.iterates.push_back(std::move(x));
}

}  // namespace

Trajectory run_rwf(const ProblemInstance& inst, std::span<const double> x0, const SolverConfig& cfg) {
  Trajectory t = start_trajectory(inst, x0, cfg);
  for (int k = 1; k <= cfg.iterations; ++k) {
    const Vector& x = t.iterates.back();
    const Vector g = rwf_gradient(x, inst.sensing(), inst.measurements(), cfg.phase);
    Vector next(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) next[j] = x[j] - cfg.step * g[j];
    push_iterate(t, std::move(next), inst, k, "run_rwf");
  }
  return t;
}

Trajectory run_minibatch_irwf(const ProblemInstance& inst, std::span<const double> x0, const SolverConfig& cfg) {
  Trajectory t = start_trajectory(inst, x0, cfg);
  const std::size_t m = inst.m();
  const auto batch = static_cast<std::size_t>(cfg.resolved_batch(m));

  SeededRng rng(cfg.seed);
  std::vector<std::size_t> pool(m);
  std::vector<std::size_t> rows(batch);
  for (int k = 1; k <= cfg.iterations; ++k) {
    if (cfg.sampling == Sampling::Cyclic) {
      const std::size_t start = (static_cast<std::size_t>(k - 1) * batch) % m;
      for (std::size_t b = 0; b < batch; ++b) rows[b] = (start + b) % m;
    } else {
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t pick = b + static_cast<std::size_t>(rng.below(m - b));
        std::swap(pool[b], pool[pick]);
        rows[b] = pool[b];
      }
    }
    std::sort(rows.begin(), rows.end());

    const Vector& x = t.iterates.back();
    const Vector g = subset_gradient(x, inst.sensing(), inst.measurements(), rows, cfg.phase);
    Vector next(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) next[j] = x[j] - cfg.step * g[j];
    push_iterate(t, std::move(next), inst, k, "run_minibatch_irwf");
  }
  return t;
}

}  // namespace upr
