#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "upr/model.hpp"
#include "upr/numerics.hpp"

namespace upr {

/// Trainable state of the unfolded network: one row of raw log-steps per
/// layer. The effective diagonal preconditioner of layer l is exp(theta[l]),
/// so every step is strictly positive for any finite theta.
class UprParams {
 public:
  UprParams(int layers, int dim, Vector theta, SmoothingConfig smoothing);

  int layers() const noexcept { return layers_; }
  int dim() const noexcept { return dim_; }
  const SmoothingConfig& smoothing() const noexcept { return smoothing_; }

  std::span<const double> theta() const noexcept { return theta_; }
  std::span<double> theta() noexcept { return theta_; }
  std::span<const double> theta_row(int layer) const;

  friend bool operator==(const UprParams& a, const UprParams& b) {
    return a.layers_ == b.layers_ && a.dim_ == b.dim_ && a.smoothing_.c == b.smoothing_.c && a.theta_ == b.theta_;
  }

 private:
  int layers_;
  int dim_;
  Vector theta_;
  SmoothingConfig smoothing_;
};

/// All theta = ln(delta0): with exact signs the network is `layers` full-batch
/// RWF steps of size delta0.
UprParams init_params(int layers, int dim, double delta0, double c);

Vector effective_steps(const UprParams& params, int layer);

/// Intermediates of one layer, enough to run the adjoint.
struct LayerCache {
  Vector projection;  // w = M z
  Vector phase;       // phase(w), tanh(c w) during training
  Vector direction;   // q = (1/m) M^T (w - y . phase)
};

struct ForwardTrace {
  Vector input;
  std::vector<Vector> outputs;  // x_1 ... x_L
  std::vector<LayerCache> caches;

  const Vector& output() const { return outputs.empty() ? input : outputs.back(); }
  const Vector& layer_input(int layer) const { return layer == 0 ? input : outputs[layer - 1]; }
};

/// z - step . (1/m) M^T (M z - y . phase(M z))
Vector layer_forward(std::span<const double> z, std::span<const double> step, const Matrix& sensing,
                     std::span<const double> y, const PhaseModel& phase, LayerCache* cache = nullptr);
Vector layer_forward(std::span<const double> z, std::span<const double> step, const ProblemInstance& inst, double c);

/// Runs every layer with its effective steps; phase defaults to tanh(c .)
/// with the params' smoothing constant.
ForwardTrace forward(const UprParams& params, const Matrix& sensing, std::span<const double> y,
                     std::span<const double> x0);
ForwardTrace forward(const UprParams& params, const Matrix& sensing, std::span<const double> y,
                     std::span<const double> x0, const PhaseModel& phase);
ForwardTrace forward(const UprParams& params, const ProblemInstance& inst, std::span<const double> x0);

/// Reverse pass of one layer. Given d(J)/d(output), accumulates d(J)/d(theta
/// row) into `theta_grad` and returns d(J)/d(input). Exact and oracle phases
/// have zero derivative.
Vector layer_backward(std::span<const double> output_adjoint, std::span<const double> step, const LayerCache& cache,
                      const Matrix& sensing, std::span<const double> y, const PhaseModel& phase,
                      std::span<double> theta_grad);

// Text format, 17 significant digits so every value round-trips exactly:
//   upr-params v1 L=<L> n=<n> c=<c>
//   <theta[0][0]> ... <theta[0][n-1]>
//   ...            (L rows)
std::string format_params(const UprParams& params);
UprParams parse_params(std::string_view text);
void save_params(const UprParams& params, const std::filesystem::path& path);
UprParams load_params(const std::filesystem::path& path);

}  // namespace upr
