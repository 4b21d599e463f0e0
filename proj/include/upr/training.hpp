#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "upr/baseline.hpp"
#include "upr/unfolded.hpp"

namespace upr {

struct TrainingSample {
  Vector truth;
  Vector measurements;
  Vector init;  // baseline initializer output; not trainable
};

/// B signals observed through one fixed sensing matrix.
struct TrainingSet {
  std::shared_ptr<const Matrix> sensing;
  std::vector<TrainingSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
};

struct TrainConfig {
  int batch_B = 64;
  double learning_rate = 1e-3;
  int epochs = 300;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Architecture knobs of the unrolled network.
struct UnfoldConfig {
  int layers = 20;
  double delta0 = 0.8;
  double c = 1000.0;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  long step_count = 0;
};

struct TrainReport {
  std::vector<double> loss_history;  // mean loss at the start of each epoch
  UprParams final_params;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

TrainingSet make_training_set(int n, int m, int batch, SeededRng& rng, const InitConfig& init = {});
/// Draws `batch` truths for an existing sensing matrix.
TrainingSet make_training_set(std::shared_ptr<const Matrix> sensing, int batch, SeededRng& rng,
                              const InitConfig& init = {});

/// min(||x_L - x||^2, ||x_L + x||^2) for sample i.
double sample_loss(const UprParams& params, const TrainingSet& set, std::size_t i);
/// Mean of sample_loss over the set.
double training_loss(const UprParams& params, const TrainingSet& set);

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;  // shaped like theta (L x n, row-major)
};

/// Reverse accumulation through the unrolled layers. Each sample's sign
/// branch is the one attaining the min (ties go to ||x_L - x||) and is held
/// fixed while differentiating. Per-sample terms are reduced in index order.
LossAndGradient loss_and_gradient(const UprParams& params, const TrainingSet& set);
Vector loss_gradient(const UprParams& params, const TrainingSet& set);

AdamState adam_init(const UprParams& params);
void adam_step(AdamState& state, UprParams& params, std::span<const double> grad, const TrainConfig& cfg);

TrainReport train(const TrainingSet& set, const TrainConfig& cfg, const UnfoldConfig& unfold);
TrainReport train(int n, int m, const TrainConfig& cfg, const UnfoldConfig& unfold, SeededRng& rng);

/// CSV with header `epoch,mean_loss`.
void write_loss_csv(const TrainReport& report, const std::filesystem::path& path);

}  // namespace upr
