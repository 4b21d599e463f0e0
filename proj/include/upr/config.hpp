#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "upr/baseline.hpp"
#include "upr/training.hpp"

namespace upr {

struct HarnessConfig {
  int trials = 100;
  double success_threshold = 1e-4;
  int n = 64;
  std::vector<double> ratio_grid{2, 3, 4, 5, 6, 7, 8, 9, 10};
  int iteration_budget = 20;
  std::uint64_t master_seed = 42;
};

/// Everything a sweep needs. Serialized as flat `key = value` text with `#`
/// comments; list values are comma separated.
struct ExperimentConfig {
  HarnessConfig harness;
  std::vector<std::string> methods{"irwf", "upr"};
  InitConfig init;
  double rwf_step = 1.0;
  double irwf_step = 0.2;
  int irwf_batch = 0;  // 0: max(1, m / 16)
  Sampling irwf_sampling = Sampling::UniformRandom;
  TrainConfig train;
  UnfoldConfig unfold;

  void validate() const;
};

/// Applies one `key = value` setting; unknown keys and malformed values
/// raise ErrorKind::Config naming the key.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

ExperimentConfig parse_config(std::string_view text);
std::string format_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// m for a grid ratio, rounded to the nearest integer.
int measurements_for(int n, double ratio);

}  // namespace upr
