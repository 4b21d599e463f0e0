#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "upr/config.hpp"
#include "upr/model.hpp"
#include "upr/unfolded.hpp"

namespace upr {

/// One (n, m) point of an experiment grid. Every method at the point sees
/// the same sensing matrix and the same test signals.
struct GridPoint {
  int n = 0;
  int m = 0;
  double ratio = 0.0;
  std::shared_ptr<const Matrix> sensing;
  SeededRng rng{0};  // root of every stream used at this point

  static GridPoint make(const HarnessConfig& cfg, double ratio);
  static GridPoint make(int n, int m, double ratio, std::uint64_t master_seed);

  std::uint64_t trial_seed(int trial) const;
  std::uint64_t solver_seed(std::string_view method, int trial) const;
  SeededRng training_rng() const { return rng.derive("train"); }
};

/// Produces x_0 ... x_budget from an instance and its initial point.
using SolverFn =
    std::function<std::vector<Vector>(const ProblemInstance& inst, const Vector& x0, std::uint64_t solver_seed)>;

struct MethodSpec {
  std::string name;
  /// Called once per grid point (UPR trains here).
  std::function<SolverFn(const GridPoint&)> prepare;
};

struct TrialRecord {
  std::uint64_t trial_seed = 0;
  std::string method;
  int n = 0;
  int m = 0;
  double final_distance = 0.0;
  double final_relative_error = 0.0;
  bool success = false;
  std::vector<double> per_iteration_relative_error;
  Vector final_iterate;
  Vector truth;
};

TrialRecord run_trial(const GridPoint& grid, const std::string& method, const SolverFn& solver, int trial,
                      const ExperimentConfig& cfg);

MethodSpec rwf_method(const ExperimentConfig& cfg);
MethodSpec irwf_method(const ExperimentConfig& cfg);
/// Trains a fresh network on B signals under each grid point's matrix.
MethodSpec upr_method(const ExperimentConfig& cfg);
/// Evaluates fixed parameters. When `sensing_hash` is set, the grid's
/// sensing matrix must hash to it.
MethodSpec upr_method(std::shared_ptr<const UprParams> params, std::optional<std::uint64_t> sensing_hash);
std::vector<MethodSpec> methods_from_config(const ExperimentConfig& cfg);

struct SweepRow {
  double ratio = 0.0;
  std::string method;
  int trials = 0;
  int esr = 0;  // successful trials
  double mean_rel_err = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // sorted by ratio, then method
  std::vector<TrialRecord> records;
  std::map<std::string, std::string> metadata;
};

/// Runs every method at every ratio and fills both ESR and mean relative
/// error. esr_sweep and error_sweep are the same computation read two ways.
SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods);
SweepReport esr_sweep(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods);
SweepReport error_sweep(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods);

struct CurvePoint {
  int iteration = 0;
  std::string method;
  std::optional<double> mean_rel_err;  // empty when no trial succeeded
  int successes = 0;
};

struct CurveReport {
  double ratio = 0.0;
  std::vector<CurvePoint> points;  // method-major, iteration ascending
  std::vector<TrialRecord> records;
  std::map<std::string, std::string> metadata;

  std::vector<CurvePoint> method_curve(const std::string& method) const;
};

/// Per-iteration mean relative error over successful trials at the first
/// ratio of the grid.
CurveReport convergence_curve(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods);

/// `ratio,method,trials,esr,mean_rel_err`
std::string format_sweep_csv(const SweepReport& report);
/// `iter,method,mean_rel_err,successes`; an empty mean is written as NA.
std::string format_curve_csv(const CurveReport& report);
/// Writes the CSV and a `<path>.meta` sidecar with the report metadata.
void write_csv(const SweepReport& report, const std::filesystem::path& path);
void write_csv(const CurveReport& report, const std::filesystem::path& path);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace upr
