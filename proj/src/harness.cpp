#include "upr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "parallel.hpp"
#include "upr/error.hpp"
#include "upr/training.hpp"

namespace upr {

GridPoint GridPoint::make(int n, int m, double ratio, std::uint64_t master_seed) {
  if (n < 1 || m < 1) fail(ErrorKind::Config, "grid point needs positive n and m");
  GridPoint g;
  g.n = n;
  g.m = m;
  g.ratio = ratio;
  g.rng = SeededRng(master_seed).derive("grid/n=" + std::to_string(n) + "/m=" + std::to_string(m));
  SeededRng sensing_rng = g.rng.derive("sensing");
  g.sensing = std::make_shared<const Matrix>(gaussian_matrix(sensing_rng, m, n));
  return g;
}

GridPoint GridPoint::make(const HarnessConfig& cfg, double ratio) {
  return make(cfg.n, measurements_for(cfg.n, ratio), ratio, cfg.master_seed);
}

std::uint64_t GridPoint::trial_seed(int trial) const { return rng.derive("trial/" + std::to_string(trial)).seed(); }

std::uint64_t GridPoint::solver_seed(std::string_view method, int trial) const {
  return rng.derive("solver/" + std::string(method) + "/" + std::to_string(trial)).seed();
}

TrialRecord run_trial(const GridPoint& grid, const std::string& method, const SolverFn& solver, int trial,
                      const ExperimentConfig& cfg) {
  TrialRecord rec;
  rec.trial_seed = grid.trial_seed(trial);
  rec.method = method;
  rec.n = grid.n;
  rec.m = grid.m;

  SeededRng signal(rec.trial_seed);
  const ProblemInstance inst = make_instance(grid.sensing, gaussian_vector(signal, grid.n), rec.trial_seed);
  const Vector x0 = initialize(inst, cfg.init).x;
  const std::vector<Vector> iterates = solver(inst, x0, grid.solver_seed(method, trial));

  const auto expected = static_cast<std::size_t>(cfg.harness.iteration_budget) + 1;
  if (iterates.size() != expected)
    fail(ErrorKind::Config, "method '" + method + "' produced " + std::to_string(iterates.size()) +
                                " iterates, expected " + std::to_string(expected));
  rec.per_iteration_relative_error.reserve(expected);
  for (const auto& x : iterates) rec.per_iteration_relative_error.push_back(relative_error(x, inst.truth()));
  rec.final_iterate = iterates.back();
  rec.truth = inst.truth();
  rec.final_distance = distance(rec.final_iterate, rec.truth);
  rec.final_relative_error = rec.per_iteration_relative_error.back();
  rec.success = rec.final_distance <= cfg.harness.success_threshold;
  return rec;
}

MethodSpec rwf_method(const ExperimentConfig& cfg) {
  SolverConfig sc;
  sc.step = cfg.rwf_step;
  sc.iterations = cfg.harness.iteration_budget;
  return {"rwf", [sc](const GridPoint&) -> SolverFn {
            return [sc](const ProblemInstance& inst, const Vector& x0, std::uint64_t) {
              return run_rwf(inst, x0, sc).iterates;
            };
          }};
}

MethodSpec irwf_method(const ExperimentConfig& cfg) {
  SolverConfig sc;
  sc.step = cfg.irwf_step;
  sc.iterations = cfg.harness.iteration_budget;
  sc.batch_size = cfg.irwf_batch;
  sc.sampling = cfg.irwf_sampling;
  return {"irwf", [sc](const GridPoint&) -> SolverFn {
            return [sc](const ProblemInstance& inst, const Vector& x0, std::uint64_t seed) {
              SolverConfig run = sc;
              run.seed = seed;
              return run_minibatch_irwf(inst, x0, run).iterates;
            };
          }};
}

namespace {

SolverFn network_solver(std::shared_ptr<const UprParams> params) {
  return [params](const ProblemInstance& inst, const Vector& x0, std::uint64_t) {
    ForwardTrace trace = forward(*params, inst, x0);
    std::vector<Vector> out;
    out.reserve(trace.outputs.size() + 1);
    out.push_back(std::move(trace.input));
    for (auto& x : trace.outputs) out.push_back(std::move(x));
    return out;
  };
}

}  // namespace

MethodSpec upr_method(const ExperimentConfig& cfg) {
  return {"upr", [cfg](const GridPoint& grid) -> SolverFn {
            if (cfg.unfold.layers != cfg.harness.iteration_budget)
              fail(ErrorKind::Config, "upr: layers (" + std::to_string(cfg.unfold.layers) +
                                          ") must equal the iteration budget (" +
                                          std::to_string(cfg.harness.iteration_budget) + ")");
            SeededRng rng = grid.training_rng();
            const TrainingSet set = make_training_set(grid.sensing, cfg.train.batch_B, rng, cfg.init);
            TrainConfig tc = cfg.train;
            tc.seed = rng.seed();
            TrainReport report = train(set, tc, cfg.unfold);
            return network_solver(std::make_shared<const UprParams>(std::move(report.final_params)));
          }};
}

MethodSpec upr_method(std::shared_ptr<const UprParams> params, std::optional<std::uint64_t> sensing_hash) {
  if (!params) fail(ErrorKind::InvalidArgument, "upr_method: missing parameters");
  return {"upr", [params, sensing_hash](const GridPoint& grid) -> SolverFn {
            if (params->dim() != grid.n)
              fail(ErrorKind::Config, "upr: parameters for n = " + std::to_string(params->dim()) +
                                          " used at n = " + std::to_string(grid.n));
            if (sensing_hash && *sensing_hash != hash_matrix(*grid.sensing))
              fail(ErrorKind::Config, "upr: parameters were trained under a different sensing matrix");
            return network_solver(params);
          }};
}

std::vector<MethodSpec> methods_from_config(const ExperimentConfig& cfg) {
  std::vector<MethodSpec> out;
  for (const auto& name : cfg.methods) {
    if (name == "rwf") out.push_back(rwf_method(cfg));
    else if (name == "irwf") out.push_back(irwf_method(cfg));
    else if (name == "upr") out.push_back(upr_method(cfg));
    else fail(ErrorKind::Config, "config: unknown method '" + name + "'");
  }
  return out;
}

namespace {

std::vector<const MethodSpec*> sorted_methods(const std::vector<MethodSpec>& methods) {
  std::vector<const MethodSpec*> out;
  for (const auto& m : methods) out.push_back(&m);
  std::stable_sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->name < b->name; });
  return out;
}

std::vector<TrialRecord> run_trials(const GridPoint& grid, const MethodSpec& method, const ExperimentConfig& cfg) {
  const SolverFn solver = method.prepare(grid);
  std::vector<TrialRecord> records(cfg.harness.trials);
  detail::parallel_for(records.size(), [&](std::size_t t) {
    records[t] = run_trial(grid, method.name, solver, static_cast<int>(t), cfg);
  });
  return records;
}

std::string fmt10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::map<std::string, std::string> base_metadata(const ExperimentConfig& cfg, const char* kind) {
  return {{"kind", kind},
          {"version", kVersion},
          {"master_seed", std::to_string(cfg.harness.master_seed)},
          {"config", format_config(cfg)}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_meta(const std::map<std::string, std::string>& metadata, const std::filesystem::path& csv) {
  std::string text = "# upr-report-meta v1\n";
  std::string config;
  for (const auto& [k, v] : metadata) {
    if (k == "config") config = v;
    else text += k + " = " + v + "\n";
  }
  if (!config.empty()) text += "# experiment configuration\n" + config;
  std::filesystem::path meta = csv;
  meta += ".meta";
  write_text(meta, text);
}

}  // namespace

SweepReport run_sweep(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods) {
  cfg.validate();
  std::vector<double> ratios = cfg.harness.ratio_grid;
  std::sort(ratios.begin(), ratios.end());
  ratios.erase(std::unique(ratios.begin(), ratios.end()), ratios.end());

  SweepReport report;
  report.metadata = base_metadata(cfg, "sweep");
  for (double ratio : ratios) {
    const GridPoint grid = GridPoint::make(cfg.harness, ratio);
    for (const MethodSpec* method : sorted_methods(methods)) {
      std::vector<TrialRecord> records = run_trials(grid, *method, cfg);
      SweepRow row;
      row.ratio = ratio;
      row.method = method->name;
      row.trials = static_cast<int>(records.size());
      double err = 0.0;
      for (const auto& r : records) {
        row.esr += r.success ? 1 : 0;
        err += r.final_relative_error;
      }
      row.mean_rel_err = err / static_cast<double>(records.size());
      report.rows.push_back(row);
      for (auto& r : records) report.records.push_back(std::move(r));
    }
  }
  return report;
}

SweepReport esr_sweep(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods) {
  return run_sweep(cfg, methods);
}

SweepReport error_sweep(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods) {
  return run_sweep(cfg, methods);
}

std::vector<CurvePoint> CurveReport::method_curve(const std::string& method) const {
  std::vector<CurvePoint> out;
  for (const auto& p : points)
    if (p.method == method) out.push_back(p);
  return out;
}

CurveReport convergence_curve(const ExperimentConfig& cfg, const std::vector<MethodSpec>& methods) {
  cfg.validate();
  CurveReport report;
  report.ratio = cfg.harness.ratio_grid.front();
  report.metadata = base_metadata(cfg, "curve");
  report.metadata["ratio"] = fmt10(report.ratio);
  const GridPoint grid = GridPoint::make(cfg.harness, report.ratio);
  const int budget = cfg.harness.iteration_budget;
  for (const MethodSpec* method : sorted_methods(methods)) {
    std::vector<TrialRecord> records = run_trials(grid, *method, cfg);
    int successes = 0;
    std::vector<double> sums(budget + 1, 0.0);
    for (const auto& r : records) {
      if (!r.success) continue;
      ++successes;
      for (int k = 0; k <= budget; ++k) sums[k] += r.per_iteration_relative_error[k];
    }
    for (int k = 0; k <= budget; ++k) {
      CurvePoint p;
      p.iteration = k;
      p.method = method->name;
      p.successes = successes;
      if (successes > 0) p.mean_rel_err = sums[k] / successes;
      report.points.push_back(p);
    }
    for (auto& r : records) report.records.push_back(std::move(r));
  }
  return report;
}

std::string format_sweep_csv(const SweepReport& report) {
  std::string out = "ratio,method,trials,esr,mean_rel_err\n";
  for (const auto& r : report.rows)
    out += fmt10(r.ratio) + "," + r.method + "," + std::to_string(r.trials) + "," + std::to_string(r.esr) + "," +
           fmt10(r.mean_rel_err) + "\n";
  return out;
}

std::string format_curve_csv(const CurveReport& report) {
  std::string out = "iter,method,mean_rel_err,successes\n";
  for (const auto& p : report.points)
    out += std::to_string(p.iteration) + "," + p.method + "," + (p.mean_rel_err ? fmt10(*p.mean_rel_err) : "NA") +
           "," + std::to_string(p.successes) + "\n";
  return out;
}

void write_csv(const SweepReport& report, const std::filesystem::path& path) {
  write_text(path, format_sweep_csv(report));
  write_meta(report.metadata, path);
}

void write_csv(const CurveReport& report, const std::filesystem::path& path) {
  write_text(path, format_curve_csv(report));
  write_meta(report.metadata, path);
}

}  // namespace upr
