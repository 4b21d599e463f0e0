// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance <path-to-upr-cli> [report-dir] [--expect-fail 4,5,7]
// Exit status is nonzero when a criterion fails that is not listed in
// --expect-fail, or when a listed criterion passes (the list is stale).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "upr/baseline.hpp"
#include "upr/error.hpp"
#include "upr/harness.hpp"
#include "upr/training.hpp"

using namespace upr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector negate(Vector v) {
  for (auto& x : v) x = -x;
  return v;
}

fs::path report_dir;

void save(const std::string& name, const std::string& text) {
  if (report_dir.empty()) return;
  std::ofstream(report_dir / name, std::ios::binary) << text;
}

// n = 8, m = 40, L = 3, B = 4, c = 50; central differences with h = 1e-5
Outcome gradient_check() {
  const auto t0 = Clock::now();
  SeededRng rng(1001);
  const TrainingSet set = make_training_set(8, 40, 4, rng);
  double worst = 0.0;
  int compared = 0;
  for (double spread : {0.0, 0.3}) {
    UprParams p = init_params(3, 8, 0.8, 50.0);
    for (double& t : p.theta()) t += spread * rng.gaussian();
    const Vector g = loss_gradient(p, set);
    const double h = 1e-5;
    for (std::size_t k = 0; k < g.size(); ++k) {
      UprParams plus = p, minus = p;
      plus.theta()[k] += h;
      minus.theta()[k] -= h;
      const double fd = (training_loss(plus, set) - training_loss(minus, set)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-8}));
      ++compared;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 5.0,
          fmt("%d components, worst relative error %.3g (limit 1e-4), %.2f s (limit 5 s)", compared, worst, secs)};
}

// full-batch RWF, step 1, n = 64, m/n = 10, 500 iterations
Outcome baseline_sanity() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.harness.n = 64;
  cfg.harness.ratio_grid = {10};
  cfg.harness.trials = 100;
  cfg.harness.iteration_budget = 500;
  cfg.methods = {"rwf"};
  cfg.rwf_step = 1.0;
  const SweepReport r = run_sweep(cfg, methods_from_config(cfg));
  save("c2_rwf_esr.csv", format_sweep_csv(r));
  const double secs = seconds_since(t0);
  const int esr = r.rows.at(0).esr;
  return {esr >= 95 && secs < 60.0, fmt("ESR %d/100 (need >= 95), %.1f s (limit 60 s)", esr, secs)};
}

// theta = ln 1, c = 1e6 against run_rwf over 20 layers, n = 16
Outcome unfolding_consistency() {
  SeededRng rng(1003);
  const ProblemInstance p = generate_instance(16, 160, rng);
  const Vector x0 = initialize(p).x;
  const ForwardTrace tr = forward(init_params(20, 16, 1.0, 1e6), p, x0);
  SolverConfig sc;
  sc.step = 1.0;
  sc.iterations = 20;
  const Trajectory ref = run_rwf(p, x0, sc);
  double worst = 0.0;
  for (int l = 0; l < 20; ++l)
    for (int j = 0; j < 16; ++j) worst = std::max(worst, std::abs(tr.outputs[l][j] - ref.iterates[l + 1][j]));
  return {worst <= 1e-9, fmt("max per-layer deviation %.3g over 20 layers (limit 1e-9)", worst)};
}

struct DeskSweep {
  SweepReport report;
  double seconds = 0.0;
};

DeskSweep desk_sweep() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.harness.n = 32;
  cfg.harness.ratio_grid = {3, 4, 5, 6};
  cfg.harness.trials = 100;
  cfg.methods = {"irwf", "upr"};
  DeskSweep out{run_sweep(cfg, methods_from_config(cfg)), 0.0};
  out.seconds = seconds_since(t0);
  save("c4_c6_desk_sweep.csv", format_sweep_csv(out.report));
  return out;
}

const SweepRow& row_for(const SweepReport& r, double ratio, const std::string& method) {
  for (const auto& row : r.rows)
    if (row.ratio == ratio && row.method == method) return row;
  fail(ErrorKind::InvalidArgument, "missing sweep row");
}

Outcome esr_dominance(const DeskSweep& d) {
  bool all_ge = true, some_gt = false;
  std::string detail;
  for (double ratio : {3.0, 4.0, 5.0, 6.0}) {
    const int u = row_for(d.report, ratio, "upr").esr, i = row_for(d.report, ratio, "irwf").esr;
    all_ge &= u >= i;
    some_gt |= u > i;
    detail += fmt("m/n=%g upr %d irwf %d; ", ratio, u, i);
  }
  detail += fmt("%.0f s (limit 900 s)", d.seconds);
  return {all_ge && some_gt && d.seconds < 900.0, detail};
}

Outcome error_dominance(const DeskSweep& d) {
  bool ok = true;
  std::string detail;
  for (double ratio : {3.0, 4.0, 5.0, 6.0}) {
    const double u = row_for(d.report, ratio, "upr").mean_rel_err, i = row_for(d.report, ratio, "irwf").mean_rel_err;
    ok &= u <= i;
    detail += fmt("m/n=%g upr %.4g irwf %.4g; ", ratio, u, i);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// n = 64, m/n = 10, success-only mean relative error per iteration
Outcome convergence_speed() {
  ExperimentConfig cfg;
  cfg.harness.n = 64;
  cfg.harness.ratio_grid = {10};
  cfg.harness.trials = 100;
  cfg.methods = {"irwf", "upr"};
  const CurveReport r = convergence_curve(cfg, methods_from_config(cfg));
  save("c5_curve.csv", format_curve_csv(r));
  const auto upr = r.method_curve("upr"), irwf = r.method_curve("irwf");
  const int us = upr.back().successes, is = irwf.back().successes;

  // all-trial means, printed for context only
  std::vector<double> all_u(21, 0.0), all_i(21, 0.0);
  for (const auto& rec : r.records)
    for (int k = 0; k <= 20; ++k) (rec.method == "upr" ? all_u : all_i)[k] += rec.per_iteration_relative_error[k] / 100;
  const std::string context = fmt("all-trial mean at 20: upr %.3g irwf %.3g", all_u[20], all_i[20]);

  if (!upr.back().mean_rel_err || !irwf.back().mean_rel_err)
    return {false, fmt("successful trials upr %d irwf %d; success-only curve undefined for a method with none (%s)", us,
                       is, context.c_str())};
  const double target = *irwf.back().mean_rel_err;
  int reach = -1;
  for (const auto& pt : upr)
    if (*pt.mean_rel_err <= target) {
      reach = pt.iteration;
      break;
    }
  const bool ok = *upr.back().mean_rel_err <= target && reach >= 0 && reach <= 15;
  return {ok, fmt("upr@20 %.3g vs irwf@20 %.3g, upr reaches it at layer %d (need <= 15); successes upr %d irwf %d",
                  *upr.back().mean_rel_err, target, reach, us, is)};
}

struct Trained {
  TrainReport report;
  std::shared_ptr<const Matrix> sensing;
};

// standard config: n = 32, m = 128, B = 64, L = 20, lr 1e-3, 300 epochs
Trained standard_training() {
  const ExperimentConfig cfg;
  const GridPoint grid = GridPoint::make(32, 128, 4.0, cfg.harness.master_seed);
  SeededRng rng = grid.training_rng();
  const TrainingSet set = make_training_set(grid.sensing, cfg.train.batch_B, rng, cfg.init);
  return {train(set, cfg.train, cfg.unfold), grid.sensing};
}

Outcome training_behavior(const Trained& t) {
  const auto& h = t.report.loss_history;
  std::string csv = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < h.size(); ++e) csv += fmt("%zu,%.10g\n", e, h[e]);
  save("c7_loss.csv", csv);
  const bool finite = all_finite(h);
  const double ratio = h.back() / h.front();
  return {finite && ratio <= 0.2, fmt("loss %.4g -> %.4g over %zu epochs, ratio %.3f (need <= 0.2), finite: %s",
                                      h.front(), h.back(), h.size(), ratio, finite ? "yes" : "no")};
}

Outcome sign_invariance(const Trained& t) {
  SeededRng rng(1008);
  int mismatches = 0, checks = 0;
  auto expect = [&](bool ok) {
    ++checks;
    mismatches += ok ? 0 : 1;
  };
  for (int k = 0; k < 50; ++k) {
    const ProblemInstance p = generate_instance(12, 60, rng);
    const Vector x = gaussian_vector(rng, 12), xs = p.truth(), nxs = negate(xs);
    expect(distance(x, xs) == distance(x, nxs));
    expect(relative_error(x, xs) == relative_error(x, nxs));
    expect(measure(p.sensing(), xs) == measure(p.sensing(), nxs));
    const ProblemInstance q = make_instance(p.shared_sensing(), nxs);
    expect(loss(x, p) == loss(x, q));
  }

  // full pipeline on the trained grid point: initializer, every solver, success flag
  const ExperimentConfig cfg;
  auto params = std::make_shared<const UprParams>(t.report.final_params);
  const int n = 32;
  const double threshold = cfg.harness.success_threshold;
  int successes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SeededRng srng(5000 + trial);
    const Vector truth = gaussian_vector(srng, n);
    const ProblemInstance a = make_instance(t.sensing, truth), b = make_instance(t.sensing, negate(truth));
    const Vector xa = initialize(a).x, xb = initialize(b).x;
    expect(xa == xb);
    SolverConfig is;
    is.iterations = 20;
    SolverConfig rs;
    rs.iterations = 300;  // long enough that most runs succeed
    is.step = cfg.irwf_step;
    is.seed = static_cast<std::uint64_t>(trial);
    const std::vector<std::pair<Vector, Vector>> finals{
        {run_rwf(a, xa, rs).final_iterate(), run_rwf(b, xb, rs).final_iterate()},
        {run_minibatch_irwf(a, xa, is).final_iterate(), run_minibatch_irwf(b, xb, is).final_iterate()},
        {forward(*params, a, xa).output(), forward(*params, b, xb).output()}};
    for (const auto& [fa, fb] : finals) {
      const double da = distance(fa, a.truth()), db = distance(fb, b.truth());
      expect(da == db);
      expect((da <= threshold) == (db <= threshold));
      successes += da <= threshold ? 1 : 0;
    }
  }
  return {mismatches == 0,
          fmt("%d exact comparisons, %d mismatches (%d successful solver runs in the pipeline check)", checks,
              mismatches, successes)};
}

// 2 / (lmin + lmax) of (1/m) M^T M, inside the 2m / ||M||^2 stability limit
double least_squares_step(const Matrix& m) {
  const std::size_t n = m.cols();
  Matrix g(n, n);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) g(a, b) += m(i, a) * m(i, b) / static_cast<double>(m.rows());
  const double lmax = power_iteration(g, 100000, 1e-12).value;
  Matrix shifted(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) shifted(a, b) = (a == b ? lmax : 0.0) - g(a, b);
  const double lmin = lmax - power_iteration(shifted, 100000, 1e-12).value;
  return 2.0 / (lmin + lmax);
}

Outcome oracle_signs() {
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    SeededRng rng(9000 + trial);
    const ProblemInstance p = generate_instance(8, 24, rng);
    SolverConfig sc;
    sc.iterations = 200;
    sc.step = least_squares_step(p.sensing());
    sc.phase = PhaseModel::oracle(sign_exact(matvec(p.sensing(), p.truth())));
    const double d = distance(run_rwf(p, initialize(p).x, sc).final_iterate(), p.truth());
    worst = std::max(worst, d);
    ok += d <= 1e-6 ? 1 : 0;
  }
  return {ok == 100, fmt("%d/100 trials within 1e-6 (worst %.3g)", ok, worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome cli_determinism(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / ("upr-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path conf = dir / "small.conf";
  std::ofstream(conf) << "n = 16\nratios = 3, 5\ntrials = 20\nmethods = irwf, upr\nepochs = 20\ntrain_batch = 16\n";
  std::string outputs[2];
  int codes[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("run" + std::to_string(run) + ".csv");
    const std::string cmd =
        "\"" + cli + "\" sweep-esr --config \"" + conf.string() + "\" --seed 42 --out \"" + out.string() + "\"";
    codes[run] = std::system(cmd.c_str());
    outputs[run] = slurp(out);
  }
  fs::remove_all(dir);
  const bool ok = codes[0] == 0 && codes[1] == 0 && !outputs[0].empty() && outputs[0] == outputs[1];
  return {ok, fmt("exit codes %d/%d, %zu bytes, identical: %s", codes[0], codes[1], outputs[0].size(),
                  outputs[0] == outputs[1] ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> positional;
  std::set<int> expected_red;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) expected_red.insert(std::stoi(item));
    } else {
      positional.push_back(arg);
    }
  }
  if (positional.empty()) {
    std::fprintf(stderr, "usage: %s <upr-cli> [report-dir] [--expect-fail ids]\n", argv[0]);
    return 2;
  }
  const std::string cli = positional[0];
  if (positional.size() > 1) {
    report_dir = positional[1];
    fs::create_directories(report_dir);
  }

  int failures = 0, unexpected = 0;
  std::string summary;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    const bool listed = expected_red.count(id) > 0;
    unexpected += o.pass == listed ? 1 : 0;
    const std::string line = fmt("criterion %2d %s: %s (%s)%s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                                 listed ? (o.pass ? " [listed as expected failure]" : " [expected failure]") : "");
    std::fputs(line.c_str(), stdout);
    summary += line;
    std::fflush(stdout);
  };

  report(1, "gradient matches finite differences", gradient_check);
  report(2, "full-batch RWF success rate", baseline_sanity);
  report(3, "network with large c reproduces RWF", unfolding_consistency);

  DeskSweep desk;
  std::string desk_error;
  try {
    desk = desk_sweep();
  } catch (const std::exception& e) {
    desk_error = e.what();
  }
  auto with_desk = [&](Outcome (*f)(const DeskSweep&)) {
    return [&, f] {
      if (!desk_error.empty()) throw std::runtime_error(desk_error);
      return f(desk);
    };
  };
  report(4, "UPR success rate dominates IRWF at desk scale", with_desk(esr_dominance));
  report(5, "UPR converges faster than IRWF", convergence_speed);
  report(6, "UPR mean error below IRWF at desk scale", with_desk(error_dominance));

  std::optional<Trained> trained;
  std::string train_error;
  try {
    trained.emplace(standard_training());
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  auto with_training = [&](Outcome (*f)(const Trained&)) {
    return [&, f] {
      if (!train_error.empty()) throw std::runtime_error(train_error);
      return f(*trained);
    };
  };
  report(7, "training loss drops to a fifth", with_training(training_behavior));
  report(8, "sign invariance", with_training(sign_invariance));
  report(9, "oracle signs converge", oracle_signs);
  report(10, "sweep-esr output is deterministic", [&] { return cli_determinism(cli); });

  summary += fmt("%d of 10 criteria failed, %d outcome(s) differ from the expected list\n", failures, unexpected);
  std::fputs(summary.c_str() + summary.rfind('\n', summary.size() - 2) + 1, stdout);
  save("summary.txt", summary);
  return unexpected == 0 ? 0 : 1;
}
