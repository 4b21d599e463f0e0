// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "upr/upr.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  upr_status status;
};

void check(upr_status status) {
  if (status != UPR_OK) throw Failure{status};
}

int exit_code(upr_status status) {
  switch (status) {
    case UPR_OK: return kExitOk;
    case UPR_ERR_CONFIG:
    case UPR_ERR_INVALID_ARGUMENT: return kExitConfig;
    case UPR_ERR_NUMERICAL: return kExitNumerical;
    default: return kExitFailure;
  }
}

using ConfigPtr = std::unique_ptr<upr_config, decltype(&upr_config_free)>;
using ParamsPtr = std::unique_ptr<upr_params, decltype(&upr_params_free)>;
using InstancePtr = std::unique_ptr<upr_instance, decltype(&upr_instance_free)>;

struct CommonOptions {
  std::string config;
  std::optional<int> n;
  std::optional<double> ratio;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool out_required) {
  cmd->add_option("--config", opts.config, "Experiment config file (key = value)");
  cmd->add_option("--n", opts.n, "Signal dimension override");
  cmd->add_option("--ratio", opts.ratio, "Single m/n ratio override");
  cmd->add_option("--seed", opts.seed, "Master seed override");
  auto* out = cmd->add_option("--out", opts.out, "Output path");
  if (out_required) out->required();
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConfigPtr load(const CommonOptions& opts) {
  upr_config* raw = nullptr;
  check(opts.config.empty() ? upr_config_default(&raw) : upr_config_load(opts.config.c_str(), &raw));
  ConfigPtr cfg(raw, &upr_config_free);
  if (opts.n) check(upr_config_set(cfg.get(), "n", std::to_string(*opts.n).c_str()));
  if (opts.ratio) check(upr_config_set(cfg.get(), "ratios", number(*opts.ratio).c_str()));
  if (opts.seed) check(upr_config_set(cfg.get(), "seed", std::to_string(*opts.seed).c_str()));
  return cfg;
}

// first ratio of the grid, used by train and eval
double grid_ratio(const CommonOptions& opts, const upr_config* cfg) {
  if (opts.ratio) return *opts.ratio;
  double ratio = 0.0;
  std::size_t count = 0;
  check(upr_config_ratios(cfg, &ratio, 1, &count));
  return ratio;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unfolded phase retrieval: training, evaluation and benchmark sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(upr_version()));

  CommonOptions train_opts, eval_opts, esr_opts, err_opts, curve_opts;
  std::string loss_csv, params_path, params_meta;
  int inst_n = 0, inst_m = 0;
  std::uint64_t inst_seed = 0;
  std::string inst_out;

  auto* train = app.add_subcommand("train", "Train a network at one grid point");
  add_common(train, train_opts, true);
  train->add_option("--loss-csv", loss_csv, "Per-epoch loss CSV (default: <out>.loss.csv)");

  auto* eval = app.add_subcommand("eval", "Evaluate trained parameters and baselines at one ratio");
  add_common(eval, eval_opts, true);
  eval->add_option("--params", params_path, "Trained parameters file")->required();
  eval->add_option("--params-meta", params_meta, "Sidecar written by train (default: <params>.meta if present)");

  auto* sweep_esr = app.add_subcommand("sweep-esr", "Empirical success rate versus m/n");
  add_common(sweep_esr, esr_opts, true);
  auto* sweep_err = app.add_subcommand("sweep-error", "Mean relative error versus m/n");
  add_common(sweep_err, err_opts, true);
  auto* curve = app.add_subcommand("curve", "Relative error versus iteration at one ratio");
  add_common(curve, curve_opts, true);

  auto* make_inst = app.add_subcommand("make-instance", "Write a random problem instance");
  make_inst->add_option("--n", inst_n, "Signal dimension")->required();
  make_inst->add_option("--m", inst_m, "Number of measurements")->required();
  make_inst->add_option("--seed", inst_seed, "Seed");
  make_inst->add_option("--out", inst_out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) {
      ConfigPtr cfg = load(train_opts);
      const double ratio = grid_ratio(train_opts, cfg.get());
      upr_params* raw = nullptr;
      const std::string loss = loss_csv.empty() ? train_opts.out + ".loss.csv" : loss_csv;
      const std::string meta = train_opts.out + ".meta";
      check(upr_train(cfg.get(), ratio, &raw, loss.c_str(), meta.c_str()));
      ParamsPtr params(raw, &upr_params_free);
      check(upr_params_save(params.get(), train_opts.out.c_str()));
    } else if (eval->parsed()) {
      ConfigPtr cfg = load(eval_opts);
      const double ratio = grid_ratio(eval_opts, cfg.get());
      upr_params* raw = nullptr;
      check(upr_params_load(params_path.c_str(), &raw));
      ParamsPtr params(raw, &upr_params_free);
      std::string meta = params_meta;
      if (meta.empty()) {
        const std::string guess = params_path + ".meta";
        if (std::FILE* f = std::fopen(guess.c_str(), "r")) {
          std::fclose(f);
          meta = guess;
        }
      }
      check(upr_eval(cfg.get(), ratio, params.get(), meta.empty() ? nullptr : meta.c_str(), eval_opts.out.c_str()));
    } else if (sweep_esr->parsed()) {
      ConfigPtr cfg = load(esr_opts);
      check(upr_sweep_esr(cfg.get(), esr_opts.out.c_str()));
    } else if (sweep_err->parsed()) {
      ConfigPtr cfg = load(err_opts);
      check(upr_sweep_error(cfg.get(), err_opts.out.c_str()));
    } else if (curve->parsed()) {
      ConfigPtr cfg = load(curve_opts);
      check(upr_curve(cfg.get(), curve_opts.out.c_str()));
    } else if (make_inst->parsed()) {
      upr_instance* raw = nullptr;
      check(upr_instance_generate(inst_n, inst_m, inst_seed, &raw));
      InstancePtr inst(raw, &upr_instance_free);
      check(upr_instance_save(inst.get(), inst_out.c_str()));
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "upr: %s: %s\n", upr_status_name(f.status), upr_last_error());
    return exit_code(f.status);
  }
  return kExitOk;
}
