#include "upr/upr.h"

#include <cstdio>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "upr/baseline.hpp"
#include "upr/config.hpp"
#include "upr/error.hpp"
#include "upr/harness.hpp"
#include "upr/training.hpp"

struct upr_config {
  upr::ExperimentConfig value;
};

struct upr_params {
  std::shared_ptr<const upr::UprParams> value;
};

struct upr_instance {
  upr::ProblemInstance value;
};

namespace {

thread_local std::string last_error;

upr_status to_status(upr::ErrorKind kind) {
  switch (kind) {
    case upr::ErrorKind::InvalidArgument: return UPR_ERR_INVALID_ARGUMENT;
    case upr::ErrorKind::Dimension: return UPR_ERR_DIMENSION;
    case upr::ErrorKind::Numerical: return UPR_ERR_NUMERICAL;
    case upr::ErrorKind::Config: return UPR_ERR_CONFIG;
    case upr::ErrorKind::Io: return UPR_ERR_IO;
  }
  return UPR_ERR_INTERNAL;
}

template <class Fn>
upr_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return UPR_OK;
  } catch (const upr::Error& e) {
    last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return UPR_ERR_INTERNAL;
}

template <class T>
const T& require(const T* handle, const char* what) {
  if (!handle) upr::fail(upr::ErrorKind::InvalidArgument, std::string(what) + " is null");
  return *handle;
}

void require_out(const void* p, const char* what) {
  if (!p) upr::fail(upr::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

void copy_out(const upr::Vector& v, double* out, std::size_t len) {
  require_out(out, "output buffer");
  if (len != v.size())
    upr::fail(upr::ErrorKind::Dimension, "output buffer holds " + std::to_string(len) + " values, need " + std::to_string(v.size()));
  std::copy(v.begin(), v.end(), out);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::optional<std::uint64_t> read_sensing_hash(const char* meta_path) {
  if (!meta_path) return std::nullopt;
  std::ifstream is(meta_path);
  if (!is) upr::fail(upr::ErrorKind::Io, std::string("cannot open ") + meta_path);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    if (key != "sensing_hash") continue;
    std::istringstream value(line.substr(eq + 1));
    std::uint64_t h = 0;
    if (!(value >> std::hex >> h)) upr::fail(upr::ErrorKind::Config, std::string(meta_path) + ": bad sensing_hash");
    return h;
  }
  upr::fail(upr::ErrorKind::Config, std::string(meta_path) + ": no sensing_hash entry");
}

upr_status sweep_to(const upr_config* cfg, const char* csv_out) {
  return guarded([&] {
    const auto& c = require(cfg, "config").value;
    require_out(csv_out, "output path");
    upr::write_csv(upr::run_sweep(c, upr::methods_from_config(c)), csv_out);
  });
}

}  // namespace

extern "C" {

const char* upr_version(void) { return upr::kVersion; }

const char* upr_last_error(void) { return last_error.c_str(); }

const char* upr_status_name(upr_status status) {
  switch (status) {
    case UPR_OK: return "ok";
    case UPR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case UPR_ERR_DIMENSION: return "dimension mismatch";
    case UPR_ERR_NUMERICAL: return "numerical failure";
    case UPR_ERR_CONFIG: return "configuration error";
    case UPR_ERR_IO: return "i/o error";
    case UPR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

upr_status upr_config_default(upr_config** out) {
  return guarded([&] {
    require_out(out, "out");
    *out = new upr_config{};
  });
}

upr_status upr_config_load(const char* path, upr_config** out) {
  return guarded([&] {
    require_out(out, "out");
    require_out(path, "path");
    *out = new upr_config{upr::load_config(path)};
  });
}

upr_status upr_config_set(upr_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require_out(cfg, "config");
    require_out(key, "key");
    require_out(value, "value");
    upr::ExperimentConfig next = cfg->value;
    upr::apply_setting(next, key, value);
    next.validate();
    cfg->value = std::move(next);
  });
}

upr_status upr_config_ratios(const upr_config* cfg, double* out, size_t len, size_t* count) {
  return guarded([&] {
    const auto& grid = require(cfg, "config").value.harness.ratio_grid;
    require_out(count, "count");
    if (len > 0) require_out(out, "output buffer");
    for (std::size_t i = 0; i < grid.size() && i < len; ++i) out[i] = grid[i];
    *count = grid.size();
  });
}

upr_status upr_config_save(const upr_config* cfg, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    upr::save_config(require(cfg, "config").value, path);
  });
}

void upr_config_free(upr_config* cfg) { delete cfg; }

upr_status upr_instance_generate(int n, int m, uint64_t seed, upr_instance** out) {
  return guarded([&] {
    require_out(out, "out");
    upr::SeededRng rng(seed);
    *out = new upr_instance{upr::generate_instance(n, m, rng)};
  });
}

upr_status upr_instance_load(const char* path, upr_instance** out) {
  return guarded([&] {
    require_out(out, "out");
    require_out(path, "path");
    *out = new upr_instance{upr::load_instance(path)};
  });
}

upr_status upr_instance_save(const upr_instance* inst, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    upr::save_instance(require(inst, "instance").value, path);
  });
}

upr_status upr_instance_dims(const upr_instance* inst, size_t* n, size_t* m) {
  return guarded([&] {
    const auto& v = require(inst, "instance").value;
    if (n) *n = v.n();
    if (m) *m = v.m();
  });
}

upr_status upr_instance_truth(const upr_instance* inst, double* out, size_t len) {
  return guarded([&] { copy_out(require(inst, "instance").value.truth(), out, len); });
}

upr_status upr_instance_measurements(const upr_instance* inst, double* out, size_t len) {
  return guarded([&] { copy_out(require(inst, "instance").value.measurements(), out, len); });
}

void upr_instance_free(upr_instance* inst) { delete inst; }

upr_status upr_initialize(const upr_instance* inst, const upr_config* cfg, double* out, size_t len) {
  return guarded([&] {
    const auto& i = require(inst, "instance").value;
    const auto& c = require(cfg, "config").value;
    copy_out(upr::initialize(i, c.init).x, out, len);
  });
}

upr_status upr_solve(const upr_instance* inst, const upr_config* cfg, const char* method, const upr_params* params,
                     uint64_t solver_seed, double* out, size_t len, double* rel_err) {
  return guarded([&] {
    const auto& i = require(inst, "instance").value;
    const auto& c = require(cfg, "config").value;
    require_out(method, "method");
    const std::string name = method;
    const upr::Vector x0 = upr::initialize(i, c.init).x;
    upr::Vector x;
    if (name == "upr") {
      const auto& p = require(params, "params");
      x = upr::forward(*p.value, i, x0).output();
    } else if (name == "rwf" || name == "irwf") {
      upr::SolverConfig sc;
      sc.iterations = c.harness.iteration_budget;
      sc.seed = solver_seed;
      if (name == "rwf") {
        sc.step = c.rwf_step;
        x = upr::run_rwf(i, x0, sc).final_iterate();
      } else {
        sc.step = c.irwf_step;
        sc.batch_size = c.irwf_batch;
        sc.sampling = c.irwf_sampling;
        x = upr::run_minibatch_irwf(i, x0, sc).final_iterate();
      }
    } else {
      upr::fail(upr::ErrorKind::InvalidArgument, "unknown method '" + name + "'");
    }
    copy_out(x, out, len);
    if (rel_err) *rel_err = upr::relative_error(x, i.truth());
  });
}

upr_status upr_distance(const double* x, const double* xstar, size_t len, double* out) {
  return guarded([&] {
    require_out(x, "x");
    require_out(xstar, "xstar");
    require_out(out, "out");
    *out = upr::distance({x, len}, {xstar, len});
  });
}

upr_status upr_params_load(const char* path, upr_params** out) {
  return guarded([&] {
    require_out(out, "out");
    require_out(path, "path");
    *out = new upr_params{std::make_shared<const upr::UprParams>(upr::load_params(path))};
  });
}

upr_status upr_params_save(const upr_params* params, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    upr::save_params(*require(params, "params").value, path);
  });
}

upr_status upr_params_shape(const upr_params* params, int* layers, int* n) {
  return guarded([&] {
    const auto& p = *require(params, "params").value;
    if (layers) *layers = p.layers();
    if (n) *n = p.dim();
  });
}

void upr_params_free(upr_params* params) { delete params; }

upr_status upr_train(const upr_config* cfg, double ratio, upr_params** out, const char* loss_csv,
                     const char* meta_path) {
  return guarded([&] {
    const auto& c = require(cfg, "config").value;
    require_out(out, "out");
    c.validate();
    const upr::GridPoint grid = upr::GridPoint::make(c.harness, ratio);
    upr::SeededRng rng = grid.training_rng();
    const upr::TrainingSet set = upr::make_training_set(grid.sensing, c.train.batch_B, rng, c.init);
    upr::TrainConfig tc = c.train;
    tc.seed = rng.seed();
    upr::TrainReport report = upr::train(set, tc, c.unfold);
    if (loss_csv) upr::write_loss_csv(report, loss_csv);
    if (meta_path) {
      std::ofstream os(meta_path);
      if (!os) upr::fail(upr::ErrorKind::Io, std::string("cannot open ") + meta_path + " for writing");
      char ratio_buf[40];
      std::snprintf(ratio_buf, sizeof ratio_buf, "%.17g", ratio);
      os << "# upr-params-meta v1\n"
         << "n = " << grid.n << "\n"
         << "m = " << grid.m << "\n"
         << "ratio = " << ratio_buf << "\n"
         << "seed = " << c.harness.master_seed << "\n"
         << "sensing_hash = " << hex64(upr::hash_matrix(*grid.sensing)) << "\n";
      if (!os) upr::fail(upr::ErrorKind::Io, std::string("write failed: ") + meta_path);
    }
    *out = new upr_params{std::make_shared<const upr::UprParams>(std::move(report.final_params))};
  });
}

upr_status upr_eval(const upr_config* cfg, double ratio, const upr_params* params, const char* meta_path,
                    const char* csv_out) {
  return guarded([&] {
    upr::ExperimentConfig c = require(cfg, "config").value;
    require_out(csv_out, "output path");
    c.harness.ratio_grid = {ratio};
    c.validate();
    std::vector<upr::MethodSpec> methods;
    for (const auto& name : c.methods) {
      if (name == "upr") {
        if (!params) upr::fail(upr::ErrorKind::Config, "eval: method 'upr' needs trained parameters");
        methods.push_back(upr::upr_method(params->value, read_sensing_hash(meta_path)));
      } else if (name == "rwf") {
        methods.push_back(upr::rwf_method(c));
      } else {
        methods.push_back(upr::irwf_method(c));
      }
    }
    upr::write_csv(upr::run_sweep(c, methods), csv_out);
  });
}

upr_status upr_sweep_esr(const upr_config* cfg, const char* csv_out) { return sweep_to(cfg, csv_out); }

upr_status upr_sweep_error(const upr_config* cfg, const char* csv_out) { return sweep_to(cfg, csv_out); }

upr_status upr_curve(const upr_config* cfg, const char* csv_out) {
  return guarded([&] {
    const auto& c = require(cfg, "config").value;
    require_out(csv_out, "output path");
    upr::write_csv(upr::convergence_curve(c, upr::methods_from_config(c)), csv_out);
  });
}

}  // extern "C"
