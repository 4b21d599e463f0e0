#include "upr/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "upr/error.hpp"

namespace upr {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorKind::Config, "config: bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return v;
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::Config, "config: " + what); };
  if (harness.trials < 1) bad("trials must be at least 1");
  if (!(harness.success_threshold > 0.0)) bad("success_threshold must be positive");
  if (harness.n < 1) bad("n must be positive");
  if (harness.ratio_grid.empty()) bad("ratios must not be empty");
  for (double r : harness.ratio_grid)
    if (!(r > 0.0) || measurements_for(harness.n, r) < 1) bad("ratio " + fmt_double(r) + " gives no measurements");
  if (harness.iteration_budget < 0) bad("iterations must be nonnegative");
  if (methods.empty()) bad("methods must not be empty");
  for (const auto& m : methods)
    if (m != "rwf" && m != "irwf" && m != "upr") bad("unknown method '" + m + "'");
  if (!(rwf_step > 0.0) || !(irwf_step > 0.0)) bad("step sizes must be positive");
  if (irwf_batch < 0) bad("irwf_batch must be nonnegative");
  if (unfold.layers < 1) bad("layers must be at least 1");
  if (!(unfold.delta0 > 0.0)) bad("delta0 must be positive");
  if (!(unfold.c > 0.0)) bad("smoothing_c must be positive");
  try {
    init.validate();
    train.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "n") {
    cfg.harness.n = parse_number<int>(key, value);
  } else if (key == "ratios") {
    cfg.harness.ratio_grid.clear();
    for (auto item : split_list(value)) cfg.harness.ratio_grid.push_back(parse_number<double>(key, item));
  } else if (key == "trials") {
    cfg.harness.trials = parse_number<int>(key, value);
  } else if (key == "success_threshold") {
    cfg.harness.success_threshold = parse_number<double>(key, value);
  } else if (key == "iterations") {
    cfg.harness.iteration_budget = parse_number<int>(key, value);
  } else if (key == "seed") {
    cfg.harness.master_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "methods") {
    cfg.methods.clear();
    for (auto item : split_list(value)) cfg.methods.emplace_back(item);
  } else if (key == "rwf_step") {
    cfg.rwf_step = parse_number<double>(key, value);
  } else if (key == "irwf_step") {
    cfg.irwf_step = parse_number<double>(key, value);
  } else if (key == "irwf_batch") {
    cfg.irwf_batch = parse_number<int>(key, value);
  } else if (key == "irwf_sampling") {
    if (value == "uniform") cfg.irwf_sampling = Sampling::UniformRandom;
    else if (value == "cyclic") cfg.irwf_sampling = Sampling::Cyclic;
    else bad_value(key, value);
  } else if (key == "init_lambda") {
    cfg.init.lambda_factor = parse_number<double>(key, value);
  } else if (key == "power_iters") {
    cfg.init.power_iters = parse_number<int>(key, value);
  } else if (key == "power_tol") {
    cfg.init.power_tol = parse_number<double>(key, value);
  } else if (key == "layers") {
    cfg.unfold.layers = parse_number<int>(key, value);
  } else if (key == "delta0") {
    cfg.unfold.delta0 = parse_number<double>(key, value);
  } else if (key == "smoothing_c") {
    cfg.unfold.c = parse_number<double>(key, value);
  } else if (key == "train_batch") {
    cfg.train.batch_B = parse_number<int>(key, value);
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = parse_number<double>(key, value);
  } else if (key == "epochs") {
    cfg.train.epochs = parse_number<int>(key, value);
  } else if (key == "adam_beta1") {
    cfg.train.adam_beta1 = parse_number<double>(key, value);
  } else if (key == "adam_beta2") {
    cfg.train.adam_beta2 = parse_number<double>(key, value);
  } else if (key == "adam_eps") {
    cfg.train.adam_eps = parse_number<double>(key, value);
  } else {
    fail(ErrorKind::Config, "config: unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  int lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::Config, "config: line " + std::to_string(lineno) + " is not 'key = value'");
    apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto list = [](const auto& items, auto fmt) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += ",";
      out += fmt(item);
    }
    return out;
  };
  os << "# upr-config v1\n";
  os << "n = " << cfg.harness.n << "\n";
  os << "ratios = " << list(cfg.harness.ratio_grid, fmt_double) << "\n";
  os << "trials = " << cfg.harness.trials << "\n";
  os << "success_threshold = " << fmt_double(cfg.harness.success_threshold) << "\n";
  os << "iterations = " << cfg.harness.iteration_budget << "\n";
  os << "seed = " << cfg.harness.master_seed << "\n";
  os << "methods = " << list(cfg.methods, [](const std::string& s) { return s; }) << "\n";
  os << "rwf_step = " << fmt_double(cfg.rwf_step) << "\n";
  os << "irwf_step = " << fmt_double(cfg.irwf_step) << "\n";
  os << "irwf_batch = " << cfg.irwf_batch << "\n";
  os << "irwf_sampling = " << (cfg.irwf_sampling == Sampling::Cyclic ? "cyclic" : "uniform") << "\n";
  os << "init_lambda = " << fmt_double(cfg.init.lambda_factor) << "\n";
  os << "power_iters = " << cfg.init.power_iters << "\n";
  os << "power_tol = " << fmt_double(cfg.init.power_tol) << "\n";
  os << "layers = " << cfg.unfold.layers << "\n";
  os << "delta0 = " << fmt_double(cfg.unfold.delta0) << "\n";
  os << "smoothing_c = " << fmt_double(cfg.unfold.c) << "\n";
  os << "train_batch = " << cfg.train.batch_B << "\n";
  os << "learning_rate = " << fmt_double(cfg.train.learning_rate) << "\n";
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "adam_beta1 = " << fmt_double(cfg.train.adam_beta1) << "\n";
  os << "adam_beta2 = " << fmt_double(cfg.train.adam_beta2) << "\n";
  os << "adam_eps = " << fmt_double(cfg.train.adam_eps) << "\n";
  return os.str();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Config, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << format_config(cfg);
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

int measurements_for(int n, double ratio) { return static_cast<int>(std::llround(ratio * n)); }

}  // namespace upr
