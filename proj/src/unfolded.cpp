#include "upr/unfolded.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "upr/error.hpp"

namespace upr {

UprParams::UprParams(int layers, int dim, Vector theta, SmoothingConfig smoothing)
    : layers_(layers), dim_(dim), theta_(std::move(theta)), smoothing_(smoothing) {
  if (layers_ < 1 || dim_ < 1)
    fail(ErrorKind::InvalidArgument, "params: L and n must be positive (L=" + std::to_string(layers_) +
                                         ", n=" + std::to_string(dim_) + ")");
  if (theta_.size() != static_cast<std::size_t>(layers_) * static_cast<std::size_t>(dim_))
    fail(ErrorKind::Dimension, "params: theta has " + std::to_string(theta_.size()) + " entries, expected L*n");
  if (!all_finite(theta_)) fail(ErrorKind::Numerical, "params: theta is not finite");
  smoothing_.validate();
}

std::span<const double> UprParams::theta_row(int layer) const {
  if (layer < 0 || layer >= layers_)
    fail(ErrorKind::InvalidArgument, "layer " + std::to_string(layer) + " out of range [0, " + std::to_string(layers_) + ")");
  return std::span<const double>(theta_).subspan(static_cast<std::size_t>(layer) * dim_, dim_);
}

UprParams init_params(int layers, int dim, double delta0, double c) {
  if (!(delta0 > 0.0) || !std::isfinite(delta0))
    fail(ErrorKind::InvalidArgument, "init_params: delta0 must be positive");
  const auto count = static_cast<std::size_t>(std::max(layers, 0)) * static_cast<std::size_t>(std::max(dim, 0));
  return UprParams(layers, dim, Vector(count, std::log(delta0)), SmoothingConfig{c});
}

Vector effective_steps(const UprParams& params, int layer) {
  const auto row = params.theta_row(layer);
  Vector out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = std::exp(row[j]);
  return out;
}

Vector layer_forward(std::span<const double> z, std::span<const double> step, const Matrix& sensing,
                     std::span<const double> y, const PhaseModel& phase, LayerCache* cache) {
  if (z.size() != sensing.cols() || step.size() != sensing.cols() || y.size() != sensing.rows())
    fail(ErrorKind::Dimension, "layer_forward: sensing " + sensing.shape() + " with input " +
                                   std::to_string(z.size()) + ", step " + std::to_string(step.size()) +
                                   ", measurements " + std::to_string(y.size()));
  Vector w = matvec(sensing, z);
  Vector s = phase.apply(w);
  Vector u(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) u[i] = w[i] - y[i] * s[i];
  Vector q = tmatvec(sensing, u);
  const double k = static_cast<double>(sensing.rows());
  for (double& v : q) v /= k;

  Vector out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] - step[j] * q[j];
  if (cache) {
    cache->projection = std::move(w);
    cache->phase = std::move(s);
    cache->direction = std::move(q);
  }
  return out;
}

Vector layer_forward(std::span<const double> z, std::span<const double> step, const ProblemInstance& inst, double c) {
  return layer_forward(z, step, inst.sensing(), inst.measurements(), PhaseModel::smooth(c));
}

ForwardTrace forward(const UprParams& params, const Matrix& sensing, std::span<const double> y,
                     std::span<const double> x0, const PhaseModel& phase) {
  if (static_cast<std::size_t>(params.dim()) != sensing.cols())
    fail(ErrorKind::Dimension, "forward: params for n = " + std::to_string(params.dim()) + " with sensing " + sensing.shape());
  ForwardTrace trace;
  trace.input.assign(x0.begin(), x0.end());
  trace.outputs.reserve(params.layers());
  trace.caches.resize(params.layers());
  for (int l = 0; l < params.layers(); ++l) {
    const Vector step = effective_steps(params, l);
    Vector next = layer_forward(trace.layer_input(l), step, sensing, y, phase, &trace.caches[l]);
    if (!all_finite(next)) fail(ErrorKind::Numerical, "forward: non-finite output at layer " + std::to_string(l));
    trace.outputs.push_back(std::move(next));
  }
  return trace;
}

ForwardTrace forward(const UprParams& params, const Matrix& sensing, std::span<const double> y,
                     std::span<const double> x0) {
  return forward(params, sensing, y, x0, PhaseModel::smooth(params.smoothing().c));
}

ForwardTrace forward(const UprParams& params, const ProblemInstance& inst, std::span<const double> x0) {
  return forward(params, inst.sensing(), inst.measurements(), x0);
}

Vector layer_backward(std::span<const double> output_adjoint, std::span<const double> step, const LayerCache& cache,
                      const Matrix& sensing, std::span<const double> y, const PhaseModel& phase,
                      std::span<double> theta_grad) {
  const std::size_t n = sensing.cols();
  const std::size_t m = sensing.rows();
  if (output_adjoint.size() != n || step.size() != n || theta_grad.size() != n)
    fail(ErrorKind::Dimension, "layer_backward: adjoint shape mismatch");

  // out_j = z_j - exp(theta_j) q_j
  Vector scaled(n);
  for (std::size_t j = 0; j < n; ++j) {
    theta_grad[j] -= output_adjoint[j] * step[j] * cache.direction[j];
    scaled[j] = step[j] * output_adjoint[j];
  }

  // du/dw = 1 - y . phase'(w)
  Vector r = matvec(sensing, scaled);
  if (phase.kind() == PhaseModel::Kind::Smooth) {
    const double c = phase.sharpness();
    for (std::size_t i = 0; i < m; ++i) {
      const double t = cache.phase[i];
      r[i] *= 1.0 - y[i] * c * (1.0 - t * t);
    }
  }
  Vector back = tmatvec(sensing, r);
  const double k = static_cast<double>(m);
  Vector input_adjoint(n);
  for (std::size_t j = 0; j < n; ++j) input_adjoint[j] = output_adjoint[j] - back[j] / k;
  return input_adjoint;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view token, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    fail(ErrorKind::Config, std::string("params: bad ") + what + " value '" + std::string(token) + "'");
  return v;
}

int parse_int(std::string_view token, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    fail(ErrorKind::Config, std::string("params: bad ") + what + " value '" + std::string(token) + "'");
  return v;
}

std::string_view expect_field(std::string_view token, std::string_view key) {
  if (token.substr(0, key.size()) != key)
    fail(ErrorKind::Config, "params: expected '" + std::string(key) + "' in header, got '" + std::string(token) + "'");
  return token.substr(key.size());
}

}  // namespace

std::string format_params(const UprParams& params) {
  std::string out = "upr-params v1 L=" + std::to_string(params.layers()) + " n=" + std::to_string(params.dim()) +
                    " c=" + format_double(params.smoothing().c) + "\n";
  for (int l = 0; l < params.layers(); ++l) {
    const auto row = params.theta_row(l);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ' ';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

UprParams parse_params(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Config, "params: empty input");
  std::istringstream header(line);
  std::string magic, version, l_tok, n_tok, c_tok, extra;
  header >> magic >> version >> l_tok >> n_tok >> c_tok;
  if (magic != "upr-params") fail(ErrorKind::Config, "params: missing 'upr-params' header");
  if (version != "v1") fail(ErrorKind::Config, "params: unsupported version '" + version + "'");
  if (header >> extra) fail(ErrorKind::Config, "params: trailing header token '" + extra + "'");
  const int layers = parse_int(expect_field(l_tok, "L="), "L");
  const int dim = parse_int(expect_field(n_tok, "n="), "n");
  const double c = parse_double(expect_field(c_tok, "c="), "c");
  if (layers < 1 || dim < 1) fail(ErrorKind::Config, "params: L and n must be positive");

  Vector theta;
  theta.reserve(static_cast<std::size_t>(layers) * dim);
  for (int l = 0; l < layers; ++l) {
    if (!std::getline(in, line)) fail(ErrorKind::Config, "params: expected " + std::to_string(layers) + " rows");
    std::istringstream row(line);
    std::string tok;
    int count = 0;
    while (row >> tok) {
      theta.push_back(parse_double(tok, "theta"));
      ++count;
    }
    if (count != dim)
      fail(ErrorKind::Config, "params: row " + std::to_string(l) + " has " + std::to_string(count) + " values, expected " + std::to_string(dim));
  }
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) fail(ErrorKind::Config, "params: trailing content");
  return UprParams(layers, dim, std::move(theta), SmoothingConfig{c});
}

void save_params(const UprParams& params, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << format_params(params);
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

UprParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_params(buf.str());
}

}  // namespace upr
