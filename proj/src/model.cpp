#include "upr/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "upr/error.hpp"

namespace upr {

ProblemInstance::ProblemInstance(std::shared_ptr<const Matrix> sensing, Vector truth,
                                 Vector measurements, std::uint64_t seed)
    : sensing_(std::move(sensing)),
      truth_(std::move(truth)),
      measurements_(std::move(measurements)),
      seed_(seed) {
  if (!sensing_) fail(ErrorKind::InvalidArgument, "instance: missing sensing matrix");
  if (sensing_->rows() == 0 || sensing_->cols() == 0)
    fail(ErrorKind::InvalidArgument, "instance: sensing matrix " + sensing_->shape() + " is empty");
  if (truth_.size() != sensing_->cols() || measurements_.size() != sensing_->rows()) {
    fail(ErrorKind::Dimension, "instance: sensing " + sensing_->shape() + " with truth of length " +
                                   std::to_string(truth_.size()) + " and " +
                                   std::to_string(measurements_.size()) + " measurements");
  }
  if (!all_finite(truth_) || !all_finite(measurements_))
    fail(ErrorKind::Numerical, "instance: non-finite truth or measurements");
  const Vector expect = measure(*sensing_, truth_);
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (measurements_[i] < 0.0)
      fail(ErrorKind::InvalidArgument, "instance: negative measurement at index " + std::to_string(i));
    if (std::abs(expect[i] - measurements_[i]) > 1e-12 * std::max(1.0, expect[i]))
      fail(ErrorKind::InvalidArgument, "instance: measurement " + std::to_string(i) + " is not |<a_i, x*>|");
  }
}

void SmoothingConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c))
    fail(ErrorKind::InvalidArgument, "smoothing constant c must be positive and finite");
}

PhaseModel PhaseModel::smooth(double c) {
  SmoothingConfig{c}.validate();
  return PhaseModel(Kind::Smooth, c, {});
}

PhaseModel PhaseModel::oracle(Vector signs) { return PhaseModel(Kind::Oracle, 0.0, std::move(signs)); }

Vector PhaseModel::apply(std::span<const double> w) const {
  switch (kind_) {
    case Kind::Exact:
      return sign_exact(w);
    case Kind::Smooth:
      return smooth_sign(w, SmoothingConfig{c_});
    case Kind::Oracle:
      if (signs_.size() != w.size())
        fail(ErrorKind::Dimension, "oracle phase has " + std::to_string(signs_.size()) +
                                       " signs for " + std::to_string(w.size()) + " measurements");
      return signs_;
  }
  return {};
}

ProblemInstance generate_instance(int n, int m, SeededRng& rng) {
  if (n < 1 || m < 1)
    fail(ErrorKind::InvalidArgument, "generate_instance: n and m must be positive (n=" + std::to_string(n) +
                                         ", m=" + std::to_string(m) + ")");
  auto sensing = std::make_shared<const Matrix>(gaussian_matrix(rng, m, n));
  Vector truth = gaussian_vector(rng, n);
  return make_instance(std::move(sensing), std::move(truth), rng.seed());
}

ProblemInstance make_instance(std::shared_ptr<const Matrix> sensing, Vector truth, std::uint64_t seed) {
  if (!sensing) fail(ErrorKind::InvalidArgument, "make_instance: missing sensing matrix");
  Vector y = measure(*sensing, truth);
  return ProblemInstance(std::move(sensing), std::move(truth), std::move(y), seed);
}

Vector measure(const Matrix& sensing, std::span<const double> x) {
  Vector y = matvec(sensing, x);
  for (double& v : y) v = std::abs(v);
  return y;
}

double loss(std::span<const double> x, const Matrix& sensing, std::span<const double> y) {
  if (y.size() != sensing.rows())
    fail(ErrorKind::Dimension, "loss: " + std::to_string(y.size()) + " measurements for sensing " + sensing.shape());
  const Vector w = matvec(sensing, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = y[i] - std::abs(w[i]);
    acc += r * r;
  }
  return acc / (2.0 * static_cast<double>(w.size()));
}

double loss(std::span<const double> x, const ProblemInstance& inst) {
  return loss(x, inst.sensing(), inst.measurements());
}

Vector sign_exact(std::span<const double> z) {
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] > 0.0 ? 1.0 : (z[i] < 0.0 ? -1.0 : 0.0);
  return out;
}

Vector smooth_sign(std::span<const double> z, const SmoothingConfig& cfg) {
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::tanh(cfg.c * z[i]);
  return out;
}

double distance(std::span<const double> x, std::span<const double> xstar) {
  if (x.size() != xstar.size())
    fail(ErrorKind::Dimension, "distance: lengths " + std::to_string(x.size()) + " and " + std::to_string(xstar.size()));
  double minus = 0.0;
  double plus = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    minus += (x[i] - xstar[i]) * (x[i] - xstar[i]);
    plus += (x[i] + xstar[i]) * (x[i] + xstar[i]);
  }
  return std::sqrt(std::min(minus, plus));
}

double relative_error(std::span<const double> x, std::span<const double> xstar) {
  const double scale = norm2(xstar);
  if (scale == 0.0) fail(ErrorKind::InvalidArgument, "relative_error: ground truth is zero");
  return distance(x, xstar) / scale;
}

namespace {

constexpr std::array<char, 8> kInstanceMagic = {'U', 'P', 'R', 'I', 'N', 'S', 'T', '\0'};
constexpr std::uint32_t kInstanceVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>(v >> (8 * k));
  os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) fail(ErrorKind::Io, "instance file truncated");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= std::uint64_t{buf[k]} << (8 * k);
  return v;
}

void put_doubles(std::ostream& os, std::span<const double> values) {
  for (double v : values) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

Vector get_doubles(std::istream& is, std::size_t count) {
  Vector out(count);
  for (double& v : out) v = std::bit_cast<double>(get_u64(is));
  return out;
}

}  // namespace

void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(kInstanceMagic.data(), kInstanceMagic.size());
  const char version[4] = {static_cast<char>(kInstanceVersion), 0, 0, 0};
  os.write(version, 4);
  put_u64(os, inst.n());
  put_u64(os, inst.m());
  put_u64(os, inst.seed());
  put_doubles(os, inst.sensing().values());
  put_doubles(os, inst.truth());
  put_doubles(os, inst.measurements());
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kInstanceMagic) fail(ErrorKind::Io, path.string() + " is not an instance file");
  unsigned char version[4];
  is.read(reinterpret_cast<char*>(version), 4);
  const std::uint32_t v = version[0] | (version[1] << 8) | (version[2] << 16) | (std::uint32_t{version[3]} << 24);
  if (!is || v != kInstanceVersion)
    fail(ErrorKind::Io, path.string() + ": unsupported instance version " + std::to_string(v));
  const std::uint64_t n = get_u64(is);
  const std::uint64_t m = get_u64(is);
  const std::uint64_t seed = get_u64(is);
  if (n == 0 || m == 0 || n > (1u << 24) || m > (1u << 24))
    fail(ErrorKind::Io, path.string() + ": implausible dimensions");
  auto sensing = std::make_shared<const Matrix>(m, n, get_doubles(is, m * n));
  Vector truth = get_doubles(is, n);
  Vector y = get_doubles(is, m);
  return ProblemInstance(std::move(sensing), std::move(truth), std::move(y), seed);
}

}  // namespace upr
