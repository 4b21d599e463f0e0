#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "upr/baseline.hpp"
#include "upr/error.hpp"
#include "upr/unfolded.hpp"

using namespace upr;

namespace {

Vector negate(Vector v) {
  for (auto& x : v) x = -x;
  return v;
}

double spectral_norm(const Matrix& m) {
  Matrix g(m.cols(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t a = 0; a < m.cols(); ++a)
      for (std::size_t b = 0; b < m.cols(); ++b) g(a, b) += m(i, a) * m(i, b);
  return std::sqrt(power_iteration(g, 100000, 1e-12).value);
}

}  // namespace

TEST_CASE("init_params and effective steps") {
  const UprParams p = init_params(2, 3, 1.0, 1000.0);
  for (double t : p.theta()) CHECK(t == 0.0);
  for (double delta : {1.0, 0.5, 2.0, 0.8}) {
    const UprParams q = init_params(4, 5, delta, 1000.0);
    for (int l = 0; l < 4; ++l)
      for (double s : effective_steps(q, l)) CHECK(s == delta);
  }
  CHECK_THROWS_AS(init_params(2, 3, 0.0, 1000.0), Error);
  CHECK_THROWS_AS(init_params(2, 3, -1.0, 1000.0), Error);
  CHECK_THROWS_AS(init_params(0, 3, 1.0, 1000.0), Error);
  CHECK_THROWS_AS(init_params(2, 3, 1.0, 0.0), Error);
}

TEST_CASE("effective steps from theta rows") {
  UprParams p(2, 2, Vector{0, 0, std::log(2.0), std::log(3.0)}, SmoothingConfig{});
  CHECK(effective_steps(p, 0) == Vector{1, 1});
  const Vector s = effective_steps(p, 1);
  CHECK(s[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS_AS(effective_steps(p, 2), Error);
  CHECK_THROWS_AS(effective_steps(p, -1), Error);

  double prev = 0.0;
  for (double t = -30.0; t <= 5.0; t += 0.25) {
    UprParams q(1, 1, Vector{t}, SmoothingConfig{});
    const double s = effective_steps(q, 0)[0];
    CHECK(s > 0.0);
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("layer limits") {
  SeededRng rng(1);
  const Matrix m = gaussian_matrix(rng, 30, 6);
  const Vector zero_y(30, 0.0);
  const Vector out = layer_forward(Vector(6, 0.0), Vector(6, 1.0), m, zero_y, PhaseModel::smooth(1000.0));
  for (double v : out) CHECK(v == 0.0);

  const ProblemInstance p = generate_instance(6, 30, rng);
  const Vector z = gaussian_vector(rng, 6);
  const Vector tiny = layer_forward(z, Vector(6, 1e-12), p, 1000.0);
  CHECK(distance(tiny, z) <= 1e-9);
  for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(tiny[j] - z[j]) <= 1e-9);
}

TEST_CASE("layer at the truth stays within the tanh tail bound") {
  const int n = 16, m = 64;
  const double c = 1000.0;
  std::uint64_t seed = 1;
  ProblemInstance p = [&] {
    for (;; ++seed) {
      SeededRng rng(seed);
      ProblemInstance q = generate_instance(n, m, rng);
      bool ok = true;
      for (double y : q.measurements()) ok &= y >= 0.01;
      if (ok) return q;
    }
  }();
  const Vector step(n, 1.0);
  const Vector out = layer_forward(p.truth(), step, p, c);
  double tail = 0.0;
  for (double y : p.measurements()) {
    const double t = y * (1.0 - std::tanh(c * y));
    tail += t * t;
  }
  const double bound = 1.0 * spectral_norm(p.sensing()) * std::sqrt(tail) / m;
  double gap = 0.0;
  for (int j = 0; j < n; ++j) gap += (out[j] - p.truth()[j]) * (out[j] - p.truth()[j]);
  CHECK(std::sqrt(gap) <= bound * (1 + 1e-12) + 1e-300);
  CHECK(bound <= 1e-4);
}

TEST_CASE("single layer network equals one layer call") {
  SeededRng rng(2);
  const ProblemInstance p = generate_instance(5, 25, rng);
  const UprParams params(1, 5, gaussian_vector(rng, 5), SmoothingConfig{200.0});
  const Vector x0 = initialize(p).x;
  const ForwardTrace tr = forward(params, p, x0);
  REQUIRE(tr.outputs.size() == 1);
  CHECK(tr.output() == layer_forward(x0, effective_steps(params, 0), p, 200.0));
}

TEST_CASE("network is odd in its input") {
  SeededRng rng(3);
  const ProblemInstance p = generate_instance(8, 40, rng);
  Vector theta = gaussian_vector(rng, 6 * 8);
  for (auto& t : theta) t *= 0.2;
  const UprParams params(6, 8, theta, SmoothingConfig{1000.0});
  const Vector x0 = initialize(p).x;
  const ForwardTrace a = forward(params, p, x0);
  const ForwardTrace b = forward(params, p, negate(x0));
  for (int l = 0; l < 6; ++l) CHECK(b.outputs[l] == negate(a.outputs[l]));
}

TEST_CASE("exact-sign network reproduces rwf bitwise") {
  SeededRng rng(4);
  const ProblemInstance p = generate_instance(16, 96, rng);
  const Vector x0 = initialize(p).x;
  const UprParams params = init_params(20, 16, 1.0, 1e6);
  const ForwardTrace tr = forward(params, p.sensing(), p.measurements(), x0, PhaseModel::exact());
  SolverConfig cfg;
  cfg.step = 1.0;
  cfg.iterations = 20;
  const Trajectory ref = run_rwf(p, x0, cfg);
  for (int l = 0; l < 20; ++l) CHECK(tr.outputs[l] == ref.iterates[l + 1]);
}

TEST_CASE("smooth network with large c tracks rwf") {
  SeededRng rng(5);
  const ProblemInstance p = generate_instance(16, 96, rng);
  const Vector x0 = initialize(p).x;
  const ForwardTrace tr = forward(init_params(20, 16, 1.0, 1e6), p, x0);
  SolverConfig cfg;
  cfg.iterations = 20;
  const Trajectory ref = run_rwf(p, x0, cfg);
  for (int l = 0; l < 20; ++l) {
    double gap = 0.0;
    for (int j = 0; j < 16; ++j) gap = std::max(gap, std::abs(tr.outputs[l][j] - ref.iterates[l + 1][j]));
    CHECK(gap <= 1e-9);
  }
}

TEST_CASE("trace replay is bitwise") {
  SeededRng rng(6);
  const ProblemInstance p = generate_instance(10, 50, rng);
  Vector theta = gaussian_vector(rng, 4 * 10);
  for (auto& t : theta) t = 0.1 * t - 0.3;
  const UprParams params(4, 10, theta, SmoothingConfig{500.0});
  const ForwardTrace tr = forward(params, p, initialize(p).x);
  CHECK(tr.outputs.size() == 4);
  CHECK(tr.caches.size() == 4);
  for (int l = 0; l < 4; ++l)
    CHECK(layer_forward(tr.layer_input(l), effective_steps(params, l), p, 500.0) == tr.outputs[l]);
}

TEST_CASE("forward rejects bad shapes and blow-ups") {
  SeededRng rng(7);
  const ProblemInstance p = generate_instance(4, 12, rng);
  CHECK_THROWS_AS(forward(init_params(2, 5, 1.0, 10.0), p, Vector(5, 0.0)), Error);
  const UprParams huge(3, 4, Vector(12, 700.0), SmoothingConfig{10.0});
  try {
    forward(huge, p, gaussian_vector(rng, 4));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("layer") != std::string::npos);
  }
}

TEST_CASE("params text format round-trips") {
  SeededRng rng(8);
  const UprParams p(3, 7, gaussian_vector(rng, 21), SmoothingConfig{1234.5});
  const std::string text = format_params(p);
  CHECK(text.rfind("upr-params v1 L=3 n=7 c=", 0) == 0);
  CHECK(parse_params(text) == p);

  const auto path = std::filesystem::temp_directory_path() / "upr_test_params.txt";
  save_params(p, path);
  CHECK(load_params(path) == p);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(parse_params("upr-params v2 L=1 n=1 c=1\n0\n"), Error);
  CHECK_THROWS_AS(parse_params("upr-params v1 L=1 n=2 c=1\n0\n"), Error);
  CHECK_THROWS_AS(parse_params("upr-params v1 L=1 n=1 c=1\n0 x\n"), Error);
  CHECK_THROWS_AS(parse_params("upr-params v1 L=1 n=1 c=1\nnan\n"), Error);
}
