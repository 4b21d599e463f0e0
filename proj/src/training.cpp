#include "upr/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "parallel.hpp"
#include "upr/error.hpp"

namespace upr {

void TrainConfig::validate() const {
  if (batch_B < 1) fail(ErrorKind::InvalidArgument, "train: batch_B must be at least 1");
  if (!(learning_rate > 0.0)) fail(ErrorKind::InvalidArgument, "train: learning_rate must be positive");
  if (epochs < 1) fail(ErrorKind::InvalidArgument, "train: epochs must be at least 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    fail(ErrorKind::InvalidArgument, "train: Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail(ErrorKind::InvalidArgument, "train: adam_eps must be positive");
}

TrainingSet make_training_set(std::shared_ptr<const Matrix> sensing, int batch, SeededRng& rng,
                              const InitConfig& init) {
  if (!sensing) fail(ErrorKind::InvalidArgument, "make_training_set: missing sensing matrix");
  if (batch < 1) fail(ErrorKind::InvalidArgument, "make_training_set: B must be at least 1");
  TrainingSet set;
  set.sensing = std::move(sensing);
  set.samples.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    TrainingSample s;
    s.truth = gaussian_vector(rng, set.sensing->cols());
    s.measurements = measure(*set.sensing, s.truth);
    s.init = initialize(*set.sensing, s.measurements, init).x;
    set.samples.push_back(std::move(s));
  }
  return set;
}

TrainingSet make_training_set(int n, int m, int batch, SeededRng& rng, const InitConfig& init) {
  if (n < 1 || m < 1) fail(ErrorKind::InvalidArgument, "make_training_set: n and m must be positive");
  if (batch < 1) fail(ErrorKind::InvalidArgument, "make_training_set: B must be at least 1");
  auto sensing = std::make_shared<const Matrix>(gaussian_matrix(rng, m, n));
  return make_training_set(std::move(sensing), batch, rng, init);
}

namespace {

struct BranchLoss {
  double value;
  double sign;  // -1: ||x_L - x||, +1: ||x_L + x||
};

BranchLoss branch_loss(std::span<const double> out, std::span<const double> truth) {
  double minus = 0.0;
  double plus = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    minus += (out[j] - truth[j]) * (out[j] - truth[j]);
    plus += (out[j] + truth[j]) * (out[j] + truth[j]);
  }
  return minus <= plus ? BranchLoss{minus, -1.0} : BranchLoss{plus, 1.0};
}

void require_sample(const TrainingSet& set, std::size_t i) {
  if (i >= set.size())
    fail(ErrorKind::InvalidArgument, "sample index " + std::to_string(i) + " out of range for B = " + std::to_string(set.size()));
}

}  // namespace

double sample_loss(const UprParams& params, const TrainingSet& set, std::size_t i) {
  require_sample(set, i);
  const auto& s = set.samples[i];
  const ForwardTrace trace = forward(params, *set.sensing, s.measurements, s.init);
  return branch_loss(trace.output(), s.truth).value;
}

double training_loss(const UprParams& params, const TrainingSet& set) {
  if (set.size() == 0) fail(ErrorKind::InvalidArgument, "training_loss: empty training set");
  double acc = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) acc += sample_loss(params, set, i);
  return acc / static_cast<double>(set.size());
}

LossAndGradient loss_and_gradient(const UprParams& params, const TrainingSet& set) {
  if (set.size() == 0) fail(ErrorKind::InvalidArgument, "loss_gradient: empty training set");
  const Matrix& sensing = *set.sensing;
  const PhaseModel phase = PhaseModel::smooth(params.smoothing().c);
  const std::size_t n = static_cast<std::size_t>(params.dim());
  const int layers = params.layers();

  std::vector<Vector> steps;
  steps.reserve(layers);
  for (int l = 0; l < layers; ++l) steps.push_back(effective_steps(params, l));

  std::vector<double> losses(set.size());
  std::vector<Vector> grads(set.size());
  detail::parallel_for(set.size(), [&](std::size_t i) {
    const auto& s = set.samples[i];
    const ForwardTrace trace = forward(params, sensing, s.measurements, s.init, phase);
    const BranchLoss bl = branch_loss(trace.output(), s.truth);
    losses[i] = bl.value;

    Vector adjoint(n);
    const Vector& out = trace.output();
    for (std::size_t j = 0; j < n; ++j) adjoint[j] = 2.0 * (out[j] + bl.sign * s.truth[j]);

    Vector g(static_cast<std::size_t>(layers) * n, 0.0);
    for (int l = layers - 1; l >= 0; --l) {
      std::span<double> row(g.data() + static_cast<std::size_t>(l) * n, n);
      adjoint = layer_backward(adjoint, steps[l], trace.caches[l], sensing, s.measurements, phase, row);
      if (!all_finite(row) || !all_finite(adjoint))
        fail(ErrorKind::Numerical, "loss_gradient: non-finite gradient for sample " + std::to_string(i) +
                                       " at layer " + std::to_string(l));
    }
    grads[i] = std::move(g);
  });

  LossAndGradient out;
  out.gradient.assign(static_cast<std::size_t>(layers) * n, 0.0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.loss += losses[i];
    for (std::size_t k = 0; k < out.gradient.size(); ++k) out.gradient[k] += grads[i][k];
  }
  const double count = static_cast<double>(set.size());
  out.loss /= count;
  for (double& v : out.gradient) v /= count;
  return out;
}

Vector loss_gradient(const UprParams& params, const TrainingSet& set) {
  return loss_and_gradient(params, set).gradient;
}

AdamState adam_init(const UprParams& params) {
  const std::size_t size = params.theta().size();
  return AdamState{Vector(size, 0.0), Vector(size, 0.0), 0};
}

void adam_step(AdamState& state, UprParams& params, std::span<const double> grad, const TrainConfig& cfg) {
  auto theta = params.theta();
  if (grad.size() != theta.size() || state.first_moment.size() != theta.size() ||
      state.second_moment.size() != theta.size())
    fail(ErrorKind::Dimension, "adam_step: gradient or state shape does not match parameters");
  if (!all_finite(grad)) fail(ErrorKind::Numerical, "adam_step: non-finite gradient");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    state.first_moment[k] = cfg.adam_beta1 * state.first_moment[k] + (1.0 - cfg.adam_beta1) * grad[k];
    state.second_moment[k] = cfg.adam_beta2 * state.second_moment[k] + (1.0 - cfg.adam_beta2) * grad[k] * grad[k];
    const double mhat = state.first_moment[k] / correction1;
    const double vhat = state.second_moment[k] / correction2;
    theta[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
  if (!all_finite(theta)) fail(ErrorKind::Numerical, "adam_step: parameters became non-finite");
}

TrainReport train(const TrainingSet& set, const TrainConfig& cfg, const UnfoldConfig& unfold) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  UprParams params = init_params(unfold.layers, static_cast<int>(set.sensing->cols()), unfold.delta0, unfold.c);
  AdamState state = adam_init(params);
  std::vector<double> history;
  history.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const LossAndGradient lg = loss_and_gradient(params, set);
    if (!std::isfinite(lg.loss)) fail(ErrorKind::Numerical, "train: non-finite loss at epoch " + std::to_string(epoch));
    history.push_back(lg.loss);
    adam_step(state, params, lg.gradient, cfg);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return TrainReport{std::move(history), std::move(params), elapsed.count(), cfg.seed};
}

TrainReport train(int n, int m, const TrainConfig& cfg, const UnfoldConfig& unfold, SeededRng& rng) {
  cfg.validate();
  const TrainingSet set = make_training_set(n, m, cfg.batch_B, rng);
  TrainReport report = train(set, cfg, unfold);
  report.seed = rng.seed();
  return report;
}

void write_loss_csv(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", e, report.loss_history[e]);
    os << buf;
  }
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace upr
