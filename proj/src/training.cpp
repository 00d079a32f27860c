#include "groupmax/training.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "groupmax/text.hpp"

namespace groupmax {

std::string to_string(SamplingLaw law) {
  return law == SamplingLaw::gaussian ? "gaussian" : "uniform";
}

SamplingLaw parse_sampling_law(const std::string& name) {
  if (name == "gaussian") return SamplingLaw::gaussian;
  if (name == "uniform") return SamplingLaw::uniform;
  throw StructuralError("unknown sampling law '" + name + "' (expected gaussian or uniform)");
}

void SamplerSpec::validate() const {
  if (dim == 0) throw StructuralError("sampler: dimension must be >= 1");
  if (law == SamplingLaw::gaussian && !(second > 0.0)) {
    throw StructuralError("sampler: gaussian variance must be > 0");
  }
  if (law == SamplingLaw::uniform && !(first < second)) {
    throw StructuralError("sampler: uniform bounds need lo < hi");
  }
}

void sample_into(const SamplerSpec& s, std::span<double> out, Rng& rng) {
  if (s.law == SamplingLaw::gaussian) {
    const double sd = std::sqrt(s.second);
    for (double& v : out) v = s.first + sd * rng.normal();
  } else {
    for (double& v : out) v = rng.uniform(s.first, s.second);
  }
}

RealMatrix sample_batch(const SamplerSpec& s, std::size_t n, Rng& rng) {
  s.validate();
  if (n == 0) throw ShapeError("sample_batch: n must be >= 1");
  RealMatrix m(n, s.dim);
  sample_into(s, m.entries(), rng);
  return m;
}

// ------------------------------------------------------------------ Normalizer

Normalizer Normalizer::identity(std::size_t dim) {
  Normalizer n;
  n.input_mean.assign(dim, 0.0);
  n.input_std.assign(dim, 1.0);
  return n;
}

void Normalizer::validate() const {
  if (input_mean.size() != input_std.size()) throw ShapeError("normalizer: length mismatch");
  for (double s : input_std) {
    if (!(s > 0.0) || !std::isfinite(s)) throw StructuralError("normalizer: input scale must be > 0");
  }
  if (!(output_std > 0.0) || !std::isfinite(output_std)) {
    throw StructuralError("normalizer: output scale must be > 0");
  }
}

void Normalizer::normalize_input(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - input_mean[i]) / input_std[i];
}

Normalizer make_normalizer(const SamplerSpec& s, const TargetFn& target, double noise_std,
                           std::size_t n, std::uint64_t seed) {
  if (n < 2) throw StructuralError("make_normalizer: needs at least 2 samples");
  s.validate();
  Rng rng(seed);
  std::vector<double> x(s.dim);
  std::vector<double> sum(s.dim, 0.0), sum_sq(s.dim, 0.0);
  double hs = 0.0, hs_sq = 0.0;
  // Shifted sums keep the variance estimate stable for large means.
  std::vector<double> shift(s.dim);
  double h_shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sample_into(s, x, rng);
    double h = target(x);
    if (noise_std > 0.0) h += noise_std * rng.normal();
    if (i == 0) {
      shift = x;
      h_shift = h;
    }
    for (std::size_t j = 0; j < s.dim; ++j) {
      const double d = x[j] - shift[j];
      sum[j] += d;
      sum_sq[j] += d * d;
    }
    const double dh = h - h_shift;
    hs += dh;
    hs_sq += dh * dh;
  }
  const double nn = static_cast<double>(n);
  Normalizer out;
  out.sample_size = n;
  out.input_mean.resize(s.dim);
  out.input_std.resize(s.dim);
  for (std::size_t j = 0; j < s.dim; ++j) {
    const double mean = sum[j] / nn;
    out.input_mean[j] = shift[j] + mean;
    out.input_std[j] = std::sqrt(std::max(0.0, (sum_sq[j] - nn * mean * mean) / (nn - 1.0)));
  }
  const double hmean = hs / nn;
  out.output_mean = h_shift + hmean;
  out.output_std = std::sqrt(std::max(0.0, (hs_sq - nn * hmean * hmean) / (nn - 1.0)));
  if (!(out.output_std > 0.0)) {
    throw StructuralError("make_normalizer: target has zero empirical standard deviation");
  }
  out.validate();
  return out;
}

double TrainedModel::predict(std::span<const double> x, Tape& tape,
                             std::vector<double>& scratch) const {
  if (!normalizer) return model.forward(x, tape);
  scratch.resize(x.size());
  normalizer->normalize_input(x, scratch);
  return normalizer->denormalize_output(model.forward(scratch, tape));
}

double TrainedModel::predict(std::span<const double> x) const {
  Tape tape;
  std::vector<double> scratch;
  return predict(x, tape, scratch);
}

// -------------------------------------------------------------------- training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw StructuralError("training: learning_rate must be > 0");
  if (batch_size == 0) throw StructuralError("training: batch_size must be >= 1");
  if (!(noise_std >= 0.0)) throw StructuralError("training: noise_std must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw StructuralError("training: adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw StructuralError("training: adam epsilon must be > 0");
  if (trace_every == 0) throw StructuralError("training: trace_every must be >= 1");
  sampler.validate();
}

void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
               std::uint64_t t, const TrainConfig& cfg) {
  if (t == 0) throw UsageError("adam_step: iteration counter starts at 1");
  if (grad.size() != theta.size()) throw ShapeError("adam_step: gradient length mismatch");
  if (state.first_moment.size() != theta.size()) {
    state.first_moment.assign(theta.size(), 0.0);
    state.second_moment.assign(theta.size(), 0.0);
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericalError("adam_step: non-finite gradient at parameter " + std::to_string(i) +
                           ", iteration " + std::to_string(t));
    }
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    theta[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
  }
}

namespace {

// Accumulates the batch gradient into grad (zeroed here) and returns the loss.
double batch_loss(const Model& model, std::span<const double> inputs, std::size_t dim,
                  std::span<const double> targets, std::span<double> grad, Tape& tape) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t n = targets.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = model.forward(inputs.subspan(i * dim, dim), tape);
    const double r = targets[i] - h;
    loss += r * r;
    tape.backward(-2.0 * r * inv_n, grad);
  }
  return loss * inv_n;
}

}  // namespace

LossResult mse_loss(const Model& model, const RealMatrix& batch, std::span<const double> targets) {
  if (batch.rows() != targets.size()) throw ShapeError("mse_loss: batch/target length mismatch");
  if (batch.cols() != model.input_dim()) throw ShapeError("mse_loss: input dimension mismatch");
  LossResult r;
  r.gradient.assign(model.params().size(), 0.0);
  Tape tape;
  r.loss = batch_loss(model, batch.entries(), batch.cols(), targets, r.gradient, tape);
  return r;
}

TrainReport fit(Model& model, const TargetFn& target, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.sampler.dim != model.input_dim()) {
    throw ShapeError("fit: sampler dimension " + std::to_string(cfg.sampler.dim) +
                     " != model input dimension " + std::to_string(model.input_dim()));
  }
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = cfg.seed;
  if (cfg.normalize) {
    report.normalizer = make_normalizer(cfg.sampler, target, cfg.noise_std, cfg.normalizer_samples,
                                        mix_seed(cfg.seed, 3));
  }

  Rng rng(mix_seed(cfg.seed, 2));
  const std::size_t dim = cfg.sampler.dim;
  const std::size_t n = cfg.batch_size;
  std::vector<double> raw(n * dim), inputs(n * dim), targets(n);
  std::vector<double> grad(model.params().size());
  AdamState adam;
  Tape tape;
  std::span<double> theta = model.parameters();

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    sample_into(cfg.sampler, raw, rng);
    for (std::size_t i = 0; i < n; ++i) {
      double t = target(std::span<const double>(raw).subspan(i * dim, dim));
      if (cfg.noise_std > 0.0) t += cfg.noise_std * rng.normal();
      targets[i] = t;
    }
    if (report.normalizer) {
      for (std::size_t i = 0; i < n; ++i) {
        report.normalizer->normalize_input(std::span<const double>(raw).subspan(i * dim, dim),
                                           std::span<double>(inputs).subspan(i * dim, dim));
        targets[i] = report.normalizer->normalize_output(targets[i]);
      }
    } else {
      inputs = raw;
    }
    const double loss = batch_loss(model, inputs, dim, targets, grad, tape);
    if (!std::isfinite(loss)) {
      throw NumericalError("fit: loss diverged at iteration " + std::to_string(it) +
                           " (seed " + std::to_string(cfg.seed) + ")");
    }
    if (it % cfg.trace_every == 0) report.loss_trace.emplace_back(it, loss);
    adam_step(theta, grad, adam, it + 1, cfg);
  }
  report.final_parameters.assign(theta.begin(), theta.end());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string loss_trace_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "iteration,loss\n";
  for (const auto& [it, loss] : report.loss_trace) out << it << ',' << format_double(loss) << '\n';
  return out.str();
}

}  // namespace groupmax
