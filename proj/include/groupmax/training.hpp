#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "groupmax/linalg.hpp"
#include "groupmax/model.hpp"
#include "groupmax/random.hpp"

namespace groupmax {

/// Scalar function the networks are fitted to.
using TargetFn = std::function<double(std::span<const double>)>;

enum class SamplingLaw { gaussian, uniform };

std::string to_string(SamplingLaw law);
SamplingLaw parse_sampling_law(const std::string& name);

/// i.i.d. law applied to every coordinate: Gaussian(mean, variance) or
/// Uniform(lo, hi).
struct SamplerSpec {
  SamplingLaw law = SamplingLaw::gaussian;
  double first = 0.0;   // mean or lo
  double second = 1.0;  // variance or hi
  std::size_t dim = 1;

  static SamplerSpec gaussian(std::size_t dim, double mean, double variance) {
    return {SamplingLaw::gaussian, mean, variance, dim};
  }
  static SamplerSpec uniform(std::size_t dim, double lo, double hi) {
    return {SamplingLaw::uniform, lo, hi, dim};
  }
  /// Throws StructuralError unless variance > 0 (or lo < hi) and dim >= 1.
  void validate() const;
};

/// Fills out (length multiple of s.dim) with row-major draws.
void sample_into(const SamplerSpec& s, std::span<double> out, Rng& rng);
/// n draws as an n x dim matrix.
RealMatrix sample_batch(const SamplerSpec& s, std::size_t n, Rng& rng);

/// Affine standardisation of inputs and outputs estimated from pre-samples.
struct Normalizer {
  std::vector<double> input_mean;
  std::vector<double> input_std;
  double output_mean = 0.0;
  double output_std = 1.0;
  std::size_t sample_size = 0;

  static Normalizer identity(std::size_t dim);
  /// Throws StructuralError if any scale is not strictly positive.
  void validate() const;
  void normalize_input(std::span<const double> x, std::span<double> out) const;
  double normalize_output(double h) const { return (h - output_mean) / output_std; }
  double denormalize_output(double h) const { return output_std * h + output_mean; }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// Empirical means and standard deviations of n inputs and noisy targets.
Normalizer make_normalizer(const SamplerSpec& s, const TargetFn& target, double noise_std,
                           std::size_t n, std::uint64_t seed);

/// A model together with the coordinates it was trained in.
struct TrainedModel {
  Model model;
  std::optional<Normalizer> normalizer;

  /// Value in original coordinates. scratch avoids per-call allocation.
  double predict(std::span<const double> x, Tape& tape, std::vector<double>& scratch) const;
  double predict(std::span<const double> x) const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 300;
  std::size_t iterations = 20000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  SamplerSpec sampler;
  double noise_std = 0.0;
  bool normalize = false;
  std::size_t normalizer_samples = 100000;
  std::size_t trace_every = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

/// One bias-corrected ADAM update of theta at iteration t >= 1.
/// Throws NumericalError on a non-finite gradient entry.
void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& state,
               std::uint64_t t, const TrainConfig& cfg);

struct LossResult {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean of (target - h)^2 over the rows of batch, with its parameter gradient.
LossResult mse_loss(const Model& model, const RealMatrix& batch, std::span<const double> targets);

struct TrainReport {
  std::vector<std::pair<std::size_t, double>> loss_trace;  // (iteration, batch loss)
  std::vector<double> final_parameters;
  std::optional<Normalizer> normalizer;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Minimises the population MSE with fresh batches each iteration. With
/// cfg.normalize the model learns in standardised coordinates; the returned
/// report carries the normalizer needed to map back. Throws NumericalError
/// if the loss diverges.
TrainReport fit(Model& model, const TargetFn& target, const TrainConfig& cfg);

/// "iteration,loss" CSV of a report's loss trace.
std::string loss_trace_csv(const TrainReport& report);

}  // namespace groupmax
