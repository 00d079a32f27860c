#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace groupmax {

/// Scalar function of a parameter vector with its analytic gradient.
/// tie_gap and signature are optional: when present they let the checker
/// stay away from kinks of piecewise-smooth functions.
struct DifferentiableFunction {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<double(std::span<const double>)> tie_gap;
  std::function<std::uint64_t(std::span<const double>)> signature;
};

struct FiniteDiffResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose +-h probes leave the affine piece
  std::size_t retries = 0;  // base-point perturbations spent avoiding ties
  std::vector<double> evaluated_at;
};

/// Compares the analytic gradient with central differences of step h.
/// Error per coordinate is |analytic - central| / max(1, |analytic|).
/// If the base point lies within 10h of a tie it is perturbed (up to 10
/// times); coordinates still straddling a kink are counted as skipped.
FiniteDiffResult finite_diff_check(const DifferentiableFunction& f, std::vector<double> theta,
                                   double h, std::uint64_t perturb_seed = 0);

}  // namespace groupmax
