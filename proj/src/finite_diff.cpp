#include "groupmax/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "groupmax/errors.hpp"
#include "groupmax/random.hpp"

namespace groupmax {

FiniteDiffResult finite_diff_check(const DifferentiableFunction& f, std::vector<double> theta,
                                   double h, std::uint64_t perturb_seed) {
  if (!(h > 0.0)) throw UsageError("finite_diff_check: step must be positive");
  FiniteDiffResult result;
  Rng rng(mix_seed(perturb_seed, 17));
  if (f.tie_gap) {
    for (int attempt = 0; attempt < 10 && f.tie_gap(theta) < 10.0 * h; ++attempt) {
      for (double& t : theta) t += 1e-3 * (1.0 + std::abs(t)) * rng.normal();
      ++result.retries;
    }
  }
  const std::vector<double> grad = f.gradient(theta);
  if (grad.size() != theta.size()) throw ShapeError("finite_diff_check: gradient length");
  const std::uint64_t base_sig = f.signature ? f.signature(theta) : 0;

  std::vector<double> probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = f.value(probe);
    const bool up_ok = !f.signature || f.signature(probe) == base_sig;
    probe[i] = theta[i] - h;
    const double down = f.value(probe);
    const bool down_ok = !f.signature || f.signature(probe) == base_sig;
    probe[i] = theta[i];
    if (!up_ok || !down_ok) {
      ++result.skipped;
      continue;
    }
    const double central = (up - down) / (2.0 * h);
    const double err = std::abs(grad[i] - central) / std::max(1.0, std::abs(grad[i]));
    result.max_relative_error = std::max(result.max_relative_error, err);
    ++result.checked;
  }
  result.evaluated_at = std::move(theta);
  return result;
}

}  // namespace groupmax
