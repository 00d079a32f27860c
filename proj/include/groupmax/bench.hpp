#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groupmax/linalg.hpp"
#include "groupmax/model_io.hpp"
#include "groupmax/training.hpp"

namespace groupmax {

enum class FunctionId { f1 = 1, f2, f3, f4, f5, f6, f7, f8, f9, f10 };

std::string to_string(FunctionId id);
FunctionId parse_function_id(const std::string& name);

constexpr std::uint64_t kDefaultSpdSeed = 20230901;

/// A = (1/d) B^T B + 0.1 I with B a d x d matrix of standard normals drawn
/// from seed. Symmetric with smallest eigenvalue >= 0.1.
RealMatrix make_spd(std::size_t dim, std::uint64_t seed);

/// One of the benchmark functions, bound to its dimensions.
///   f1..f4: scalar x.   f5..f7: (x, y), convex in y.   f8, f9: x in R^d.
///   f10: (x, y) with x in R^n (concave part) and y in R^m (convex part).
/// Partially convex targets put the convex coordinates last.
struct TargetFunction {
  FunctionId id = FunctionId::f1;
  std::size_t dim = 1;
  std::size_t convex_dim = 1;
  RealMatrix spd;  // f9 only

  double operator()(std::span<const double> x) const;
  TargetFn as_fn() const {
    return [f = *this](std::span<const double> x) { return f(x); };
  }
};

/// dim is the total input dimension for f8/f9 and the convex part m for f10
/// (with nonconvex_dim the part n); it is ignored for f1..f7.
TargetFunction make_target(FunctionId id, std::size_t dim = 0, std::size_t nonconvex_dim = 0,
                           std::uint64_t spd_seed = kDefaultSpdSeed);

/// Law the benchmarks sample each function with when nothing else is said.
SamplerSpec default_sampler(const TargetFunction& f);

/// (1/n) sum (f(X_i) - h(X_i))^2 over n fresh draws, noiseless targets.
double mc_mse(const TrainedModel& model, const TargetFunction& target, const SamplerSpec& sampler,
              std::size_t n, std::uint64_t eval_seed);

struct BenchmarkCase {
  std::string label;
  TargetFunction target;
  ArchSpec arch;
  TrainConfig train;  // sampler, noise and normalize live here
  std::size_t runs = 10;
  std::size_t eval_samples = 1000000;
  std::uint64_t eval_seed = 12345;
  std::uint64_t seed = 1;

  void validate() const;
};

struct CaseResult {
  std::vector<double> mse;  // per run, NaN when the run diverged
  std::vector<std::string> failures;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double wall_seconds = 0.0;
  std::optional<TrainedModel> best;
};

/// Trains case.runs independently seeded models, scores each with mc_mse
/// under the shared eval_seed and keeps the best. A diverging run is
/// recorded, not fatal.
CaseResult run_case(const BenchmarkCase& c, bool keep_best = false);

struct TableOptions {
  double scale = 1.0;                // multiplies iterations, runs and eval samples
  std::optional<std::size_t> runs;   // overrides the run count
  bool verbose = false;              // progress on stderr
};

struct TableOutput {
  std::string csv;         // rows x columns of best-of-runs MSE
  std::string detail_csv;  // one row per case: min/median/max and failures
  std::string notes;
};

std::vector<std::string> table_ids();
/// Throws StructuralError for an unknown id.
std::vector<BenchmarkCase> table_cases(const std::string& id, const TableOptions& opt = {});
TableOutput run_table(const std::string& id, const TableOptions& opt = {});

}  // namespace groupmax
