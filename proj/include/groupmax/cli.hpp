#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "groupmax/bench.hpp"
#include "groupmax/model_io.hpp"
#include "groupmax/training.hpp"

namespace groupmax {

/// Which benchmark function a config fits and how it is sampled.
struct CaseSpec {
  FunctionId function = FunctionId::f1;
  std::size_t dim = 0;            // f8/f9: d; f10: m
  std::size_t nonconvex_dim = 0;  // f10: n
  std::uint64_t spd_seed = kDefaultSpdSeed;

  TargetFunction target() const { return make_target(function, dim, nonconvex_dim, spd_seed); }
};

struct OutputSpec {
  std::string directory = ".";
  std::string model = "model.json";
  std::string loss = "loss.csv";
  std::string report = "report.json";
};

/// JSON experiment file:
///   {"architecture": {...}, "case": {"function": "f1", "sampler": {...},
///    "noise_std": 0}, "training": {...}, "evaluation": {...}, "output": {...}}
struct ExperimentConfig {
  ArchSpec arch;
  CaseSpec target_case;
  TrainConfig train;
  std::uint64_t model_seed = 0;
  std::size_t eval_samples = 100000;
  std::uint64_t eval_seed = 12345;
  OutputSpec output;
};

/// Parses and fully validates; StructuralError names the offending key.
ExperimentConfig parse_experiment(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::string& path);
nlohmann::json sampler_to_json(const SamplerSpec& s);
SamplerSpec sampler_from_json(const nlohmann::json& j, std::size_t dim, const std::string& where);

/// Entry point of the groupmax tool. Returns the process exit code:
/// 0 success, 2 configuration or usage error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace groupmax
