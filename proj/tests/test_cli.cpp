#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "groupmax/cli.hpp"
#include "groupmax/cuts.hpp"
#include "groupmax/text.hpp"

using namespace groupmax;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "groupmax");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "groupmax_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kConfigs = std::string(GROUPMAX_SOURCE_DIR) + "/configs/";

std::string write_config(const fs::path& dir, const nlohmann::json& j) {
  const std::string p = (dir / "config.json").string();
  write_file_atomic(p, j.dump(1));
  return p;
}

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "architecture": {"kind": "groupmax", "widths": [6, 6], "group_size": 3},
    "case": {"function": "f1", "sampler": {"law": "gaussian", "mean": 0, "variance": 4}},
    "training": {"iterations": 300, "seed": 4},
    "evaluation": {"samples": 2000}
  })");
}

}  // namespace

TEST(Cli, TrainRepositoryConfig) {
  const fs::path dir = scratch("train_f1");
  const CliRun r = cli({"train", kConfigs + "f1_groupmax.json", "--output-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "model.json"));
  EXPECT_EQ(read_file((dir / "loss.csv").string()).substr(0, 15), "iteration,loss\n");
  const auto report = nlohmann::json::parse(read_file((dir / "report.json").string()));
  EXPECT_LT(report["mc_mse"].get<double>(), 0.05);
  EXPECT_FALSE(report.contains("wall_seconds"));
}

TEST(Cli, TrainIsByteDeterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = write_config(a, small_config());
  ASSERT_EQ(cli({"train", cfg, "--output-dir", a.string()}).code, 0);
  ASSERT_EQ(cli({"train", cfg, "--output-dir", b.string()}).code, 0);
  for (const char* f : {"model.json", "loss.csv", "report.json"}) {
    EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
  }
}

TEST(Cli, InvalidConfigsAreRejectedBeforeWork) {
  const fs::path dir = scratch("invalid");
  struct Bad {
    std::function<void(nlohmann::json&)> edit;
    std::string key;
  };
  const std::vector<Bad> corpus = {
      {[](auto& j) { j["architecture"]["group_size"] = 4; }, "divisible"},
      {[](auto& j) { j.erase("architecture"); }, "architecture"},
      {[](auto& j) { j["architecture"]["kind"] = "resnet"; }, "resnet"},
      {[](auto& j) { j["architecture"]["widths"] = nlohmann::json::array(); }, "widths"},
      {[](auto& j) { j["architecture"]["widths"] = {6, -6}; }, "widths"},
      {[](auto& j) { j["case"]["function"] = "f11"; }, "f11"},
      {[](auto& j) { j["case"]["sampler"]["variance"] = 0; }, "variance"},
      {[](auto& j) { j["case"]["sampler"] = {{"law", "uniform"}, {"lo", 1}, {"hi", -1}}; }, "lo"},
      {[](auto& j) { j["case"]["sampler"]["law"] = "cauchy"; }, "cauchy"},
      {[](auto& j) { j["case"]["noise_std"] = -1; }, "noise_std"},
      {[](auto& j) { j["training"]["learning_rate"] = 0; }, "learning_rate"},
      {[](auto& j) { j["training"]["batch_size"] = 0; }, "batch_size"},
      {[](auto& j) { j["training"]["iterations"] = "many"; }, "iterations"},
      {[](auto& j) { j["training"]["momentum"] = 0.9; }, "momentum"},
      {[](auto& j) { j["evaluation"]["samples"] = 0; }, "samples"},
      {[](auto& j) { j["case"]["function"] = "f5"; }, "convex"},
      {[](auto& j) {
         j["architecture"] = {{"kind", "partial_groupmax"}, {"ff_width", 4}, {"convex_width", 4},
                              {"layers", 2}, {"group_size", 2}};
       },
       "partially convex"},
  };
  for (const Bad& b : corpus) {
    nlohmann::json j = small_config();
    j["output"]["directory"] = (dir / "never").string();
    b.edit(j);
    const CliRun r = cli({"train", write_config(dir, j)});
    EXPECT_EQ(r.code, 2) << j.dump();
    EXPECT_NE(r.err.find(b.key), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "never"));
  }
  write_file_atomic((dir / "broken.json").string(), "{\"architecture\": ");
  EXPECT_EQ(cli({"train", (dir / "broken.json").string()}).code, 2);
  EXPECT_EQ(cli({"train", (dir / "missing.json").string()}).code, 2);
  EXPECT_EQ(cli({"train"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
}

TEST(Cli, CutsOfTheAbsoluteValueModel) {
  const std::string model = kConfigs + "abs_model.json";
  const CliRun e = cli({"cuts", model, "--enumerate"});
  ASSERT_EQ(e.code, 0) << e.err;
  const CutSet c = parse_cuts(e.out);
  ASSERT_EQ(c.cuts.size(), 2u);
  EXPECT_EQ(c.cuts[0], (Cut{{1.0}, 0.0}));
  EXPECT_EQ(c.cuts[1], (Cut{{-1.0}, 0.0}));
  const CliRun a = cli({"cuts", model, "--at", "-2.5"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(parse_cuts(a.out).cuts, (std::vector<Cut>{Cut{{-1.0}, 0.0}}));
  const fs::path dir = scratch("cuts");
  ASSERT_EQ(cli({"cuts", model, "--enumerate", "--out", (dir / "abs.cuts").string()}).code, 0);
  EXPECT_EQ(import_cuts((dir / "abs.cuts").string()), c);
  EXPECT_EQ(cli({"cuts", model}).code, 2);
  EXPECT_EQ(cli({"cuts", model, "--at", "1,2"}).code, 2);
  EXPECT_EQ(cli({"cuts", model, "--conditional", "1"}).code, 2);
}

TEST(Cli, CapOverflowReportsPredictedCount) {
  const fs::path dir = scratch("cap");
  nlohmann::json j = small_config();
  j["architecture"]["widths"] = {6, 6, 6};
  const std::string cfg = write_config(dir, j);
  ASSERT_EQ(cli({"train", cfg, "--output-dir", dir.string()}).code, 0);
  // layer 1: 3 per group; layer 2: 3 * 3^2 per group; layer 3: 6 * 27^2
  const CliRun r = cli({"cuts", (dir / "model.json").string(), "--enumerate", "--cap", "100"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("4374"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"cuts", (dir / "model.json").string(), "--enumerate"}).code, 0);
}

TEST(Cli, ConditionalCutsOfNormalizedPartialModel) {
  const fs::path dir = scratch("conditional");
  nlohmann::json j = small_config();
  j["architecture"] = {{"kind", "partial_groupmax"}, {"ff_width", 4}, {"convex_width", 4},
                       {"layers", 2}, {"group_size", 2}};
  j["case"] = {{"function", "f7"}};
  j["training"]["normalize"] = true;
  j["training"]["normalizer_samples"] = 2000;
  ASSERT_EQ(cli({"train", write_config(dir, j), "--output-dir", dir.string()}).code, 0);
  const std::string model = (dir / "model.json").string();
  const CliRun r = cli({"cuts", model, "--conditional", "0.7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const CutSet c = parse_cuts(r.out);
  ASSERT_TRUE(c.condition.has_value());
  EXPECT_EQ(*c.condition, std::vector<double>{0.7});
  const TrainedModel tm = load_model(model);
  for (double y : {-2.0, -0.3, 0.0, 1.1, 2.5}) {
    const double x[2] = {0.7, y};
    const double h = tm.predict(x);
    EXPECT_NEAR(eval_cutset(c, std::span<const double>(&y, 1)), h, 1e-9 * (1 + std::abs(h)));
    const CutSet at = parse_cuts(cli({"cuts", model, "--at", "0.7," + format_double(y)}).out);
    EXPECT_NEAR(at.cuts[0].evaluate(std::span<const double>(&y, 1)), h, 1e-9 * (1 + std::abs(h)));
  }
  EXPECT_EQ(cli({"cuts", model, "--enumerate"}).code, 2);
}

TEST(Cli, Eval) {
  const fs::path dir = scratch("eval");
  const std::string cfg = write_config(dir, small_config());
  ASSERT_EQ(cli({"train", cfg, "--output-dir", dir.string()}).code, 0);
  const std::string model = (dir / "model.json").string();
  const auto report = nlohmann::json::parse(read_file((dir / "report.json").string()));
  const CliRun r = cli({"eval", model, "--config", cfg, "--samples", "2000", "--seed", "12345"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(*parse_double(r.out.substr(0, r.out.size() - 1)), report["mc_mse"].get<double>());
  EXPECT_EQ(cli({"eval", model, "--case", "f1", "--samples", "1000"}).code, 0);
  EXPECT_EQ(cli({"eval", model, "--case", "f5"}).code, 2);
  EXPECT_EQ(cli({"eval", model}).code, 2);
}

TEST(Cli, BenchUnknownIdListsValidIds) {
  const CliRun r = cli({"bench", "T42", "--quiet"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("T1, T2"), std::string::npos);
  EXPECT_NE(r.err.find("F4"), std::string::npos);
}

TEST(Cli, BenchTableOneAtReducedScale) {
  const fs::path dir = scratch("bench_t1");
  const CliRun r = cli({"bench", "T1", "--scale", "0.01", "--runs", "1", "--out", dir.string(), "--quiet"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file((dir / "T1.csv").string());
  EXPECT_EQ(csv, r.out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "network,f1,f2,f3,f4");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), ','), 4 * 4);
  EXPECT_TRUE(fs::exists(dir / "T1_detail.csv"));
  EXPECT_TRUE(fs::exists(dir / "T1_notes.txt"));
}

TEST(Cli, BenchFigureThreeCurves) {
  const fs::path dir = scratch("bench_f3");
  ASSERT_EQ(cli({"bench", "F3", "--scale", "0.002", "--out", dir.string(), "--quiet"}).code, 0);
  const std::string csv = read_file((dir / "F3.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "function,network,x,target,prediction");
  // 4 functions x 3 networks x 401 points
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 3 * 401);
  for (const char* net : {",feedforward,", ",icnn,", ",groupmax,"}) {
    EXPECT_NE(csv.find(net), std::string::npos);
  }
}

TEST(Cli, BenchFigureFourCuts) {
  const fs::path dir = scratch("bench_f4");
  ASSERT_EQ(cli({"bench", "F4", "--scale", "0.002", "--out", dir.string(), "--quiet"}).code, 0);
  const std::string csv = read_file((dir / "F4.csv").string());
  EXPECT_EQ(csv.substr(0, 33), "function,x,target,prediction,cut_");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 401);
}
