#include <doctest.h>

#include <fstream>
#include <sstream>

#include "gbim/error.hpp"
#include "gbim/harness.hpp"
#include "helpers.hpp"

using namespace gbim;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

json tiny_gbim() {
  return {{"initial_design", 10}, {"rounds", 2},      {"candidates_per_round", 40},
          {"select_fraction", 0.1}, {"epochs", 3},    {"hidden_dim", 8},
          {"random_features", 16},  {"mlp_hidden", {16, 16}}};
}

json base_plan(const std::filesystem::path& out) {
  return {{"dataset", {{"synthetic", {{"users", 12}, {"user_edges", 30}, {"items", 4}, {"item_edges", 3}, {"seed", 1}}}}},
          {"diffusion", {{"model", "ic"}, {"beta", 0.3}, {"simulations", 10}}},
          {"output", out.string()},
          {"seed", 42}};
}

}  // namespace

TEST_CASE("plan parsing and validation") {
  gbim::test::TempDir dir("plan-parse");
  json doc = base_plan(dir.path());
  doc["methods"] = {"maxdegree", {{"name", "gbim"}, {"config", tiny_gbim()}}};
  doc["seed_sizes"] = {1, 2};
  const auto plan = parse_experiment_plan(doc);
  CHECK(plan.methods.size() == 2);
  CHECK(plan.methods[1].config.at("rounds") == 2);
  CHECK(plan.seed_sizes == std::vector<std::size_t>{1, 2});
  CHECK(plan.diffusion.simulations == 10);

  json unknown = doc;
  unknown["colour"] = "blue";
  CHECK_THROWS_AS(parse_experiment_plan(unknown), ValidationError);
  json no_methods = base_plan(dir.path());
  CHECK_THROWS_AS(parse_experiment_plan(no_methods), ValidationError);
  json bad_method = doc;
  bad_method["methods"] = {"imm"};
  CHECK_THROWS_AS(parse_experiment_plan(bad_method), ValidationError);
  json empty_grid = doc;
  empty_grid["seed_sizes"] = json::array();
  CHECK_THROWS_AS(parse_experiment_plan(empty_grid), ValidationError);
  json missing_bundle = doc;
  missing_bundle["dataset"] = {{"bundle", "/nonexistent/bundle.txt"}};
  CHECK_THROWS_AS(parse_experiment_plan(missing_bundle), ValidationError);
}

TEST_CASE("gbim overrides") {
  GbimConfig c;
  apply_gbim_overrides(c, {{"rounds", 7}, {"epochs", 3}, {"mlp_hidden", {4, 4}}, {"noise_variance", 0.5},
                           {"diffusion", {{"model", "lt"}}}});
  CHECK(c.rounds == 7);
  CHECK(c.train.epochs == 3);
  CHECK(c.surrogate.mlp_hidden == std::vector<std::size_t>{4, 4});
  CHECK(*c.blr.noise_variance == 0.5);
  CHECK(c.diffusion.model == DiffusionModel::linear_threshold);
  CHECK_THROWS_AS(apply_gbim_overrides(c, {{"round", 7}}), ValidationError);
  CHECK_THROWS_AS(apply_gbim_overrides(c, {{"rounds", "many"}}), ValidationError);
}

TEST_CASE("compare grid: one row per cell, reproducible bytes") {
  gbim::test::TempDir dir("compare");
  json doc = base_plan(dir.path() / "a");
  doc["methods"] = {"maxdegree", "random", "greedy"};
  doc["seed_sizes"] = {1, 2, 3};
  doc["repetitions"] = 5;
  auto plan = parse_experiment_plan(doc);
  const auto summary = run_benchmark(plan, 1);
  CHECK(summary.result_rows == 45);
  CHECK(summary.failed_rows == 0);
  const auto results = lines(slurp(dir.path() / "a" / "results.csv"));
  REQUIRE(results.size() == 46);
  CHECK(results[0] ==
        "method,n,m,k,alpha,rep,seed,seed_set,influence,search_evaluations,evaluations,status,error");
  for (std::size_t i = 1; i < results.size(); ++i) CHECK(results[i].find(",ok,") != std::string::npos);
  CHECK(results[1].rfind("maxdegree,12,4,1,,0,", 0) == 0);
  const auto manifest = json::parse(slurp(dir.path() / "a" / "manifest.json"));
  CHECK(manifest.at("schemas").at("results.csv") == kResultsSchemaVersion);

  plan.output = dir.path() / "b";
  run_benchmark(plan, 3);
  CHECK(slurp(dir.path() / "a" / "results.csv") == slurp(dir.path() / "b" / "results.csv"));
  CHECK(slurp(dir.path() / "a" / "curves.csv") == slurp(dir.path() / "b" / "curves.csv"));
  CHECK(slurp(dir.path() / "a" / "manifest.json") == slurp(dir.path() / "b" / "manifest.json"));
}

TEST_CASE("a failing method records an error row") {
  gbim::test::TempDir dir("failing");
  json doc = base_plan(dir.path());
  doc["methods"] = {"maxdegree", {{"name", "random"}, {"config", {{"unexpected", 1}}}}};
  doc["seed_sizes"] = {2};
  const auto summary = run_benchmark(parse_experiment_plan(doc), 1);
  CHECK(summary.result_rows == 2);
  CHECK(summary.failed_rows == 1);
  const auto rows = lines(slurp(dir.path() / "results.csv"));
  CHECK(rows[1].find(",ok,") != std::string::npos);
  CHECK(rows[2].find(",error,") != std::string::npos);
  CHECK(rows[2].find("unexpected") != std::string::npos);
}

TEST_CASE("maxdegree costs exactly one evaluation") {
  const auto d = generate_synthetic({12, 30, 4, 3, 1});
  DiffusionConfig c;
  c.simulations = 10;
  const auto run = run_method("maxdegree", json::object(), d, c, 2, 0);
  CHECK(run.search_evaluations == 0);
  CHECK(run.seeds.size() == 2);
}

TEST_CASE("alpha sweep writes per-round curves") {
  gbim::test::TempDir dir("alpha");
  json doc = base_plan(dir.path());
  doc["mode"] = "alpha_sweep";
  doc["methods"] = {{{"name", "gbim"}, {"config", tiny_gbim()}}};
  doc["seed_sizes"] = {2};
  const auto summary = run_benchmark(parse_experiment_plan(doc), 1);
  CHECK(summary.result_rows == 5);
  CHECK(summary.failed_rows == 0);
  // Every alpha runs at least one round; small universes may exhaust early.
  CHECK(summary.curve_rows >= 5);
  CHECK(summary.curve_rows <= 10);
  const auto curves = lines(slurp(dir.path() / "curves.csv"));
  CHECK(curves[0] == "method,n,m,k,alpha,rep,round,loss,best_so_far,evaluations");
  CHECK(curves[1].rfind("gbim,12,4,2,0,0,1,", 0) == 0);
  CHECK(curves.back().rfind("gbim,12,4,2,1,0,", 0) == 0);
}

TEST_CASE("scalability mode varies the user count") {
  gbim::test::TempDir dir("scale");
  json doc = base_plan(dir.path());
  doc["mode"] = "scalability";
  doc["methods"] = {{{"name", "gbim"}, {"config", tiny_gbim()}}};
  doc["user_counts"] = {12, 24};
  doc["seed_sizes"] = {2};
  const auto summary = run_benchmark(parse_experiment_plan(doc), 1);
  CHECK(summary.result_rows == 2);
  const auto timings = lines(slurp(dir.path() / "timings.csv"));
  REQUIRE(timings.size() == 3);
  CHECK(timings[1].rfind("gbim,12,4,2,,0,", 0) == 0);
  CHECK(timings[2].rfind("gbim,24,4,2,,0,", 0) == 0);
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
}
