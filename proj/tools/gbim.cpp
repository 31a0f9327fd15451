// gbim: prepare datasets, run one optimizer, or run a benchmark grid.
//
// Exit status: 0 success, 1 invalid input, 2 runtime failure.

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "gbim/bundle.hpp"
#include "gbim/error.hpp"
#include "gbim/harness.hpp"
#include "gbim/optimizer.hpp"
#include "gbim/text_io.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kFinalEvalStream = 0xF1;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw gbim::ValidationError("cannot open config: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw gbim::ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gbim::ValidationError("cannot write " + path.string());
  out << text;
}

struct PrepareArgs {
  std::string synthetic;  // "users,user_edges,items,item_edges"
  std::string social;
  std::string interactions;
  std::string item_graph;
  std::string weights = "reciprocal";
  double threshold = 0.5;
  double fill = 0.1;
  std::optional<std::size_t> users;
  std::optional<std::size_t> items;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

gbim::Dataset prepare_dataset(PrepareArgs a) {
  if (!a.config.empty()) {
    const json doc = read_json(a.config);
    for (const auto& [key, value] : doc.items()) {
      if (key == "synthetic") {
        a.synthetic = value.get<std::string>();
      } else if (key == "social") {
        a.social = value.get<std::string>();
      } else if (key == "interactions") {
        a.interactions = value.get<std::string>();
      } else if (key == "item_graph") {
        a.item_graph = value.get<std::string>();
      } else if (key == "weights") {
        a.weights = value.get<std::string>();
      } else if (key == "threshold") {
        a.threshold = value.get<double>();
      } else if (key == "fill") {
        a.fill = value.get<double>();
      } else if (key == "users") {
        a.users = value.get<std::size_t>();
      } else if (key == "items") {
        a.items = value.get<std::size_t>();
      } else {
        throw gbim::ValidationError("unknown key '" + key + "' in prepare config");
      }
    }
  }
  if (!a.synthetic.empty()) {
    std::istringstream in(a.synthetic);
    std::string field;
    std::vector<std::size_t> v;
    while (std::getline(in, field, ',')) {
      try {
        v.push_back(std::stoul(field));
      } catch (const std::exception&) {
        throw gbim::ValidationError("bad --synthetic field '" + field + "'");
      }
    }
    if (v.size() != 4) {
      throw gbim::ValidationError("--synthetic expects users,user_edges,items,item_edges");
    }
    return gbim::generate_synthetic({v[0], v[1], v[2], v[3], a.seed});
  }
  if (a.social.empty() || a.interactions.empty()) {
    throw gbim::ValidationError("prepare needs --synthetic or both --social and --interactions");
  }
  gbim::WeightMode mode;
  if (a.weights == "reciprocal") {
    mode = gbim::WeightMode::reciprocal_in_degree;
  } else if (a.weights == "explicit") {
    mode = gbim::WeightMode::explicit_weights;
  } else {
    throw gbim::ValidationError("--weights must be 'reciprocal' or 'explicit'");
  }
  gbim::SocialGraph social = gbim::load_social_graph(a.social, mode, a.users);
  const gbim::InteractionTable table = gbim::load_interactions(a.interactions);
  std::size_t m = a.items.value_or(0);
  if (!a.items) {
    for (const auto& r : table.rows) m = std::max<std::size_t>(m, static_cast<std::size_t>(r.item) + 1);
  }
  gbim::ItemGraph items = a.item_graph.empty() ? gbim::build_item_graph(table, m, a.threshold)
                                               : gbim::load_item_graph(a.item_graph, m);
  gbim::PreferenceMatrix prefs =
      gbim::build_preference_matrix(table, social.num_users(), m, {a.fill});
  gbim::Dataset data{std::move(social), std::move(items), std::move(prefs)};
  data.validate();
  return data;
}

int cmd_prepare(const PrepareArgs& args) {
  const gbim::Dataset data = prepare_dataset(args);
  gbim::save_bundle(args.out, data);
  std::cout << "users " << data.num_users() << "  user_edges " << data.social.num_edges()
            << "  items " << data.num_items() << "  item_edges " << data.items.num_edges()
            << '\n';
  return 0;
}

struct OptimizeArgs {
  std::string data;
  std::string method = "gbim";
  std::size_t k = 5;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out = "optimize-out";
};

int cmd_optimize(const OptimizeArgs& a) {
  const gbim::Dataset data = gbim::load_bundle(a.data);
  json config = a.config.empty() ? json::object() : read_json(a.config);
  gbim::DiffusionConfig diffusion;
  if (config.contains("diffusion")) {
    gbim::apply_diffusion_overrides(diffusion, config.at("diffusion"));
    config.erase("diffusion");
  }
  diffusion.threads = a.jobs;
  diffusion.validate();

  const gbim::MethodRun run = gbim::run_method(a.method, config, data, diffusion, a.k, a.seed);
  gbim::DiffusionConfig final_eval = diffusion;
  final_eval.seed = gbim::derive_seed(a.seed, kFinalEvalStream);
  const double influence = gbim::estimate_influence(run.seeds, data, final_eval);

  const fs::path out = a.out;
  fs::create_directories(out);
  const json record = {
      {"method", a.method},
      {"k", a.k},
      {"seed", a.seed},
      {"seed_set", run.seeds.to_string()},
      {"influence", influence},
      {"search_evaluations", run.search_evaluations},
      {"evaluations", run.search_evaluations + 1},
      {"wall_seconds", run.wall_seconds},
      {"aborted", run.aborted},
      {"error", run.error},
  };
  write_text(out / "result.json", record.dump(2) + "\n");
  if (a.method == "gbim") {
    std::ostringstream csv;
    csv << "round,loss,best_so_far,evals,candidates,selected,ei_max,ei_mean,noise_variance\n";
    for (const auto& r : run.history) {
      csv << r.round << ',' << gbim::format_double(r.loss) << ','
          << gbim::format_double(r.best_so_far) << ',' << r.evaluations << ',' << r.candidates
          << ',' << r.selected << ',' << gbim::format_double(r.ei_max) << ','
          << gbim::format_double(r.ei_mean) << ',' << gbim::format_double(r.noise_variance)
          << '\n';
    }
    write_text(out / "history.csv", csv.str());
  }
  std::cout << a.method << "  k " << a.k << "  seeds " << run.seeds.to_string() << "  influence "
            << gbim::format_double(influence) << "  evaluations " << run.search_evaluations + 1
            << "  seconds " << gbim::format_double(run.wall_seconds) << '\n';
  if (run.aborted) {
    std::cerr << "gbim: optimization stopped early: " << run.error << '\n';
    return 2;
  }
  return 0;
}

struct BenchmarkArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  gbim::ExperimentPlan plan = gbim::load_experiment_plan(a.config);
  if (a.seed) plan.seed = *a.seed;
  if (!a.out.empty()) plan.output = a.out;
  const gbim::BenchmarkSummary s = gbim::run_benchmark(plan, a.jobs);
  std::cout << "rows " << s.result_rows << "  curve_rows " << s.curve_rows << "  failed "
            << s.failed_rows << "  output " << plan.output.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplex influence maximization with a learned surrogate"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Build a dataset bundle");
  prepare->add_option("--synthetic", prep.synthetic, "users,user_edges,items,item_edges");
  prepare->add_option("--social", prep.social, "Social edge list (src dst [weight])");
  prepare->add_option("--interactions", prep.interactions, "Interaction list (user item value)");
  prepare->add_option("--item-graph", prep.item_graph, "Item edge list; built from interactions if absent");
  prepare->add_option("--weights", prep.weights, "reciprocal | explicit")->capture_default_str();
  prepare->add_option("--threshold", prep.threshold, "Item similarity threshold")->capture_default_str();
  prepare->add_option("--fill", prep.fill, "Preference of users without interactions")->capture_default_str();
  prepare->add_option("--users", prep.users, "User count (default: max id + 1)");
  prepare->add_option("--items", prep.items, "Item count (default: max id + 1)");
  prepare->add_option("--config", prep.config, "JSON file with the same keys");
  prepare->add_option("--seed", prep.seed, "Seed for synthetic generation")->capture_default_str();
  prepare->add_option("--out", prep.out, "Bundle path")->required();

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Select seeds with one method");
  optimize->add_option("--data", opt.data, "Dataset bundle")->required();
  optimize->add_option("--method", opt.method, "gbim | maxdegree | greedy | random")
      ->capture_default_str();
  optimize->add_option("-k,--budget", opt.k, "Seed-set size")->capture_default_str();
  optimize->add_option("--config", opt.config, "JSON method and diffusion settings");
  optimize->add_option("--seed", opt.seed, "Master seed")->capture_default_str();
  optimize->add_option("--jobs", opt.jobs, "Simulation threads")->capture_default_str();
  optimize->add_option("--out", opt.out, "Output directory")->capture_default_str();

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Run an experiment plan");
  benchmark->add_option("--config", bench.config, "JSON experiment plan")->required();
  benchmark->add_option("--seed", bench.seed, "Master seed (overrides the plan)");
  benchmark->add_option("--jobs", bench.jobs, "Grid cells run in parallel")->capture_default_str();
  benchmark->add_option("--out", bench.out, "Output directory (overrides the plan)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*prepare) return cmd_prepare(prep);
    if (*optimize) return cmd_optimize(opt);
    if (*benchmark) return cmd_benchmark(bench);
  } catch (const gbim::ValidationError& e) {
    std::cerr << "gbim: " << e.what() << '\n';
    return 1;
  } catch (const gbim::ParseError& e) {
    std::cerr << "gbim: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "gbim: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gbim: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
