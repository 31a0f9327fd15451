#include "gbim/harness.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "gbim/baselines.hpp"
#include "gbim/bundle.hpp"
#include "gbim/error.hpp"
#include "gbim/parallel.hpp"
#include "gbim/text_io.hpp"

namespace gbim {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kMethodStream = 0x3E;
constexpr std::uint64_t kFinalEvalStream = 0xF1;
constexpr std::uint64_t kGreedyStream = 0x6D;
constexpr std::uint64_t kRandomStream = 0x2A;
constexpr std::uint64_t kScaleDataStream = 0x5C;

const std::set<std::string> kMethods{"gbim", "maxdegree", "greedy", "random"};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
T get_as(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("bad value for '" + key + "': " + e.what());
  }
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
  if (!doc.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

std::string mode_name(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::compare: return "compare";
    case ExperimentMode::alpha_sweep: return "alpha_sweep";
    case ExperimentMode::scalability: return "scalability";
  }
  return "compare";
}

SyntheticParams parse_synthetic(const json& doc) {
  reject_unknown(doc, {"users", "user_edges", "items", "item_edges", "seed"}, "synthetic");
  SyntheticParams s;
  s.users = get_as<std::size_t>(doc, "users");
  s.user_edges = get_as<std::size_t>(doc, "user_edges");
  s.items = get_as<std::size_t>(doc, "items");
  s.item_edges = get_as<std::size_t>(doc, "item_edges");
  if (doc.contains("seed")) s.seed = get_as<std::uint64_t>(doc, "seed");
  return s;
}

// One output row of results.csv plus its timing and curve rows.
struct CellOutput {
  std::string method;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t k = 0;
  std::optional<double> alpha;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::string seed_set;
  std::optional<double> influence;
  std::size_t search_evaluations = 0;
  std::size_t evaluations = 0;
  std::string status = "ok";
  std::string error;
  std::vector<RoundRecord> history;
  double wall_seconds = 0.0;
  double mean_round_seconds = 0.0;
};

struct Cell {
  std::size_t method_index = 0;
  std::size_t k = 0;
  std::optional<double> alpha;
  std::size_t rep = 0;
  std::size_t dataset_index = 0;
  std::uint64_t seed = 0;       // drives the method
  std::uint64_t eval_seed = 0;  // shared by every method of the same (k, rep)
};

std::string key_prefix(const CellOutput& c) {
  std::ostringstream s;
  s << csv_escape(c.method) << ',' << c.n << ',' << c.m << ',' << c.k << ','
    << (c.alpha ? format_double(*c.alpha) : std::string()) << ',' << c.rep;
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void ExperimentPlan::validate() const {
  if (methods.empty()) throw ValidationError("experiment needs at least one method");
  for (const auto& m : methods) {
    if (!kMethods.count(m.name)) throw ValidationError("unknown method '" + m.name + "'");
  }
  if (seed_sizes.empty()) throw ValidationError("seed-size grid must not be empty");
  for (std::size_t k : seed_sizes) {
    if (k == 0) throw ValidationError("seed-set sizes must be at least 1");
  }
  if (repetitions == 0) throw ValidationError("repetitions must be at least 1");
  if (!dataset.bundle && !dataset.synthetic) {
    throw ValidationError("dataset needs a bundle path or synthetic parameters");
  }
  if (dataset.bundle && !std::filesystem::exists(*dataset.bundle)) {
    throw ValidationError("dataset bundle not found: " + dataset.bundle->string());
  }
  if (mode != ExperimentMode::compare && methods.front().name != "gbim") {
    throw ValidationError(mode_name(mode) + " mode runs gbim only");
  }
  if (mode == ExperimentMode::alpha_sweep) {
    if (alphas.empty()) throw ValidationError("alpha sweep needs at least one alpha");
    for (double a : alphas) {
      if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha values must lie in [0, 1]");
    }
  }
  if (mode == ExperimentMode::scalability) {
    if (!dataset.synthetic) throw ValidationError("scalability mode needs a synthetic dataset");
    if (user_counts.empty()) throw ValidationError("scalability mode needs user_counts");
  }
  diffusion.validate();
}

void apply_diffusion_overrides(DiffusionConfig& config, const json& doc) {
  reject_unknown(doc, {"model", "beta", "simulations", "seed", "threads"}, "diffusion");
  if (doc.contains("model")) config.model = parse_diffusion_model(get_as<std::string>(doc, "model"));
  if (doc.contains("beta")) config.beta = get_as<double>(doc, "beta");
  if (doc.contains("simulations")) config.simulations = get_as<std::size_t>(doc, "simulations");
  if (doc.contains("seed")) config.seed = get_as<std::uint64_t>(doc, "seed");
  if (doc.contains("threads")) config.threads = get_as<std::size_t>(doc, "threads");
}

void apply_gbim_overrides(GbimConfig& c, const json& doc) {
  reject_unknown(doc,
                 {"budget", "initial_design", "rounds", "patience", "candidates_per_round",
                  "select_fraction", "pool_fraction", "exploit_ratio", "first_round_epochs",
                  "full_retrain", "epochs", "learning_rate", "batch_size", "hidden_dim",
                  "random_features", "mlp_hidden", "node_feature_scale", "weight_variance",
                  "noise_variance", "pair_retries", "candidate_retries", "diffusion", "seed"},
                 "gbim config");
  auto set = [&]<typename T>(const char* key, T& field) {
    if (doc.contains(key)) field = get_as<T>(doc, key);
  };
  set("budget", c.budget);
  set("initial_design", c.initial_design);
  set("rounds", c.rounds);
  set("patience", c.patience);
  set("candidates_per_round", c.candidates_per_round);
  set("select_fraction", c.select_fraction);
  set("pool_fraction", c.pool_fraction);
  set("exploit_ratio", c.exploit_ratio);
  set("first_round_epochs", c.first_round_epochs);
  set("full_retrain", c.full_retrain);
  set("epochs", c.train.epochs);
  set("learning_rate", c.train.learning_rate);
  set("batch_size", c.train.batch_size);
  set("hidden_dim", c.surrogate.hidden_dim);
  set("random_features", c.surrogate.random_features);
  set("mlp_hidden", c.surrogate.mlp_hidden);
  set("node_feature_scale", c.surrogate.node_feature_scale);
  set("weight_variance", c.blr.weight_variance);
  set("pair_retries", c.sampler.pair_retries);
  set("candidate_retries", c.sampler.candidate_retries);
  set("seed", c.seed);
  if (doc.contains("noise_variance")) c.blr.noise_variance = get_as<double>(doc, "noise_variance");
  if (doc.contains("diffusion")) apply_diffusion_overrides(c.diffusion, doc.at("diffusion"));
}

ExperimentPlan parse_experiment_plan(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc,
                 {"mode", "dataset", "diffusion", "methods", "seed_sizes", "repetitions", "alphas",
                  "user_counts", "evaluation_simulations", "output", "seed"},
                 "experiment plan");
  ExperimentPlan plan;
  if (doc.contains("mode")) {
    const auto mode = get_as<std::string>(doc, "mode");
    if (mode == "compare") {
      plan.mode = ExperimentMode::compare;
    } else if (mode == "alpha_sweep") {
      plan.mode = ExperimentMode::alpha_sweep;
    } else if (mode == "scalability") {
      plan.mode = ExperimentMode::scalability;
    } else {
      throw ValidationError("unknown mode '" + mode + "'");
    }
  }
  if (!doc.contains("dataset")) throw ValidationError("experiment plan needs a dataset");
  const json& ds = doc.at("dataset");
  reject_unknown(ds, {"bundle", "synthetic"}, "dataset");
  if (ds.contains("bundle")) {
    std::filesystem::path p = get_as<std::string>(ds, "bundle");
    plan.dataset.bundle = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  if (ds.contains("synthetic")) plan.dataset.synthetic = parse_synthetic(ds.at("synthetic"));
  if (plan.dataset.bundle && plan.dataset.synthetic) {
    throw ValidationError("dataset must be either a bundle or synthetic, not both");
  }
  if (doc.contains("diffusion")) apply_diffusion_overrides(plan.diffusion, doc.at("diffusion"));
  if (doc.contains("methods")) {
    for (const auto& m : doc.at("methods")) {
      MethodEntry ms;
      if (m.is_string()) {
        ms.name = m.get<std::string>();
      } else {
        reject_unknown(m, {"name", "config"}, "method");
        ms.name = get_as<std::string>(m, "name");
        if (m.contains("config")) ms.config = m.at("config");
      }
      plan.methods.push_back(std::move(ms));
    }
  }
  if (doc.contains("seed_sizes")) plan.seed_sizes = get_as<std::vector<std::size_t>>(doc, "seed_sizes");
  if (doc.contains("repetitions")) plan.repetitions = get_as<std::size_t>(doc, "repetitions");
  if (doc.contains("alphas")) plan.alphas = get_as<std::vector<double>>(doc, "alphas");
  if (doc.contains("user_counts")) plan.user_counts = get_as<std::vector<std::size_t>>(doc, "user_counts");
  if (doc.contains("evaluation_simulations")) {
    plan.evaluation_simulations = get_as<std::size_t>(doc, "evaluation_simulations");
  }
  if (doc.contains("output")) plan.output = get_as<std::string>(doc, "output");
  if (doc.contains("seed")) plan.seed = get_as<std::uint64_t>(doc, "seed");
  if (plan.mode != ExperimentMode::compare && plan.methods.empty()) plan.methods.push_back({"gbim", {}});
  plan.validate();
  return plan;
}

ExperimentPlan load_experiment_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open experiment plan: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_experiment_plan(doc, path.parent_path());
}

Dataset materialize_dataset(const DatasetSource& source) {
  if (source.bundle) return load_bundle(*source.bundle);
  if (source.synthetic) return generate_synthetic(*source.synthetic);
  throw ValidationError("dataset needs a bundle path or synthetic parameters");
}

MethodRun run_method(const std::string& method, const json& method_config, const Dataset& data,
                     const DiffusionConfig& diffusion, std::size_t k, std::uint64_t seed) {
  MethodRun run;
  const auto start = Clock::now();
  if (method == "gbim") {
    GbimConfig config;
    config.diffusion = diffusion;
    apply_gbim_overrides(config, method_config);
    config.budget = k;
    config.seed = seed;
    std::vector<Clock::time_point> stamps;
    GbimResult r = run_gbim(config, data, [&](const RoundRecord&) { stamps.push_back(Clock::now()); });
    run.seeds = r.best;
    run.search_evaluations = r.evaluations;
    run.history = std::move(r.history);
    run.aborted = r.aborted;
    run.error = r.error;
    if (stamps.size() >= 2) {
      run.mean_round_seconds = std::chrono::duration<double>(stamps.back() - stamps.front()).count() /
                               static_cast<double>(stamps.size() - 1);
    }
  } else if (method == "maxdegree") {
    reject_unknown(method_config, {}, "maxdegree config");
    run.seeds = max_degree(data, k);
  } else if (method == "greedy") {
    reject_unknown(method_config, {"diffusion"}, "greedy config");
    DiffusionConfig dc = diffusion;
    if (method_config.contains("diffusion")) apply_diffusion_overrides(dc, method_config.at("diffusion"));
    dc.seed = derive_seed(seed, kGreedyStream);
    const GreedyResult g = lazy_greedy(data, dc, k);
    run.seeds = g.seeds;
    run.search_evaluations = g.evaluations;
  } else if (method == "random") {
    reject_unknown(method_config, {}, "random config");
    Rng rng = make_rng(seed, kRandomStream);
    run.seeds = random_baseline(Universe{data.num_users(), data.num_items(), k}, rng);
  } else {
    throw ValidationError("unknown method '" + method + "'");
  }
  run.wall_seconds = seconds_since(start);
  return run;
}

BenchmarkSummary run_benchmark(const ExperimentPlan& plan, std::size_t jobs) {
  plan.validate();

  // Datasets: one for compare and alpha_sweep, one per user count for scalability.
  std::vector<Dataset> datasets;
  if (plan.mode == ExperimentMode::scalability) {
    const SyntheticParams& base = *plan.dataset.synthetic;
    const double edges_per_user =
        base.users > 0 ? static_cast<double>(base.user_edges) / static_cast<double>(base.users) : 0.0;
    for (std::size_t n : plan.user_counts) {
      SyntheticParams s = base;
      s.users = n;
      s.user_edges = static_cast<std::size_t>(edges_per_user * static_cast<double>(n) + 0.5);
      s.seed = derive_seed(base.seed, kScaleDataStream, n);
      datasets.push_back(generate_synthetic(s));
    }
  } else {
    datasets.push_back(materialize_dataset(plan.dataset));
  }

  std::vector<Cell> cells;
  auto add_cells = [&](std::size_t dataset_index, std::size_t k, std::optional<double> alpha,
                       std::size_t method_index) {
    for (std::size_t rep = 0; rep < plan.repetitions; ++rep) {
      Cell c;
      c.method_index = method_index;
      c.k = k;
      c.alpha = alpha;
      c.rep = rep;
      c.dataset_index = dataset_index;
      const std::uint64_t base = derive_seed(plan.seed, derive_seed(dataset_index, k), rep);
      c.seed = derive_seed(base, kMethodStream, method_index);
      c.eval_seed = derive_seed(base, kFinalEvalStream);
      cells.push_back(c);
    }
  };
  switch (plan.mode) {
    case ExperimentMode::compare:
      for (std::size_t k : plan.seed_sizes) {
        for (std::size_t mi = 0; mi < plan.methods.size(); ++mi) add_cells(0, k, std::nullopt, mi);
      }
      break;
    case ExperimentMode::alpha_sweep:
      for (std::size_t k : plan.seed_sizes) {
        for (double a : plan.alphas) add_cells(0, k, a, 0);
      }
      break;
    case ExperimentMode::scalability:
      for (std::size_t di = 0; di < datasets.size(); ++di) add_cells(di, plan.seed_sizes.front(), std::nullopt, 0);
      break;
  }

  // Inner simulations stay single-threaded when cells run in parallel.
  DiffusionConfig diffusion = plan.diffusion;
  if (jobs > 1) diffusion.threads = 1;

  std::vector<CellOutput> outputs(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t index, std::size_t) {
    const Cell& cell = cells[index];
    const MethodEntry& method = plan.methods[cell.method_index];
    const Dataset& data = datasets[cell.dataset_index];
    CellOutput& out = outputs[index];
    out.method = method.name;
    out.n = data.num_users();
    out.m = data.num_items();
    out.k = cell.k;
    out.alpha = cell.alpha;
    out.rep = cell.rep;
    out.seed = cell.seed;
    try {
      json config = method.config;
      if (cell.alpha) config["exploit_ratio"] = *cell.alpha;
      MethodRun run = run_method(method.name, config, data, diffusion, cell.k, cell.seed);
      DiffusionConfig final_eval = diffusion;
      final_eval.seed = cell.eval_seed;
      if (plan.evaluation_simulations > 0) final_eval.simulations = plan.evaluation_simulations;
      out.influence = estimate_influence(run.seeds, data, final_eval);
      out.seed_set = run.seeds.to_string();
      out.search_evaluations = run.search_evaluations;
      out.evaluations = run.search_evaluations + 1;
      out.history = std::move(run.history);
      out.wall_seconds = run.wall_seconds;
      out.mean_round_seconds = run.mean_round_seconds;
      if (run.aborted) {
        out.status = "aborted";
        out.error = run.error;
      }
    } catch (const std::exception& e) {
      out.status = "error";
      out.error = e.what();
    }
  });

  std::ostringstream results;
  std::ostringstream curves;
  std::ostringstream timings;
  results << "method,n,m,k,alpha,rep,seed,seed_set,influence,search_evaluations,evaluations,status,error\n";
  curves << "method,n,m,k,alpha,rep,round,loss,best_so_far,evaluations\n";
  timings << "method,n,m,k,alpha,rep,wall_seconds,mean_round_seconds\n";
  BenchmarkSummary summary;
  for (const auto& c : outputs) {
    const std::string prefix = key_prefix(c);
    results << prefix << ',' << c.seed << ',' << csv_escape(c.seed_set) << ','
            << (c.influence ? format_double(*c.influence) : std::string()) << ','
            << c.search_evaluations << ',' << c.evaluations << ',' << c.status << ','
            << csv_escape(c.error) << '\n';
    ++summary.result_rows;
    if (c.status == "error") ++summary.failed_rows;
    for (const auto& r : c.history) {
      curves << prefix << ',' << r.round << ',' << format_double(r.loss) << ','
             << format_double(r.best_so_far) << ',' << r.evaluations << '\n';
      ++summary.curve_rows;
    }
    timings << prefix << ',' << format_double(c.wall_seconds) << ','
            << format_double(c.mean_round_seconds) << '\n';
  }

  std::filesystem::create_directories(plan.output);
  write_file(plan.output / "results.csv", results.str());
  write_file(plan.output / "curves.csv", curves.str());
  write_file(plan.output / "timings.csv", timings.str());
  json manifest = {
      {"mode", mode_name(plan.mode)},
      {"seed", plan.seed},
      {"schemas",
       {{"results.csv", kResultsSchemaVersion},
        {"curves.csv", kCurvesSchemaVersion},
        {"timings.csv", kTimingsSchemaVersion}}},
      {"rows",
       {{"results.csv", summary.result_rows},
        {"curves.csv", summary.curve_rows},
        {"timings.csv", summary.result_rows}}},
      {"failed", summary.failed_rows},
  };
  write_file(plan.output / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace gbim
