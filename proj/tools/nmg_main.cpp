// Command-line front end: run single scenarios or suites, generate scenario
// families, train/evaluate the supervisory policy, and compare controllers.
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmg/num.hpp"
#include "nmg/report.hpp"
#include "nmg/scenario.hpp"
#include "nmg/supervisor.hpp"

namespace fs = std::filesystem;
using namespace nmg;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("NMG_SEED");
  if (!s || !*s) return std::nullopt;
  return static_cast<std::uint64_t>(parse_int(s));
}

// Seed precedence: explicit --seed flag, then NMG_SEED, then the default.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value,
                           std::uint64_t fallback) {
  if (opt->count() > 0) return flag_value;
  if (auto e = env_seed()) return *e;
  return fallback;
}

std::vector<ScenarioSpec> load_suite_dir(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no scenario .json files in: " + dir);
  std::vector<ScenarioSpec> specs;
  specs.reserve(files.size());
  for (const auto& f : files) {
    try {
      specs.push_back(load_scenario(f.string()));
    } catch (const std::exception& ex) {
      throw std::runtime_error(f.string() + ": " + ex.what());
    }
  }
  return specs;
}

void apply_overrides(ScenarioSpec& spec, const std::string& controller,
                     const std::string& force) {
  if (!controller.empty()) spec.controller = controller_kind_from_name(controller);
  if (!force.empty()) spec.force_decision = forced_decision_from_name(force);
}

int run_suite_and_report(std::vector<ScenarioSpec> specs,
                         const std::string& controller, const std::string& force,
                         const std::string& policy_file, const std::string& out_dir,
                         const std::string& format, int parallel) {
  for (auto& s : specs) apply_overrides(s, controller, force);
  std::optional<PolicyState> policy;
  if (!policy_file.empty()) policy = load_policy(policy_file);
  const auto traces = run_batch(specs, policy ? &*policy : nullptr, parallel);
  std::vector<KpiReport> kpis;
  kpis.reserve(traces.size());
  fs::create_directories(out_dir);
  for (const auto& tr : traces) {
    kpis.push_back(compute_kpis(tr, tr.ground_truth));
    write_trace(tr, kpis.back(), out_dir, format);
  }
  const SuiteSummary sum = summarize_kpis(kpis);
  std::ofstream(out_dir + "/suite_summary.json") << suite_summary_json(sum) << "\n";
  std::ofstream(out_dir + "/suite_summary.csv") << suite_summary_csv(sum);
  std::cout << suite_summary_json(sum) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Islanded-microgrid simulator with a gated protection stack"};
  app.require_subcommand(1);

  std::string spec_path, suite_dir, out_dir = "out", format = "csv";
  std::string controller, force, policy_file, policy_out;
  int parallel = 1;
  int episodes = 500, count = 40;
  std::uint64_t seed = 1;
  double alpha_lr = 0.3, epsilon = 0.1, dt_lo = 0.5, dt_hi = 1.5;
  std::string gen_kind, controllers_arg;

  auto add_common = [&](CLI::App* cmd, bool with_parallel) {
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--format", format, "Output format: csv|json|svg")
        ->check(CLI::IsMember({"csv", "json", "svg"}))
        ->capture_default_str();
    if (with_parallel)
      cmd->add_option("--parallel", parallel, "Worker threads")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run a single scenario file");
  run_cmd->add_option("spec", spec_path, "Scenario .json file")->required();
  run_cmd->add_option("--controller", controller,
                      "Override controller: sg-nmg|bel|pi|droop-only");
  run_cmd->add_option("--force-decision", force,
                      "Force the supervisory decision: none|neutral|inhibit|facilitate");
  run_cmd->add_option("--policy", policy_file, "Policy .json for sg-nmg runs");
  add_common(run_cmd, false);

  CLI::App* suite_cmd = app.add_subcommand("suite", "Run a directory of scenarios");
  suite_cmd->add_option("dir", suite_dir, "Directory of scenario .json files")
      ->required();
  suite_cmd->add_option("--controller", controller,
                        "Override controller for every scenario");
  suite_cmd->add_option("--force-decision", force, "Force the supervisory decision");
  suite_cmd->add_option("--policy", policy_file, "Policy .json for sg-nmg runs");
  add_common(suite_cmd, true);

  CLI::App* train_cmd = app.add_subcommand("train", "Train the supervisory policy");
  train_cmd->add_option("dir", suite_dir, "Directory of training scenarios")
      ->required();
  train_cmd->add_option("--episodes", episodes, "Training episodes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  const CLI::Option* train_seed_opt =
      train_cmd->add_option("--seed", seed, "Policy seed (NMG_SEED overrides default)");
  train_cmd->add_option("--policy-out", policy_out, "Where to write the trained policy")
      ->required();
  train_cmd->add_option("--alpha", alpha_lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--epsilon", epsilon, "Exploration rate")
      ->capture_default_str();

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a trained policy");
  eval_cmd->add_option("dir", suite_dir, "Directory of evaluation scenarios")
      ->required();
  eval_cmd->add_option("--policy", policy_file, "Policy .json to evaluate")->required();
  eval_cmd->add_option("--parallel", parallel, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Run one suite under several controllers");
  compare_cmd->add_option("dir", suite_dir, "Directory of scenario .json files")
      ->required();
  compare_cmd
      ->add_option("--controllers", controllers_arg,
                   "Comma-separated list, e.g. sg-nmg,bel,pi")
      ->required();
  compare_cmd->add_option("--policy", policy_file, "Policy .json for sg-nmg runs");
  add_common(compare_cmd, true);

  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a scenario suite");
  gen_cmd->add_option("kind", gen_kind, "Suite family: ppi|ppf|separable")
      ->required()
      ->check(CLI::IsMember({"ppi", "ppf", "separable"}));
  gen_cmd->add_option("--count", count, "Number of scenarios")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  const CLI::Option* gen_seed_opt =
      gen_cmd->add_option("--seed", seed, "Base seed (NMG_SEED overrides default)");
  gen_cmd->add_option("--dt-lo", dt_lo, "Shortest prepulse-to-pulse interval (ppf)")
      ->capture_default_str();
  gen_cmd->add_option("--dt-hi", dt_hi, "Longest prepulse-to-pulse interval (ppf)")
      ->capture_default_str();
  gen_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      ScenarioSpec spec = load_scenario(spec_path);
      apply_overrides(spec, controller, force);
      std::optional<PolicyState> policy;
      if (!policy_file.empty()) policy = load_policy(policy_file);
      const Trace tr = run_scenario(spec, policy ? &*policy : nullptr);
      const KpiReport k = compute_kpis(tr, tr.ground_truth);
      write_trace(tr, k, out_dir, format);
      std::cout << kpis_json(tr, k) << "\n";
      return 0;
    }

    if (suite_cmd->parsed()) {
      return run_suite_and_report(load_suite_dir(suite_dir), controller, force,
                                  policy_file, out_dir, format, parallel);
    }

    if (train_cmd->parsed()) {
      const auto specs = load_suite_dir(suite_dir);
      const std::uint64_t s = resolve_seed(train_seed_opt, seed, 1);
      const TrainResult res = train_policy(specs, episodes, s, alpha_lr, epsilon);
      save_policy(res.policy, policy_out);
      const std::size_t tail = std::min<std::size_t>(50, res.rewards.size());
      const double tail_mean =
          std::accumulate(res.rewards.end() - tail, res.rewards.end(), 0.0) /
          static_cast<double>(tail);
      nlohmann::json j{{"episodes", episodes},
                       {"seed", s},
                       {"mean_reward_last_50", tail_mean},
                       {"policy", policy_out}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      const auto specs = load_suite_dir(suite_dir);
      const PolicyState pol = load_policy(policy_file);
      const EvalResult r = evaluate_policy(specs, pol, parallel);
      nlohmann::json j{{"correct", r.correct},
                       {"total", r.total},
                       {"accuracy", r.accuracy}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (compare_cmd->parsed()) {
      std::vector<std::string> names;
      std::string cur;
      for (char c : controllers_arg + ",") {
        if (c == ',') {
          if (!cur.empty()) names.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (names.size() < 2)
        throw std::invalid_argument("compare: need at least two controllers");
      const auto specs = load_suite_dir(suite_dir);
      std::optional<PolicyState> policy;
      if (!policy_file.empty()) policy = load_policy(policy_file);
      std::vector<ControllerSummary> rows;
      for (const auto& name : names) {
        std::vector<ScenarioSpec> local = specs;
        for (auto& sp : local) {
          sp.controller = controller_kind_from_name(name);
          sp.force_decision = ForcedDecision::Unforced;
        }
        const auto traces = run_batch(local, policy ? &*policy : nullptr, parallel);
        std::vector<KpiReport> kpis;
        kpis.reserve(traces.size());
        for (const auto& tr : traces) kpis.push_back(compute_kpis(tr, tr.ground_truth));
        rows.push_back(ControllerSummary{name, summarize_kpis(kpis)});
      }
      const std::string table =
          format == "json" ? compare_json(rows) : compare_csv(rows);
      fs::create_directories(out_dir);
      const std::string ext = format == "json" ? ".json" : ".csv";
      std::ofstream(out_dir + "/compare" + ext) << table;
      std::cout << table;
      return 0;
    }

    if (gen_cmd->parsed()) {
      const std::uint64_t s = resolve_seed(gen_seed_opt, seed, 1);
      std::vector<ScenarioSpec> specs;
      if (gen_kind == "ppi")
        specs = generate_ppi_suite(s, count);
      else if (gen_kind == "ppf")
        specs = generate_ppf_suite(s, count, dt_lo, dt_hi);
      else
        specs = generate_separable_suite(s, count);
      fs::create_directories(out_dir);
      for (const auto& sp : specs) save_scenario(sp, out_dir + "/" + sp.name + ".json");
      nlohmann::json j{{"generated", static_cast<int>(specs.size())},
                       {"kind", gen_kind},
                       {"seed", s},
                       {"dir", out_dir}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    nlohmann::json err{{"error", ex.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
