// Python interface to the microgrid simulator: scenario execution, suite
// generation, gating algebra and policy training/evaluation.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmg/report.hpp"
#include "nmg/scenario.hpp"

namespace py = pybind11;
using namespace nmg;

namespace {

DecisionKind decision_from_lower(const std::string& s) {
  if (s == "inhibit") return DecisionKind::Inhibit;
  if (s == "facilitate") return DecisionKind::Facilitate;
  if (s == "neutral") return DecisionKind::Neutral;
  throw std::invalid_argument("unknown decision '" + s +
                              "' (expected inhibit|facilitate|neutral)");
}

void apply_overrides(ScenarioSpec& spec, const std::string& controller,
                     const std::string& force) {
  if (!controller.empty()) spec.controller = controller_kind_from_name(controller);
  if (!force.empty()) spec.force_decision = forced_decision_from_name(force);
}

PolicyState policy_or_default(const std::string& policy_json) {
  if (policy_json.empty()) return PolicyState::rule_based();
  return policy_from_json(policy_json);
}

py::dict kpi_dict(const KpiReport& k) {
  py::dict d;
  d["freq_dev_area"] = k.freq_dev_area;
  d["nadir"] = k.nadir;
  d["overshoot"] = k.overshoot;
  d["rocof_violations"] = k.rocof_violations;
  d["false_trips"] = k.false_trips;
  d["missed_faults"] = k.missed_faults;
  d["ess_stress"] = k.ess_stress;
  d["served_fraction"] = k.served_fraction;
  return d;
}

py::dict result_dict(const Trace& tr) {
  const KpiReport k = compute_kpis(tr, tr.ground_truth);
  py::dict d;
  d["name"] = tr.scenario_name;
  d["ground_truth"] = ground_truth_name(tr.ground_truth);
  d["kpis"] = kpi_dict(k);
  py::dict credited;
  credited["valid"] = tr.credited.valid;
  credited["kind"] = decision_kind_name(tr.credited.kind);
  credited["t"] = tr.credited.t;
  d["credited_decision"] = credited;
  d["steps"] = static_cast<int>(tr.steps.size());
  d["events"] = static_cast<int>(tr.events.size());
  return d;
}

std::vector<ScenarioSpec> parse_suite(const std::vector<std::string>& spec_jsons) {
  std::vector<ScenarioSpec> specs;
  specs.reserve(spec_jsons.size());
  for (const auto& text : spec_jsons) specs.push_back(scenario_from_json(text));
  return specs;
}

std::vector<ScenarioSpec> make_suite(const std::string& kind, std::uint64_t seed, int n,
                                     double dt_lo, double dt_hi) {
  if (kind == "ppi") return generate_ppi_suite(seed, n);
  if (kind == "ppf") return generate_ppf_suite(seed, n, dt_lo, dt_hi);
  if (kind == "separable") return generate_separable_suite(seed, n);
  throw std::invalid_argument("unknown suite kind '" + kind +
                              "' (expected ppi|ppf|separable)");
}

}  // namespace

PYBIND11_MODULE(nmgsim, m) {
  m.doc() =
      "Deterministic islanded-microgrid simulator with a gated protection "
      "stack: scenario execution, suite generation and policy learning.";

  m.def("version", [] { return std::string("1.0.0"); });

  m.def(
      "run_scenario",
      [](const std::string& spec_json, const std::string& controller,
         const std::string& force, const std::string& policy_json) {
        ScenarioSpec spec = scenario_from_json(spec_json);
        apply_overrides(spec, controller, force);
        PolicyState policy = policy_or_default(policy_json);
        return result_dict(run_scenario(spec, &policy));
      },
      py::arg("spec_json"), py::arg("controller") = "", py::arg("force") = "",
      py::arg("policy_json") = "",
      "Run one scenario from its JSON description; returns the metric report.");

  m.def(
      "run_scenario_file",
      [](const std::string& path, const std::string& controller,
         const std::string& force, const std::string& policy_json) {
        ScenarioSpec spec = load_scenario(path);
        apply_overrides(spec, controller, force);
        PolicyState policy = policy_or_default(policy_json);
        return result_dict(run_scenario(spec, &policy));
      },
      py::arg("path"), py::arg("controller") = "", py::arg("force") = "",
      py::arg("policy_json") = "");

  m.def(
      "write_scenario_outputs",
      [](const std::string& spec_json, const std::string& out_dir,
         const std::string& format, const std::string& controller,
         const std::string& force, const std::string& policy_json) {
        ScenarioSpec spec = scenario_from_json(spec_json);
        apply_overrides(spec, controller, force);
        PolicyState policy = policy_or_default(policy_json);
        const Trace tr = run_scenario(spec, &policy);
        const KpiReport k = compute_kpis(tr, tr.ground_truth);
        write_trace(tr, k, out_dir, format);
        return kpi_dict(k);
      },
      py::arg("spec_json"), py::arg("out_dir"), py::arg("format") = "csv",
      py::arg("controller") = "", py::arg("force") = "", py::arg("policy_json") = "",
      "Run one scenario and write its step/hop/event tables and metrics.");

  m.def(
      "generate_suite",
      [](const std::string& kind, std::uint64_t seed, int n, double dt_lo,
         double dt_hi) {
        std::vector<std::string> out;
        for (const auto& s : make_suite(kind, seed, n, dt_lo, dt_hi))
          out.push_back(scenario_to_json(s));
        return out;
      },
      py::arg("kind"), py::arg("seed"), py::arg("n"), py::arg("dt_lo") = 0.5,
      py::arg("dt_hi") = 1.5,
      "Generate a seeded scenario suite (ppi|ppf|separable) as JSON strings.");

  m.def(
      "write_suite",
      [](const std::string& kind, std::uint64_t seed, int n,
         const std::string& out_dir, double dt_lo, double dt_hi) {
        std::filesystem::create_directories(out_dir);
        std::vector<std::string> paths;
        for (const auto& s : make_suite(kind, seed, n, dt_lo, dt_hi)) {
          const std::string path = out_dir + "/" + s.name + ".json";
          save_scenario(s, path);
          paths.push_back(path);
        }
        return paths;
      },
      py::arg("kind"), py::arg("seed"), py::arg("n"), py::arg("out_dir"),
      py::arg("dt_lo") = 0.5, py::arg("dt_hi") = 1.5);

  m.def(
      "run_suite",
      [](const std::vector<std::string>& spec_jsons, const std::string& controller,
         const std::string& force, const std::string& policy_json, int parallelism) {
        auto specs = parse_suite(spec_jsons);
        for (auto& s : specs) apply_overrides(s, controller, force);
        const PolicyState policy = policy_or_default(policy_json);
        py::list out;
        for (const auto& tr : run_batch(specs, &policy, parallelism))
          out.append(result_dict(tr));
        return out;
      },
      py::arg("spec_jsons"), py::arg("controller") = "", py::arg("force") = "",
      py::arg("policy_json") = "", py::arg("parallelism") = 1,
      "Run a batch of scenarios; results are identical at any parallelism.");

  m.def(
      "gate_factor_of",
      [](const std::string& decision, double confidence, int persistence) {
        SupervisoryDecision d;
        d.kind = decision_from_lower(decision);
        d.c = confidence;
        d.i_mag = d.kind == DecisionKind::Inhibit ? confidence : 0.0;
        GateContext ctx;
        ctx.persistence = persistence;
        return gating_factor(d, ctx, GateParams{}).g;
      },
      py::arg("decision"), py::arg("confidence"), py::arg("persistence") = 0,
      "Multiplicative gate factor for a supervisory decision.");

  m.def(
      "gate_output",
      [](double a, double i_mag, double g) {
        ReflexDrive drive;
        drive.a = a;
        SupervisoryDecision d;
        d.kind = DecisionKind::Inhibit;
        d.i_mag = i_mag;
        GateFactor gf;
        gf.g = g;
        gf.rationale_kind =
            g < 1.0 ? GateKind::PPI : (g > 1.0 ? GateKind::PPF : GateKind::Neutral);
        return gate_apply(drive, d, gf).s_out;
      },
      py::arg("a"), py::arg("i_mag"), py::arg("g"),
      "Gated protection output max(0, a - i_mag) * g.");

  m.def(
      "train_policy_on",
      [](const std::vector<std::string>& spec_jsons, int episodes, std::uint64_t seed,
         double alpha, double epsilon) {
        const TrainResult res =
            train_policy(parse_suite(spec_jsons), episodes, seed, alpha, epsilon);
        py::dict d;
        d["policy_json"] = policy_to_json(res.policy);
        d["rewards"] = res.rewards;
        return d;
      },
      py::arg("spec_jsons"), py::arg("episodes"), py::arg("seed"),
      py::arg("alpha") = 0.3, py::arg("epsilon") = 0.1,
      "Episodic training on a scenario suite; returns the policy and rewards.");

  m.def(
      "evaluate_policy_on",
      [](const std::vector<std::string>& spec_jsons, const std::string& policy_json,
         int parallelism) {
        const EvalResult ev = evaluate_policy(parse_suite(spec_jsons),
                                              policy_from_json(policy_json), parallelism);
        py::dict d;
        d["correct"] = ev.correct;
        d["total"] = ev.total;
        d["accuracy"] = ev.accuracy;
        py::list decisions;
        for (DecisionKind k : ev.decisions) decisions.append(decision_kind_name(k));
        d["decisions"] = decisions;
        return d;
      },
      py::arg("spec_jsons"), py::arg("policy_json"), py::arg("parallelism") = 1,
      "Greedy evaluation of a trained policy against scenario ground truth.");
}
