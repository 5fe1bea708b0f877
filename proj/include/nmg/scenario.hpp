#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nmg/baselines.hpp"
#include "nmg/gate.hpp"
#include "nmg/plant.hpp"
#include "nmg/reflex.hpp"
#include "nmg/supervisor.hpp"
#include "nmg/telemetry.hpp"
#include "nmg/trace.hpp"

namespace nmg {

inline constexpr double kHop = 0.01;      // s decision/telemetry hop
inline constexpr double kWindow = 0.1;    // s analysis window
inline constexpr double kIslandingImbalance = 0.15;  // pu lost import on islanding

enum class InjectionKind { LoadStep, Sag, HarmonicBurst, Fault, Islanding };
const char* injection_kind_name(InjectionKind k);
InjectionKind injection_kind_from_name(const std::string& s);

struct ScenarioInjection {
  InjectionKind kind = InjectionKind::LoadStep;
  double t_start = 0.0;
  double dp = 0.0;         // LoadStep, pu
  double depth = 0.0;      // Sag, pu
  double duration = 0.0;   // Sag / HarmonicBurst, s
  int order = 3;           // HarmonicBurst
  double amplitude = 0.0;  // HarmonicBurst, relative to fundamental
  double severity = 0.0;   // Fault, pu imbalance
  std::string element = "feeder";  // Fault
};

struct PrepulsePulsePair {
  ScenarioInjection prepulse;
  std::optional<ScenarioInjection> pulse;
  double delta_t = 0.0;  // s between prepulse onset and pulse onset
  GroundTruth ground_truth = GroundTruth::Benign;
};

using TimelineEntry = std::variant<ScenarioInjection, PrepulsePulsePair>;

enum class ControllerKind { SgNmg, DroopOnly, Bel, Pi };
const char* controller_kind_name(ControllerKind k);
ControllerKind controller_kind_from_name(const std::string& s);

enum class ForcedDecision { Unforced, Neutral, Inhibit, Facilitate };
const char* forced_decision_name(ForcedDecision f);
ForcedDecision forced_decision_from_name(const std::string& s);

struct ScenarioSpec {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  double duration = 2.0;
  PlantParams plant{};
  Thresholds thresholds{};
  ReflexLimits reflex{};
  GateParams gate{};
  std::vector<TimelineEntry> timeline;
  ControllerKind controller = ControllerKind::SgNmg;
  double secondary_period = 0.1;
  ForcedDecision force_decision = ForcedDecision::Unforced;

  // Pairs expanded into their prepulse/pulse injections, sorted by t_start.
  std::vector<ScenarioInjection> flattened() const;
  GroundTruth ground_truth() const;  // Harmful iff any Fault is scheduled
  void validate() const;             // throws std::invalid_argument
};

std::string scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const std::string& text);
void save_scenario(const ScenarioSpec& spec, const std::string& path);
ScenarioSpec load_scenario(const std::string& path);

// Benign precursors only (shallow sags / small harmonic bursts), no pulse.
std::vector<ScenarioSpec> generate_ppi_suite(std::uint64_t seed, int n);

// Feature-distinct precursors each followed by a fault pulse after delta_t
// drawn from [dt_lo, dt_hi].
std::vector<ScenarioSpec> generate_ppf_suite(std::uint64_t seed, int n,
                                             double dt_lo = 0.5, double dt_hi = 1.5);

// Sag-only episodes whose harmfulness is decided purely by sag duration
// (> 100 ms), for policy training/evaluation.
std::vector<ScenarioSpec> generate_separable_suite(std::uint64_t seed, int n);

struct BelRunConfig {
  BelState* state = nullptr;  // persistent weights (in/out); null = fresh zeros
  double rew = 0.0;           // reinforcement held fixed within the episode
  bool learn = false;
};

// Runs one scenario end to end.  `policy` (if given) supplies the supervisory
// policy and is advanced in place (exploration stream, but no q updates; those
// happen between episodes in train_policy).
Trace run_scenario(const ScenarioSpec& spec, PolicyState* policy = nullptr,
                   const BelRunConfig& bel = {});

// Runs independent scenarios, optionally on a thread pool.  Results are
// bit-identical to sequential execution; each run works on its own copy of
// the frozen policy.
std::vector<Trace> run_batch(const std::vector<ScenarioSpec>& specs,
                             const PolicyState* policy, int parallelism);

struct TrainResult {
  PolicyState policy;
  std::vector<double> rewards;  // one per episode
};

// Episodic contextual-bandit training: each episode runs one scenario
// (cycling through `specs`), then the credited decision is reinforced with
// the episode reward.
TrainResult train_policy(const std::vector<ScenarioSpec>& specs, int episodes,
                         std::uint64_t seed, double alpha_lr = 0.3,
                         double epsilon = 0.1);

struct EvalResult {
  int correct = 0;
  int total = 0;
  double accuracy = 0.0;
  std::vector<KpiReport> kpis;
  std::vector<DecisionKind> decisions;
};

// Greedy (epsilon = 0) evaluation: counts credited decisions matching the
// ground truth (Benign -> Inhibit, Harmful -> Facilitate).
EvalResult evaluate_policy(const std::vector<ScenarioSpec>& specs,
                           const PolicyState& policy, int parallelism = 1);

struct BelTrainingResult {
  BelState state;
  std::vector<double> dev_areas;    // per-episode integral of |delta_f|
  std::vector<std::vector<double>> v_w_history;  // excitatory weights after each episode
};

// Repeated frequency-regulation episodes (fixed load step) with the
// reinforcement signal taken from the previous episode's closing deviation.
BelTrainingResult run_bel_training(int episodes);

}  // namespace nmg
