#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nmg/rng.hpp"
#include "nmg/telemetry.hpp"
#include "nmg/trace.hpp"

namespace nmg {

enum class Label { Harmless, Harmful };
const char* label_name(Label l);

struct SupervisoryDecision {
  DecisionKind kind = DecisionKind::Neutral;
  double c = 0.0;      // confidence in [0,1]
  double i_mag = 0.0;  // subtractive inhibition; nonzero only for Inhibit
  double t = 0.0;
};

// Feature-space thresholds of the rule "Harmful iff (sustained sag AND
// distorted) OR fast frequency movement OR persistent event activity".
struct ClassifierRule {
  double sag_duration_s = 0.05;
  double thd = 0.05;
  double rocof = 0.3;  // Hz/s
  int persistence = 3;
};

// Quantization edges: 4 features x 4 bins = 256 cells.
struct PolicyBins {
  std::array<double, 3> sag_depth{0.05, 0.12, 0.30};
  std::array<double, 3> sag_duration{0.05, 0.10, 0.20};
  std::array<double, 3> thd{0.05, 0.08, 0.30};
  std::array<double, 3> rocof{0.3, 0.5, 2.0};
};

inline constexpr int kNumBins = 256;
inline constexpr int kNumActions = 3;  // Inhibit, Facilitate, Neutral
inline constexpr int kMinHistoryForPurity = 5;

struct PolicyState {
  enum class Mode { RuleBased, Learned };
  Mode mode = Mode::RuleBased;

  ClassifierRule rule{};
  PolicyBins bins{};
  double epsilon = 0.1;
  double alpha_lr = 0.3;
  double c_min = 0.2;  // below this confidence the decision falls back to Neutral

  std::vector<std::array<double, kNumActions>> q;  // per bin: Inhibit, Facilitate, Neutral
  std::vector<std::array<std::uint64_t, 2>> label_counts;  // per bin: harmless, harmful
  Rng rng{0};

  static PolicyState rule_based();
  static PolicyState learned(std::uint64_t seed, double alpha_lr = 0.3,
                             double epsilon = 0.1);
};

int feature_bin(const FeatureVector& f, const PolicyBins& bins);

// RuleBased: margin-based label and confidence (scaled by how far any feature
// actually rose above its precursor level, so an all-quiet vector scores ~0).
// Learned: label from the greedy action, confidence from the softmax gap of
// the q-values or the bin's label purity, whichever is stronger.
std::pair<Label, double> classify(const FeatureVector& f, const PolicyState& policy,
                                  const Thresholds& thr);

// Maps the label to a decision; low confidence falls back to Neutral; in
// Learned mode epsilon-greedy exploration may substitute any decision kind.
SupervisoryDecision decide(Label label, double c, PolicyState& policy, double t);

// Episode reward from the KPI report:
//   r = 1 - 1.0*freq_dev_area - 2.0*false_trips - 5.0*missed_faults - 0.1*ess_stress
double reward_of(const KpiReport& k);

// Contextual-bandit update q[bin][kind] += alpha*(r - q).  Rejected in
// RuleBased mode with std::logic_error.
void policy_update(PolicyState& policy, int bin, DecisionKind executed, double r);

// Ground-truth bookkeeping per bin (drives label purity and the Neutral
// majority label).
void record_label(PolicyState& policy, int bin, GroundTruth truth);

std::string policy_to_json(const PolicyState& policy);
PolicyState policy_from_json(const std::string& text);
void save_policy(const PolicyState& policy, const std::string& path);
PolicyState load_policy(const std::string& path);

}  // namespace nmg
