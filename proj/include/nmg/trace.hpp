#pragma once

#include <string>
#include <vector>

#include "nmg/telemetry.hpp"

namespace nmg {

enum class GroundTruth { Benign, Harmful };
const char* ground_truth_name(GroundTruth g);
GroundTruth ground_truth_from_name(const std::string& s);

enum class DecisionKind { Inhibit, Facilitate, Neutral };
const char* decision_kind_name(DecisionKind k);
DecisionKind decision_kind_from_name(const std::string& s);

struct StepRecord {
  double t = 0.0;
  double delta_f = 0.0;
  double v = 1.0;
  std::vector<double> p_dg;
  double p_ess = 0.0;
  double soc = 0.5;
  double p_load = 1.0;
  double shed_fraction = 0.0;
  bool breaker_feeder = true;
  bool prearm = false;
};

struct HopRecord {
  double t = 0.0;
  FeatureVector features;
  double a = 0.0;
  int criteria_mask = 0;
  DecisionKind decision = DecisionKind::Neutral;
  double confidence = 0.0;
  double i_mag = 0.0;
  double g = 1.0;
  double s_out = 0.0;
};

// Event types used in the log: injection, detection, criteria, action,
// hard_override, breaker_open.
struct EventRecord {
  double t = 0.0;
  std::string type;
  std::string detail;
  double value = 0.0;
};

// The supervisory decision that "owns" an episode for learning purposes: the
// last one issued before the pulse (or before the end, for pulse-free runs).
struct CreditedDecision {
  bool valid = false;
  int bin = -1;
  DecisionKind kind = DecisionKind::Neutral;
  double t = 0.0;
};

struct Trace {
  std::string scenario_name;
  GroundTruth ground_truth = GroundTruth::Benign;
  double dt_sim = 1e-3;
  double hop = 0.01;
  std::vector<StepRecord> steps;
  std::vector<HopRecord> hops;
  std::vector<EventRecord> events;
  CreditedDecision credited;

  double first_injection_t() const;  // 1e9 if the timeline was empty
};

struct KpiReport {
  double freq_dev_area = 0.0;   // pu·s, integral of |delta_f|
  double nadir = 0.0;           // pu, min delta_f
  double overshoot = 0.0;       // pu, max delta_f after the first disturbance
  int rocof_violations = 0;     // hops with |rocof| above the limit
  int false_trips = 0;          // protection actions during a Benign episode
  int missed_faults = 0;        // faults without timely trip/shed
  double ess_stress = 0.0;      // pu·s, integral of |p_ess|
  double served_fraction = 1.0; // load-seconds served / load-seconds demanded
};

inline constexpr double kReactionDeadline = 0.2;   // s allowed between fault and clearing
inline constexpr double kRocofViolationLimit = 0.5;  // Hz/s

// Derives all KPI fields from a complete trace.  Throws std::invalid_argument
// on an empty trace.
KpiReport compute_kpis(const Trace& trace, GroundTruth ground_truth);

}  // namespace nmg
