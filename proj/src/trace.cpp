#include "nmg/trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nmg {

const char* ground_truth_name(GroundTruth g) {
  return g == GroundTruth::Benign ? "Benign" : "Harmful";
}

GroundTruth ground_truth_from_name(const std::string& s) {
  if (s == "Benign") return GroundTruth::Benign;
  if (s == "Harmful") return GroundTruth::Harmful;
  throw std::invalid_argument("unknown ground truth label '" + s + "'");
}

const char* decision_kind_name(DecisionKind k) {
  switch (k) {
    case DecisionKind::Inhibit: return "Inhibit";
    case DecisionKind::Facilitate: return "Facilitate";
    case DecisionKind::Neutral: return "Neutral";
  }
  return "Neutral";
}

DecisionKind decision_kind_from_name(const std::string& s) {
  if (s == "Inhibit") return DecisionKind::Inhibit;
  if (s == "Facilitate") return DecisionKind::Facilitate;
  if (s == "Neutral") return DecisionKind::Neutral;
  throw std::invalid_argument("unknown decision kind '" + s + "'");
}

double Trace::first_injection_t() const {
  double first = 1e9;
  for (const auto& e : events)
    if (e.type == "injection") first = std::min(first, e.t);
  return first;
}

KpiReport compute_kpis(const Trace& trace, GroundTruth ground_truth) {
  if (trace.steps.empty()) throw std::invalid_argument("compute_kpis: empty trace");

  KpiReport k;
  const double dt = trace.dt_sim;

  double dev = 0.0, stress = 0.0, served = 0.0, demanded = 0.0;
  double nadir = trace.steps.front().delta_f;
  for (const auto& s : trace.steps) {
    dev += std::abs(s.delta_f) * dt;
    stress += std::abs(s.p_ess) * dt;
    served += (1.0 - s.shed_fraction) * s.p_load * dt;
    demanded += s.p_load * dt;
    nadir = std::min(nadir, s.delta_f);
  }
  k.freq_dev_area = dev;
  k.ess_stress = stress;
  k.served_fraction = demanded > 0.0 ? served / demanded : 1.0;
  k.nadir = nadir;

  const double t_first = trace.first_injection_t();
  double overshoot = 0.0;
  bool any_after = false;
  for (const auto& s : trace.steps) {
    if (s.t >= t_first) {
      overshoot = any_after ? std::max(overshoot, s.delta_f) : s.delta_f;
      any_after = true;
    }
  }
  k.overshoot = any_after ? overshoot : 0.0;

  int viol = 0;
  for (const auto& h : trace.hops)
    if (std::abs(h.features.rocof) > kRocofViolationLimit) ++viol;
  k.rocof_violations = viol;

  int actions = 0;
  for (const auto& e : trace.events)
    if (e.type == "action") ++actions;
  k.false_trips = ground_truth == GroundTruth::Benign ? actions : 0;

  int missed = 0;
  for (const auto& e : trace.events) {
    if (e.type != "injection" || e.detail != "Fault") continue;
    const double t_f = e.t;
    bool handled = false;
    for (const auto& a : trace.events) {
      if (a.t < t_f || a.t > t_f + kReactionDeadline) continue;
      if (a.type == "breaker_open") handled = true;
      if (a.type == "action" && a.detail.rfind("Shed", 0) == 0) handled = true;
    }
    if (!handled) {
      // A breaker already open when the fault arrives also contains it.
      for (const auto& s : trace.steps) {
        if (s.t > t_f) break;
        handled = !s.breaker_feeder;
      }
    }
    if (!handled) ++missed;
  }
  k.missed_faults = missed;
  return k;
}

}  // namespace nmg
