#pragma once

#include <string>
#include <vector>

#include "nmg/trace.hpp"

namespace nmg {

// CSV emitters.  Every floating-point cell uses the shortest representation
// that parses back to the identical double, so a written trace reloads bit
// for bit.
std::string steps_csv(const Trace& tr);
std::string hops_csv(const Trace& tr);
std::string events_csv(const Trace& tr);

// KPI report plus the trace metadata needed to recompute it from the CSVs.
std::string kpis_json(const Trace& tr, const KpiReport& k);
KpiReport kpis_from_json(const std::string& text);

// Stacked time-series panels (frequency deviation, voltage, gate state) with
// event markers.
std::string trace_svg(const Trace& tr);

// Writes <name>_steps.csv, <name>_hops.csv, <name>_events.csv and
// <name>_kpis.json under dir; format "svg" additionally writes <name>.svg,
// format "json" skips nothing (CSV files are always produced).
void write_trace(const Trace& tr, const KpiReport& k, const std::string& dir,
                 const std::string& format);

// Rebuilds the trace written by write_trace; numeric fields reload exactly.
Trace load_trace_csv(const std::string& dir, const std::string& name);

struct SuiteSummary {
  int scenarios = 0;
  double mean_freq_dev_area = 0.0;
  double mean_nadir = 0.0;
  double mean_overshoot = 0.0;
  int rocof_violations = 0;
  int false_trips = 0;
  int missed_faults = 0;
  double mean_ess_stress = 0.0;
  double mean_served_fraction = 1.0;
};

SuiteSummary summarize_kpis(const std::vector<KpiReport>& kpis);
std::string suite_summary_json(const SuiteSummary& s);
std::string suite_summary_csv(const SuiteSummary& s);

struct ControllerSummary {
  std::string controller;
  SuiteSummary summary;
};

// Side-by-side table plus pairwise difference rows.  Requires at least two
// controllers over the same scenario count; throws std::invalid_argument
// otherwise.
std::string compare_csv(const std::vector<ControllerSummary>& rows);
std::string compare_json(const std::vector<ControllerSummary>& rows);

}  // namespace nmg
