#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "nmg/num.hpp"
#include "nmg/report.hpp"
#include "nmg/scenario.hpp"

using namespace nmg;

namespace {

std::size_t count_substr(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

bool kpis_equal(const KpiReport& a, const KpiReport& b) {
  return a.freq_dev_area == b.freq_dev_area && a.nadir == b.nadir &&
         a.overshoot == b.overshoot && a.rocof_violations == b.rocof_violations &&
         a.false_trips == b.false_trips && a.missed_faults == b.missed_faults &&
         a.ess_stress == b.ess_stress && a.served_fraction == b.served_fraction;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("numbers survive the shortest-representation round trip bit for bit") {
  const double values[] = {0.1,
                           1.0 / 3.0,
                           1e-17,
                           1e9,
                           -0.0,
                           137.03599908,
                           3.141592653589793,
                           -2.2250738585072014e-308,
                           0.0,
                           42.0};
  for (double x : values) {
    const double back = parse_double(format_double(x));
    CHECK(back == x);
    CHECK(std::signbit(back) == std::signbit(x));
  }

  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("1e"), std::invalid_argument);

  CHECK(parse_int("-42") == -42);
  CHECK_THROWS_AS(parse_int("4.2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_int(""), std::invalid_argument);
}

TEST_CASE("a written trace reloads with its metrics intact") {
  auto suite = generate_ppi_suite(31, 1);
  PolicyState policy = PolicyState::rule_based();
  Trace tr = run_scenario(suite[0], &policy);
  KpiReport k = compute_kpis(tr, tr.ground_truth);

  TempDir dir("nmg_report_roundtrip");
  write_trace(tr, k, dir.path.string(), "csv");

  Trace back = load_trace_csv(dir.path.string(), tr.scenario_name);
  CHECK(back.scenario_name == tr.scenario_name);
  CHECK(back.ground_truth == tr.ground_truth);
  CHECK(back.dt_sim == tr.dt_sim);

  // Re-serialization is byte-identical, so every cell reloaded exactly.
  CHECK(steps_csv(back) == steps_csv(tr));
  CHECK(hops_csv(back) == hops_csv(tr));
  CHECK(events_csv(back) == events_csv(tr));

  // And the reloaded trace reproduces the metrics without any drift.
  KpiReport k2 = compute_kpis(back, back.ground_truth);
  CHECK(kpis_equal(k, k2));
}

TEST_CASE("metric reports round-trip through their serialized form") {
  KpiReport k;
  k.freq_dev_area = 0.0123456789012345;
  k.nadir = -0.004;
  k.overshoot = 0.001;
  k.rocof_violations = 3;
  k.false_trips = 1;
  k.missed_faults = 0;
  k.ess_stress = 0.25;
  k.served_fraction = 0.98;

  Trace tr;
  tr.scenario_name = "kpi_roundtrip";
  tr.ground_truth = GroundTruth::Benign;
  KpiReport back = kpis_from_json(kpis_json(tr, k));
  CHECK(kpis_equal(k, back));
}

TEST_CASE("the drawing lists one polyline per channel plus event markers") {
  auto suite = generate_ppi_suite(31, 1);
  PolicyState policy = PolicyState::rule_based();
  Trace tr = run_scenario(suite[0], &policy);
  const std::string svg = trace_svg(tr);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_substr(svg, "<polyline") >= 4);
  CHECK(count_substr(svg, "</svg>") == 1);
  // At least one dashed event marker: the scenario logs its injection.
  CHECK(count_substr(svg, "stroke-dasharray") >= 1);

  Trace empty;
  CHECK_THROWS_AS(trace_svg(empty), std::invalid_argument);
}

TEST_CASE("the drawing format writes the drawing next to the tables") {
  auto suite = generate_ppi_suite(31, 1);
  Trace tr = run_scenario(suite[0]);
  KpiReport k = compute_kpis(tr, tr.ground_truth);
  TempDir dir("nmg_report_svg");
  write_trace(tr, k, dir.path.string(), "svg");
  CHECK(std::filesystem::exists(dir.path / (tr.scenario_name + ".svg")));
  CHECK(std::filesystem::exists(dir.path / (tr.scenario_name + "_steps.csv")));
  CHECK_THROWS_AS(write_trace(tr, k, dir.path.string(), "yaml"), std::invalid_argument);
}

TEST_CASE("suite summaries average the scenario metrics") {
  KpiReport a;
  a.freq_dev_area = 0.2;
  a.nadir = -0.01;
  a.overshoot = 0.002;
  a.rocof_violations = 1;
  a.false_trips = 1;
  a.ess_stress = 0.1;
  a.served_fraction = 1.0;
  KpiReport b;
  b.freq_dev_area = 0.4;
  b.nadir = -0.03;
  b.overshoot = 0.0;
  b.missed_faults = 2;
  b.ess_stress = 0.3;
  b.served_fraction = 0.9;

  SuiteSummary s = summarize_kpis({a, b});
  CHECK(s.scenarios == 2);
  CHECK(s.mean_freq_dev_area == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s.mean_nadir == doctest::Approx(-0.02).epsilon(1e-12));
  CHECK(s.mean_overshoot == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(s.rocof_violations == 1);
  CHECK(s.false_trips == 1);
  CHECK(s.missed_faults == 2);
  CHECK(s.mean_ess_stress == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.mean_served_fraction == doctest::Approx(0.95).epsilon(1e-12));

  CHECK_THROWS_AS(summarize_kpis({}), std::invalid_argument);

  const std::string js = suite_summary_json(s);
  CHECK(js.find("mean_freq_dev_area") != std::string::npos);
  const std::string cs = suite_summary_csv(s);
  CHECK(cs.find("scenarios") != std::string::npos);
}

TEST_CASE("controller comparisons need two aligned suites and emit difference rows") {
  SuiteSummary s1;
  s1.scenarios = 4;
  s1.false_trips = 0;
  SuiteSummary s2;
  s2.scenarios = 4;
  s2.false_trips = 3;

  std::vector<ControllerSummary> rows{{"sg-nmg", s1}, {"droop-only", s2}};
  const std::string csv = compare_csv(rows);
  CHECK(csv.find("sg-nmg") != std::string::npos);
  CHECK(csv.find("delta(sg-nmg-droop-only)") != std::string::npos);
  const std::string js = compare_json(rows);
  CHECK(js.find("droop-only") != std::string::npos);

  CHECK_THROWS_AS(compare_csv({{"solo", s1}}), std::invalid_argument);
  SuiteSummary s3;
  s3.scenarios = 5;  // misaligned scenario count
  CHECK_THROWS_AS(compare_csv({{"a", s1}, {"b", s3}}), std::invalid_argument);
}

}  // TEST_SUITE
