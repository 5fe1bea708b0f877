#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nmg/rng.hpp"
#include "nmg/telemetry.hpp"

using namespace nmg;

namespace {

// Point-on-wave window with a unit fundamental plus the given harmonics,
// matching the sampling convention of the telemetry unit.
std::vector<double> make_wave(const std::vector<HarmonicTone>& tones,
                              double pow_rate = 1e4, double f0 = 50.0,
                              std::size_t n = 1000) {
  std::vector<double> x(n);
  const double w1 = 2.0 * std::numbers::pi * f0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k + 1) / pow_rate;
    double s = std::sin(w1 * t);
    for (const auto& tone : tones)
      s += tone.amplitude * std::sin(w1 * static_cast<double>(tone.order) * t);
    x[k] = s;
  }
  return x;
}

TelemetryUnit make_unit() { return TelemetryUnit(TelemetryCfg{}, Thresholds{}); }

void push_n(TelemetryUnit& u, int n, double delta_f, double v,
            const std::vector<HarmonicTone>& tones = {}) {
  for (int i = 0; i < n; ++i) u.push_step(delta_f, v, tones);
}

}  // namespace

TEST_SUITE("telemetry") {

TEST_CASE("harmonic distortion of synthesized mixes matches the analytic ratio") {
  // Single third harmonic at 10% of the fundamental.
  auto x = make_wave({{3, 0.1}});
  CHECK(std::abs(thd_ratio(x, 1e4, 50.0) - 0.1) < 1e-9);

  // Quadrature sum of independent harmonics.
  x = make_wave({{5, 0.08}, {7, 0.06}});
  CHECK(std::abs(thd_ratio(x, 1e4, 50.0) - 0.1) < 1e-9);

  // Pure fundamental has no distortion.
  x = make_wave({});
  CHECK(thd_ratio(x, 1e4, 50.0) < 1e-12);

  // Randomized mixes across orders and amplitudes.
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<HarmonicTone> tones;
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      HarmonicTone t;
      t.order = 2 + static_cast<int>(rng.pick(22));  // 2..23
      bool dup = false;
      for (const auto& u : tones) dup = dup || u.order == t.order;
      if (dup) continue;
      t.amplitude = rng.uniform(0.01, 0.2);
      acc += t.amplitude * t.amplitude;
      tones.push_back(t);
    }
    auto w = make_wave(tones);
    CHECK(std::abs(thd_ratio(w, 1e4, 50.0) - std::sqrt(acc)) < 1e-9);
  }
}

TEST_CASE("distortion rejects windows without an integer number of cycles") {
  auto x = make_wave({}, 1e4, 50.0, 1000);
  CHECK_THROWS_AS(thd_ratio(x, 1e4, 50.5), std::invalid_argument);
  std::vector<double> zeros(1000, 0.0);
  CHECK_THROWS_AS(thd_ratio(zeros, 1e4, 50.0), std::domain_error);
  CHECK_THROWS_AS(thd_ratio({}, 1e4, 50.0), std::invalid_argument);
}

TEST_CASE("frequency slope is exact on affine ramps") {
  // Dyadic time grid and slope keep every intermediate value representable.
  std::deque<TelemetryFrame> frames;
  for (int k = 0; k < 10; ++k) {
    TelemetryFrame fr;
    fr.t = k * 0.015625;
    fr.f = 50.0 + 4.0 * fr.t;
    frames.push_back(fr);
  }
  CHECK(std::abs(rocof_slope(frames) - 4.0) < 1e-12);

  // Realistic 10 ms hop grid.
  frames.clear();
  for (int k = 0; k < 10; ++k) {
    TelemetryFrame fr;
    fr.t = k * 0.01;
    fr.f = 50.0 - 3.7 * fr.t;
    frames.push_back(fr);
  }
  CHECK(std::abs(rocof_slope(frames) + 3.7) < 1e-9);

  // Constant frequency has zero slope.
  for (auto& fr : frames) fr.f = 50.0;
  CHECK(rocof_slope(frames) == 0.0);

  frames.resize(1);
  CHECK_THROWS_AS(rocof_slope(frames), std::invalid_argument);
}

TEST_CASE("sag depth and duration follow the voltage history") {
  TelemetryUnit u = make_unit();
  push_n(u, 60, 0.0, 0.9);
  u.sample(0.06);
  FeatureVector f = u.extract_features();
  CHECK(f.sag_depth == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(f.sag_duration == doctest::Approx(0.06).epsilon(1e-9));

  // After recovery the duration is held while the window still shows the dip...
  push_n(u, 20, 0.0, 1.0);
  u.sample(0.08);
  f = u.extract_features();
  CHECK(f.sag_depth == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(f.sag_duration == doctest::Approx(0.06).epsilon(1e-9));

  // ...and cleared once the dip leaves the window entirely.
  push_n(u, 120, 0.0, 1.0);
  u.sample(0.2);
  f = u.extract_features();
  CHECK(f.sag_depth == 0.0);
  CHECK(f.sag_duration == 0.0);
}

TEST_CASE("frequency deviation magnitude is the window maximum") {
  TelemetryUnit u = make_unit();
  push_n(u, 10, 0.003, 1.0);
  u.sample(0.01);
  FeatureVector f = u.extract_features();
  CHECK(f.df_mag == doctest::Approx(0.003).epsilon(1e-12));

  push_n(u, 10, 0.001, 1.0);
  u.sample(0.02);
  f = u.extract_features();
  CHECK(f.df_mag == doctest::Approx(0.003).epsilon(1e-12));  // still in window
}

TEST_CASE("persistence counts whole windows of continuous event activity") {
  TelemetryUnit u = make_unit();
  FeatureVector f;
  for (int hop = 1; hop <= 20; ++hop) {
    push_n(u, 10, 0.0, 0.9);
    u.sample(hop * 0.01);
    f = u.extract_features();
  }
  CHECK(f.persistence == 2);  // 20 hops = 2 whole windows

  for (int hop = 21; hop <= 32; ++hop) {
    push_n(u, 10, 0.0, 1.0);
    u.sample(hop * 0.01);
    f = u.extract_features();
  }
  CHECK(f.persistence == 0);  // reset after the quiet window
}

TEST_CASE("a full window of harmonic injection measures its exact distortion") {
  TelemetryUnit u = make_unit();
  push_n(u, 100, 0.0, 1.0, {{3, 0.1}});
  u.sample(0.1);
  FeatureVector f = u.extract_features();
  CHECK(std::abs(f.thd - 0.1) < 1e-9);
}

TEST_CASE("a quiescent unit measures zero everywhere") {
  TelemetryUnit u = make_unit();
  push_n(u, 10, 0.0, 1.0);
  u.sample(0.01);
  FeatureVector f = u.extract_features();
  CHECK(f.sag_depth == 0.0);
  CHECK(f.sag_duration == 0.0);
  CHECK(f.df_mag == 0.0);
  CHECK(f.thd < 1e-12);
  CHECK(std::abs(f.rocof) < 1e-12);
  CHECK(f.persistence == 0);
  CHECK(f.t_since_precursor == FeatureVector::kNoPrecursor);
}

TEST_CASE("event detection classifies by feature and suppresses fault-level magnitudes") {
  TelemetryUnit u = make_unit();

  FeatureVector quiet;
  CHECK(!u.detect_event(quiet, 0.5).has_value());

  FeatureVector sag;
  sag.sag_depth = 0.1;
  auto ev = u.detect_event(sag, 0.5);
  REQUIRE(ev.has_value());
  CHECK(ev->kind == PrecursorKind::Sag);
  CHECK(ev->t_detect == 0.5);

  FeatureVector burst;
  burst.thd = 0.1;
  ev = u.detect_event(burst, 0.6);
  REQUIRE(ev.has_value());
  CHECK(ev->kind == PrecursorKind::HarmonicBurst);

  FeatureVector fluct;
  fluct.df_mag = 0.02;
  ev = u.detect_event(fluct, 0.7);
  REQUIRE(ev.has_value());
  CHECK(ev->kind == PrecursorKind::LoadFluctuation);

  // Sag dominates the tie-break when several features cross.
  FeatureVector both;
  both.sag_depth = 0.1;
  both.thd = 0.1;
  ev = u.detect_event(both, 0.8);
  REQUIRE(ev.has_value());
  CHECK(ev->kind == PrecursorKind::Sag);

  // Fault-level magnitudes are the pulse itself, not a precursor.
  FeatureVector major;
  major.sag_depth = 0.35;
  CHECK(!u.detect_event(major, 0.9).has_value());

  // Thresholds are strict: exactly at the precursor level does not flag.
  FeatureVector edge;
  edge.sag_depth = 0.05;
  CHECK(!u.detect_event(edge, 1.0).has_value());
}

TEST_CASE("time since the last precursor is tracked through the frame clock") {
  TelemetryUnit u = make_unit();
  push_n(u, 10, 0.0, 0.9);
  u.sample(0.01);
  FeatureVector f = u.extract_features();
  auto ev = u.detect_event(f, 0.01);
  REQUIRE(ev.has_value());

  push_n(u, 10, 0.0, 0.9);
  u.sample(0.02);
  f = u.extract_features();
  CHECK(f.t_since_precursor == doctest::Approx(0.01).epsilon(1e-12));
}

}  // TEST_SUITE
