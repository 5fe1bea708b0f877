#pragma once

#include <array>
#include <optional>

#include "nmg/plant.hpp"
#include "nmg/telemetry.hpp"

namespace nmg {

enum class Criterion : int {
  SagInstant = 0,
  RoCoFDefiniteTime = 1,
  FreqUnderOver = 2,
  ThdSustained = 3,
};
inline constexpr int kNumCriteria = 4;

const char* criterion_name(Criterion c);

// Per-criterion pickup thresholds and definite-time delays, plus the hard
// limits that bypass any supervisory gating.
struct ReflexLimits {
  double sag_pickup = 0.12;   double sag_delay = 0.0;
  double rocof_pickup = 0.5;  double rocof_delay = 0.12;  // Hz/s, on |rocof|
  double df_pickup = 0.02;    double df_delay = 0.05;
  double thd_pickup = 0.08;   double thd_delay = 0.10;
  double df_hard = 0.05;      // pu, bypasses gating
  double rocof_hard = 5.0;    // Hz/s, bypasses gating

  bool valid() const {
    return df_hard >= df_pickup && rocof_hard >= rocof_pickup && sag_pickup > 0 &&
           rocof_pickup > 0 && df_pickup > 0 && thd_pickup > 0 && sag_delay >= 0 &&
           rocof_delay >= 0 && df_delay >= 0 && thd_delay >= 0;
  }
};

// The immediate protection tendency: magnitude a in [0,1], the fired criteria
// and the proposed action (priority Trip > Shed > VarInject).
struct ReflexDrive {
  double a = 0.0;
  ProtectionAction proposed{};
  std::array<bool, kNumCriteria> criteria_fired{};
  double t = 0.0;

  bool any_fired() const {
    for (bool b : criteria_fired)
      if (b) return true;
    return false;
  }
  int fired_mask() const {
    int m = 0;
    for (int i = 0; i < kNumCriteria; ++i)
      if (criteria_fired[i]) m |= 1 << i;
    return m;
  }
};

// Definite-time relay bank.  Thresholds scale by (1 + trip_threshold_bias)
// and delays shift by trip_delay_bias (floored at zero); timers reset when
// the feature drops below the (biased) pickup.
class ReflexUnit {
 public:
  ReflexDrive evaluate(const FeatureVector& f, const ReflexLimits& lim,
                       const SecondaryCommand& cmd, double t);

  void reset();

 private:
  std::array<bool, kNumCriteria> above_{};
  std::array<double, kNumCriteria> above_since_{};
};

// Hard safety limits: inclusive comparison, independent of any gate state.
std::optional<ProtectionAction> hard_override(const FeatureVector& f,
                                              const ReflexLimits& lim);

}  // namespace nmg
