#include "nmg/reflex.hpp"

#include <algorithm>
#include <cmath>

namespace nmg {

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::SagInstant: return "SagInstant";
    case Criterion::RoCoFDefiniteTime: return "RoCoFDefiniteTime";
    case Criterion::FreqUnderOver: return "FreqUnderOver";
    case Criterion::ThdSustained: return "ThdSustained";
  }
  return "SagInstant";
}

void ReflexUnit::reset() {
  above_.fill(false);
  above_since_.fill(0.0);
}

ReflexDrive ReflexUnit::evaluate(const FeatureVector& f, const ReflexLimits& lim,
                                 const SecondaryCommand& cmd, double t) {
  struct Entry {
    Criterion c;
    double feature;
    double pickup;
    double delay;
  };
  const std::array<Entry, kNumCriteria> entries{{
      {Criterion::SagInstant, f.sag_depth, lim.sag_pickup, lim.sag_delay},
      {Criterion::RoCoFDefiniteTime, std::abs(f.rocof), lim.rocof_pickup, lim.rocof_delay},
      {Criterion::FreqUnderOver, f.df_mag, lim.df_pickup, lim.df_delay},
      {Criterion::ThdSustained, f.thd, lim.thd_pickup, lim.thd_delay},
  }};

  ReflexDrive d;
  d.t = t;
  for (const auto& e : entries) {
    const int i = static_cast<int>(e.c);
    const double eff_pickup = std::max(1e-9, e.pickup * (1.0 + cmd.trip_threshold_bias));
    const double eff_delay = std::max(0.0, e.delay + cmd.trip_delay_bias);
    if (e.feature > eff_pickup) {
      if (!above_[i]) {
        above_[i] = true;
        above_since_[i] = t;
      }
      if (t - above_since_[i] >= eff_delay - 1e-12) {
        d.criteria_fired[i] = true;
        const double severity = std::min(1.0, e.feature / eff_pickup - 1.0);
        d.a = std::max(d.a, severity);
      }
    } else {
      above_[i] = false;
    }
  }

  if (d.criteria_fired[static_cast<int>(Criterion::RoCoFDefiniteTime)]) {
    d.proposed = ProtectionAction{ActionKind::Trip, 0.0, "feeder"};
  } else if (d.criteria_fired[static_cast<int>(Criterion::FreqUnderOver)]) {
    d.proposed = ProtectionAction{ActionKind::Shed, 0.1, "load"};
  } else if (d.criteria_fired[static_cast<int>(Criterion::SagInstant)] ||
             d.criteria_fired[static_cast<int>(Criterion::ThdSustained)]) {
    d.proposed = ProtectionAction{ActionKind::VarInject, d.a, "bus"};
  }
  return d;
}

std::optional<ProtectionAction> hard_override(const FeatureVector& f,
                                              const ReflexLimits& lim) {
  if (f.df_mag >= lim.df_hard || std::abs(f.rocof) >= lim.rocof_hard)
    return ProtectionAction{ActionKind::Trip, 0.0, "feeder"};
  return std::nullopt;
}

}  // namespace nmg
