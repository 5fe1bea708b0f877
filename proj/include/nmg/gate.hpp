#pragma once

#include "nmg/plant.hpp"
#include "nmg/reflex.hpp"
#include "nmg/supervisor.hpp"

namespace nmg {

enum class GateKind { PPI, PPF, Neutral };
const char* gate_kind_name(GateKind k);

struct GateParams {
  double k_i = 1.0;  // inhibition gain: g = 1 - k_i * c
  double k_f = 1.0;  // facilitation gain: g = 1 + k_f * c
  double g_min = 0.0;
  double g_max = 2.0;
  int p_sat = 5;  // persistence at which gating is forced Neutral

  // Command synthesis shape.
  double b = 0.5;    // threshold-bias scale
  double d = 0.05;   // s, delay-bias scale
  double p_ess_max_share = 0.5;
  double df_gain = 0.0002;  // pu frequency-setpoint bias per unit of s_out
  double dv_gain = 0.002;   // pu voltage bias per unit of s_out
};

struct GateFactor {
  double g = 1.0;
  GateKind rationale_kind = GateKind::Neutral;
};

struct GateContext {
  int persistence = 0;
  double t_since_precursor = FeatureVector::kNoPrecursor;
};

struct GatedResponse {
  double s_out = 0.0;  // max(0, a - i_mag) * g
  ReflexDrive source_drive;
  SupervisoryDecision decision;
  GateFactor g;
};

// Multiplicative gate factor from the supervisory decision.  A long-persisting
// event is no longer a prepulse: persistence >= p_sat forces Neutral.
GateFactor gating_factor(const SupervisoryDecision& decision, const GateContext& ctx,
                         const GateParams& gp);

// S_out = max(0, a - i_mag) * g.  Drive and decision must come from the same
// decision cycle (timestamps within one hop), else std::logic_error.
GatedResponse gate_apply(const ReflexDrive& drive, const SupervisoryDecision& decision,
                         const GateFactor& g);

// Translates the gated response into the secondary command: damping raises
// protection thresholds/delays and desensitizes shedding; amplification
// lowers them, pre-arms breakers and pre-dispatches storage.
SecondaryCommand synthesize_commands(const GatedResponse& resp, const GateParams& gp,
                                     double ess_p_max);

}  // namespace nmg
