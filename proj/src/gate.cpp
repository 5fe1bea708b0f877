#include "nmg/gate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nmg {

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::PPI: return "PPI";
    case GateKind::PPF: return "PPF";
    case GateKind::Neutral: return "Neutral";
  }
  return "Neutral";
}

GateFactor gating_factor(const SupervisoryDecision& decision, const GateContext& ctx,
                         const GateParams& gp) {
  GateFactor gf;
  if (ctx.persistence >= gp.p_sat) {
    gf.g = 1.0;
    gf.rationale_kind = GateKind::Neutral;
    return gf;
  }
  double g = 1.0;
  switch (decision.kind) {
    case DecisionKind::Inhibit: g = 1.0 - gp.k_i * decision.c; break;
    case DecisionKind::Facilitate: g = 1.0 + gp.k_f * decision.c; break;
    case DecisionKind::Neutral: g = 1.0; break;
  }
  g = std::min(gp.g_max, std::max(gp.g_min, g));
  gf.g = g;
  gf.rationale_kind =
      g < 1.0 ? GateKind::PPI : (g > 1.0 ? GateKind::PPF : GateKind::Neutral);
  return gf;
}

GatedResponse gate_apply(const ReflexDrive& drive, const SupervisoryDecision& decision,
                         const GateFactor& g) {
  if (std::abs(drive.t - decision.t) > 0.01 + 1e-9)
    throw std::logic_error("gate_apply: drive and decision from different cycles");
  GatedResponse r;
  r.s_out = std::max(0.0, drive.a - decision.i_mag) * g.g;
  r.source_drive = drive;
  r.decision = decision;
  r.g = g;
  return r;
}

SecondaryCommand synthesize_commands(const GatedResponse& resp, const GateParams& gp,
                                     double ess_p_max) {
  SecondaryCommand cmd;
  const double g = resp.g.g;
  switch (resp.g.rationale_kind) {
    case GateKind::Neutral:
      break;
    case GateKind::PPI:
      cmd.trip_threshold_bias = gp.b * (1.0 - g);
      cmd.trip_delay_bias = gp.d * (1.0 - g);
      cmd.shed_desensitize = true;
      cmd.ess_predispatch = 0.0;
      break;
    case GateKind::PPF:
      cmd.trip_threshold_bias = -gp.b * (g - 1.0);
      cmd.trip_delay_bias = -gp.d * (g - 1.0);  // effective delays floor at zero
      cmd.prearm = true;
      cmd.ess_predispatch =
          std::min(ess_p_max, std::max(0.0, resp.s_out * gp.p_ess_max_share * ess_p_max));
      cmd.df_offset = gp.df_gain * resp.s_out;
      cmd.dv_offset = gp.dv_gain * resp.s_out;
      break;
  }
  return cmd;
}

}  // namespace nmg
