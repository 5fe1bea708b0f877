#include "nmg/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nmg {

namespace {
double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }
}  // namespace

const char* action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::None: return "None";
    case ActionKind::Trip: return "Trip";
    case ActionKind::Shed: return "Shed";
    case ActionKind::VarInject: return "VarInject";
    case ActionKind::Prearm: return "Prearm";
  }
  return "None";
}

bool PlantParams::valid() const {
  if (!(M > 0.0) || D < 0.0 || !(dt_sim > 0.0)) return false;
  if (!(f0 > 0.0) || !(v0 > 0.0)) return false;
  if (dg_units.empty()) return false;
  for (const auto& u : dg_units) {
    if (!(u.droop_R > 0.0) || u.p_max < 0.0) return false;
  }
  if (ess.p_max < 0.0 || !(ess.e_cap > 0.0)) return false;
  if (ess.soc0 < 0.0 || ess.soc0 > 1.0) return false;
  return true;
}

PlantState make_initial_state(const PlantParams& p) {
  PlantState s;
  s.t = 0.0;
  s.delta_f = 0.0;
  s.v = p.v0;
  s.p_dg.resize(p.dg_units.size());
  for (std::size_t i = 0; i < p.dg_units.size(); ++i) s.p_dg[i] = p.dg_units[i].p_set;
  s.p_ess = 0.0;
  s.soc = p.ess.soc0;
  double load = 0.0;
  for (const auto& u : p.dg_units) load += u.p_set;  // start balanced
  s.p_load = load;
  s.shed_fraction = 0.0;
  s.breaker_closed = {{"feeder", true}};
  s.prearm = false;
  return s;
}

std::vector<double> droop_dispatch(double delta_f, const PlantParams& p,
                                   const SecondaryCommand& cmd) {
  std::vector<double> out(p.dg_units.size());
  for (std::size_t i = 0; i < p.dg_units.size(); ++i) {
    const auto& u = p.dg_units[i];
    out[i] = clamp(u.p_set - (delta_f - cmd.df_offset) / u.droop_R, 0.0, u.p_max);
  }
  return out;
}

PlantState plant_step(const PlantState& s, const PlantParams& p,
                      const SecondaryCommand& cmd, const StepDisturbance& dist) {
  if (!std::isfinite(s.delta_f) || !std::isfinite(s.soc))
    throw std::runtime_error("plant_step: non-finite state (integration blow-up)");

  const double dt = p.dt_sim;
  PlantState n = s;

  n.p_dg = droop_dispatch(s.delta_f, p, cmd);
  double gen = 0.0;
  for (double x : n.p_dg) gen += x;

  // ESS follows its dispatch target through a slew limit, then power and
  // state-of-charge limits.
  double target = clamp(cmd.ess_predispatch, -p.ess.p_max, p.ess.p_max);
  double p_ess = s.p_ess;
  const double max_move = p.ess_slew * dt;
  p_ess += clamp(target - p_ess, -max_move, max_move);
  p_ess = clamp(p_ess, -p.ess.p_max, p.ess.p_max);
  if (p_ess > 0.0) p_ess = std::min(p_ess, s.soc * p.ess.e_cap / dt);          // can't discharge empty
  if (p_ess < 0.0) p_ess = std::max(p_ess, -(1.0 - s.soc) * p.ess.e_cap / dt); // can't charge full
  n.p_ess = p_ess;
  n.soc = clamp(s.soc - p_ess * dt / p.ess.e_cap, 0.0, 1.0);

  // Fault power is carried by the faulted element's breaker.
  double fault_demand = 0.0;
  double fault_sag = 0.0;
  if (dist.fault_severity > 0.0) {
    auto it = s.breaker_closed.find(dist.fault_element);
    const bool fed = (it == s.breaker_closed.end()) ? true : it->second;
    if (fed) {
      fault_demand = dist.fault_severity;
      fault_sag = dist.fault_sag_depth;
    }
  }

  const double load_served = s.p_load * (1.0 - s.shed_fraction);
  const double imbalance = gen + p_ess - load_served - dist.p_imbalance - fault_demand;
  n.delta_f = s.delta_f + dt * (imbalance - p.D * s.delta_f) / p.M;

  n.v = p.v0 + cmd.dv_offset + s.var_support - std::max(dist.sag_depth, fault_sag);
  n.t = s.t + dt;

  // Breakers whose operate time elapsed open at the end of the step.
  for (auto& [el, open_t] : n.pending_open) {
    if (open_t <= n.t + 1e-12) n.breaker_closed[el] = false;
  }
  for (auto it = n.pending_open.begin(); it != n.pending_open.end();) {
    if (!n.breaker_closed[it->first])
      it = n.pending_open.erase(it);
    else
      ++it;
  }

  if (!std::isfinite(n.delta_f) || !std::isfinite(n.v))
    throw std::runtime_error("plant_step: non-finite state (integration blow-up)");
  return n;
}

PlantState apply_protection(const PlantState& s, const PlantParams& p,
                            const ProtectionAction& a) {
  PlantState n = s;
  switch (a.kind) {
    case ActionKind::None:
      break;
    case ActionKind::Trip: {
      auto it = n.breaker_closed.find(a.element);
      if (it == n.breaker_closed.end()) n.breaker_closed[a.element] = true;
      if (n.breaker_closed[a.element] && !n.pending_open.count(a.element)) {
        const double operate =
            n.prearm ? p.breaker_operate_prearmed_s : p.breaker_operate_s;
        n.pending_open[a.element] = n.t + operate;
      }
      break;
    }
    case ActionKind::Shed: {
      if (a.amount < 0.0 || a.amount > 1.0)
        throw std::invalid_argument("apply_protection: shed fraction outside [0,1]");
      // Repeated shedding compounds on the surviving load.
      n.shed_fraction = 1.0 - (1.0 - n.shed_fraction) * (1.0 - a.amount);
      break;
    }
    case ActionKind::VarInject: {
      n.var_support = std::min(0.1, n.var_support + 0.02 * a.amount);
      break;
    }
    case ActionKind::Prearm:
      n.prearm = true;
      break;
  }
  return n;
}

}  // namespace nmg
