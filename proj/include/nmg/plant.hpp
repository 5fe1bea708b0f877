#pragma once

#include <map>
#include <string>
#include <vector>

namespace nmg {

struct DgUnit {
  double p_set = 0.5;    // pu power setpoint
  double p_max = 1.0;    // pu ceiling
  double droop_R = 0.05; // pu frequency per pu power
};

struct EssParams {
  double p_max = 0.3;  // pu charge/discharge limit
  double e_cap = 2.0;  // pu·s energy capacity
  double soc0 = 0.5;   // initial state of charge, fraction
};

struct PlantParams {
  double f0 = 50.0;  // Hz
  double M = 8.0;    // aggregate inertia, pu·s
  double D = 1.0;    // load damping, pu per pu frequency
  std::vector<DgUnit> dg_units{{0.5, 1.0, 0.05}, {0.5, 1.0, 0.05}};
  EssParams ess{};
  double v0 = 1.0;      // pu nominal voltage
  double dt_sim = 1e-3; // s

  // Actuator characteristics (engineering defaults; not part of the control
  // laws themselves).  Pre-arming shortens the breaker operate time; the ESS
  // converter ramps toward its dispatch target at a bounded rate so that the
  // plant's own storage actions cannot masquerade as a system disturbance.
  double breaker_operate_s = 0.12;
  double breaker_operate_prearmed_s = 0.02;
  double ess_slew = 0.2;  // pu per second

  bool valid() const;
};

// Supervisory bias channels through which every secondary-layer controller
// touches the plant.  All-default means "hands off": the primary loop alone.
struct SecondaryCommand {
  double df_offset = 0.0;         // pu frequency setpoint bias
  double dv_offset = 0.0;         // pu voltage bias
  double ess_predispatch = 0.0;   // pu, positive = discharge
  double trip_threshold_bias = 0.0;  // signed scale on protection pickups
  double trip_delay_bias = 0.0;      // s added to definite-time delays
  bool prearm = false;
  bool shed_desensitize = false;
};

enum class ActionKind { None, Trip, Shed, VarInject, Prearm };

const char* action_kind_name(ActionKind k);

struct ProtectionAction {
  ActionKind kind = ActionKind::None;
  double amount = 0.0;  // Shed: fraction of remaining load; VarInject: drive magnitude
  std::string element = "feeder";
};

struct PlantState {
  double t = 0.0;
  double delta_f = 0.0;  // pu frequency deviation
  double v = 1.0;        // pu bus voltage magnitude
  std::vector<double> p_dg;
  double p_ess = 0.0;  // pu, positive = discharge
  double soc = 0.5;
  double p_load = 1.0;
  double shed_fraction = 0.0;
  std::map<std::string, bool> breaker_closed{{"feeder", true}};
  bool prearm = false;

  double var_support = 0.0;  // voltage boost latched by VarInject actions
  std::map<std::string, double> pending_open;  // element -> absolute open time
};

// Disturbance view of one integration step, already resolved from the
// scenario timeline.  Fault power flows through the named element's breaker
// and disappears once that breaker opens.
struct StepDisturbance {
  double p_imbalance = 0.0;      // pu extra demand not routed through a breaker
  double sag_depth = 0.0;        // pu bus voltage depression (non-fault)
  double fault_severity = 0.0;   // pu extra demand on the faulted element
  double fault_sag_depth = 0.0;  // pu voltage depression while the fault is fed
  std::string fault_element = "feeder";
};

PlantState make_initial_state(const PlantParams& p);

// Droop characteristic: p_i = clamp(p_set_i - (delta_f - df_offset)/R_i, 0, p_max_i).
std::vector<double> droop_dispatch(double delta_f, const PlantParams& p,
                                   const SecondaryCommand& cmd);

// One explicit-Euler step of the swing equation
//   M d(delta_f)/dt = sum p_dg + p_ess - p_load(1 - shed) - disturbances - D delta_f
// with algebraic voltage v = v0 + dv_offset + var_support - sag.
// Throws std::runtime_error if the state has gone non-finite.
PlantState plant_step(const PlantState& s, const PlantParams& p,
                      const SecondaryCommand& cmd, const StepDisturbance& dist);

// Breaker / shed / var / prearm actuation.  Trip on an already-open breaker is
// a no-op; Shed outside [0,1] is rejected with std::invalid_argument.
PlantState apply_protection(const PlantState& s, const PlantParams& p,
                            const ProtectionAction& a);

}  // namespace nmg
