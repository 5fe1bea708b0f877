#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "nmg/plant.hpp"
#include "nmg/rng.hpp"

using namespace nmg;

namespace {

// Aggregate droop stiffness of the default plant: sum(1/R_i) + D.
double stiffness(const PlantParams& p) {
  double s = p.D;
  for (const auto& u : p.dg_units) s += 1.0 / u.droop_R;
  return s;
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("droop dispatch follows the characteristic and clamps at unit limits") {
  PlantParams p;
  SecondaryCommand cmd;

  auto out = droop_dispatch(-0.005, p, cmd);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.6).epsilon(1e-12));

  out = droop_dispatch(-0.05, p, cmd);  // would demand 1.5; ceiling is 1.0
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 1.0);

  out = droop_dispatch(0.1, p, cmd);  // would demand -1.5; floor is 0.0
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  // A frequency-setpoint bias shifts the operating point, not the shape.
  cmd.df_offset = -0.005;
  out = droop_dispatch(-0.005, p, cmd);
  CHECK(out[0] == 0.5);
  CHECK(out[1] == 0.5);
}

TEST_CASE("settled frequency matches the closed-form droop share for random load steps") {
  PlantParams p;
  const double k = stiffness(p);
  CHECK(k == doctest::Approx(41.0));

  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const double dp = rng.uniform(0.02, 0.075);  // inside DG headroom
    PlantState st = make_initial_state(p);
    st.p_load += dp;
    SecondaryCommand cmd;
    StepDisturbance dist;
    for (int i = 0; i < 3000; ++i) st = plant_step(st, p, cmd, dist);
    const double expect = -dp / k;
    CHECK(std::abs(st.delta_f - expect) < 1e-6);
  }
}

TEST_CASE("the analytic droop equilibrium is a fixed point of the integrator") {
  PlantParams p;
  const double dp = 0.1;
  const double df_star = -dp / stiffness(p);

  PlantState st = make_initial_state(p);
  st.delta_f = df_star;
  st.p_load += dp;
  SecondaryCommand cmd;
  StepDisturbance dist;
  PlantState next = plant_step(st, p, cmd, dist);
  CHECK(std::abs(next.delta_f - df_star) < 1e-15);
}

TEST_CASE("load shedding compounds on the surviving load") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  st = apply_protection(st, p, {ActionKind::Shed, 0.2, "load"});
  CHECK(st.shed_fraction == doctest::Approx(0.2));
  st = apply_protection(st, p, {ActionKind::Shed, 0.2, "load"});
  CHECK(st.shed_fraction == doctest::Approx(0.36).epsilon(1e-12));

  CHECK_THROWS_AS(apply_protection(st, p, {ActionKind::Shed, -0.1, "load"}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_protection(st, p, {ActionKind::Shed, 1.5, "load"}),
                  std::invalid_argument);
}

TEST_CASE("a trip opens the breaker after the operate time") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  st = apply_protection(st, p, {ActionKind::Trip, 0.0, "feeder"});
  REQUIRE(st.pending_open.count("feeder") == 1);
  CHECK(st.pending_open.at("feeder") == doctest::Approx(0.12));

  SecondaryCommand cmd;
  StepDisturbance dist;
  double opened_at = -1.0;
  for (int i = 0; i < 200; ++i) {
    st = plant_step(st, p, cmd, dist);
    if (!st.breaker_closed.at("feeder")) {
      opened_at = st.t;
      break;
    }
  }
  REQUIRE(opened_at > 0.0);
  CHECK(opened_at == doctest::Approx(0.120).epsilon(1e-9));

  // Tripping an already-open breaker is a no-op.
  PlantState again = apply_protection(st, p, {ActionKind::Trip, 0.0, "feeder"});
  CHECK(again.pending_open.empty());
  CHECK(!again.breaker_closed.at("feeder"));
}

TEST_CASE("pre-arming shortens the breaker operate time") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  st = apply_protection(st, p, {ActionKind::Prearm, 0.0, "feeder"});
  CHECK(st.prearm);
  st = apply_protection(st, p, {ActionKind::Trip, 0.0, "feeder"});
  CHECK(st.pending_open.at("feeder") == doctest::Approx(0.02));

  SecondaryCommand cmd;
  StepDisturbance dist;
  double opened_at = -1.0;
  for (int i = 0; i < 50; ++i) {
    st = plant_step(st, p, cmd, dist);
    if (!st.breaker_closed.at("feeder")) {
      opened_at = st.t;
      break;
    }
  }
  CHECK(opened_at == doctest::Approx(0.020).epsilon(1e-9));
}

TEST_CASE("storage ramps at the slew limit toward its dispatch target") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  SecondaryCommand cmd;
  cmd.ess_predispatch = 0.3;
  StepDisturbance dist;

  st = plant_step(st, p, cmd, dist);
  CHECK(st.p_ess == doctest::Approx(p.ess_slew * p.dt_sim).epsilon(1e-12));  // 0.0002

  for (int i = 0; i < 2000; ++i) st = plant_step(st, p, cmd, dist);
  CHECK(st.p_ess == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(st.soc < p.ess.soc0);
  CHECK(st.soc > 0.0);
}

TEST_CASE("storage cannot discharge when empty or charge when full") {
  PlantParams p;
  SecondaryCommand cmd;
  StepDisturbance dist;

  PlantState st = make_initial_state(p);
  st.soc = 0.0;
  cmd.ess_predispatch = 0.3;
  st = plant_step(st, p, cmd, dist);
  CHECK(st.p_ess == 0.0);
  CHECK(st.soc == 0.0);

  st = make_initial_state(p);
  st.soc = 1.0;
  cmd.ess_predispatch = -0.3;
  st = plant_step(st, p, cmd, dist);
  CHECK(st.p_ess == 0.0);
  CHECK(st.soc == 1.0);
}

TEST_CASE("charging raises the state of charge") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  SecondaryCommand cmd;
  cmd.ess_predispatch = -0.3;
  StepDisturbance dist;
  for (int i = 0; i < 2000; ++i) st = plant_step(st, p, cmd, dist);
  CHECK(st.p_ess == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(st.soc > p.ess.soc0);
}

TEST_CASE("var injection boosts voltage with a hard cap") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  st = apply_protection(st, p, {ActionKind::VarInject, 1.0, "bus"});
  CHECK(st.var_support == doctest::Approx(0.02));
  for (int i = 0; i < 10; ++i)
    st = apply_protection(st, p, {ActionKind::VarInject, 1.0, "bus"});
  CHECK(st.var_support == doctest::Approx(0.1));  // saturates
}

TEST_CASE("fault power flows only while the faulted breaker is closed") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  SecondaryCommand cmd;
  StepDisturbance dist;
  dist.fault_severity = 0.4;
  dist.fault_sag_depth = 0.3;

  PlantState fed = plant_step(st, p, cmd, dist);
  CHECK(fed.delta_f < 0.0);
  CHECK(fed.v == doctest::Approx(0.7));

  st.breaker_closed["feeder"] = false;
  PlantState isolated = plant_step(st, p, cmd, dist);
  CHECK(isolated.delta_f == 0.0);
  CHECK(isolated.v == doctest::Approx(1.0));
}

TEST_CASE("a balanced plant stays exactly at nominal") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  SecondaryCommand cmd;
  StepDisturbance dist;
  for (int i = 0; i < 100; ++i) st = plant_step(st, p, cmd, dist);
  CHECK(st.delta_f == 0.0);
  CHECK(st.v == 1.0);
}

TEST_CASE("non-finite states are rejected") {
  PlantParams p;
  PlantState st = make_initial_state(p);
  st.delta_f = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(plant_step(st, p, {}, {}), std::runtime_error);
}

TEST_CASE("parameter validation catches nonsense configurations") {
  PlantParams p;
  CHECK(p.valid());
  p.M = 0.0;
  CHECK(!p.valid());
  p = PlantParams{};
  p.dg_units.clear();
  CHECK(!p.valid());
  p = PlantParams{};
  p.dg_units[0].droop_R = 0.0;
  CHECK(!p.valid());
  p = PlantParams{};
  p.ess.soc0 = 1.5;
  CHECK(!p.valid());
}

}  // TEST_SUITE
