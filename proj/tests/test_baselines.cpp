#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "nmg/baselines.hpp"
#include "nmg/rng.hpp"

using namespace nmg;

TEST_SUITE("baselines") {

TEST_CASE("two-pathway activations combine weighted channels and the shortcut") {
  BelState st = BelState::zeros(2);
  st.v_w = {0.3, 0.2};
  st.v_th = 0.1;
  st.w_o = {0.05, 0.0};

  BelInput in;
  in.s = {1.0, 0.5};
  BelActivation act = bel_activations(st, in);
  CHECK(act.a == doctest::Approx(0.5).epsilon(1e-12));   // 0.3 + 0.1 + 0.1
  CHECK(act.o == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(act.e == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(bel_output(st, in) == doctest::Approx(0.45).epsilon(1e-12));

  in.s = {1.0};
  CHECK_THROWS_AS(bel_activations(st, in), std::invalid_argument);
}

TEST_CASE("excitatory weights only grow; the inhibitory path absorbs the excess") {
  BelState st = BelState::zeros(2);
  st.v_w = {0.3, 0.2};
  st.v_th = 0.1;
  st.w_o = {0.05, 0.0};
  BelInput in;
  in.s = {1.0, 0.5};

  // Reinforcement below the excitatory output: excitatory side frozen.
  in.rew = 0.3;
  BelState n = bel_update(st, in, 0.5, 0.45);
  CHECK(n.v_w[0] == 0.3);
  CHECK(n.v_w[1] == 0.2);
  CHECK(n.v_th == 0.1);
  CHECK(n.w_o[0] == doctest::Approx(0.05 + 0.02 * 1.0 * 0.15).epsilon(1e-12));
  CHECK(n.w_o[1] == doctest::Approx(0.02 * 0.5 * 0.15).epsilon(1e-12));

  // Reinforcement above: excitatory weights track up, inhibition relaxes.
  in.rew = 0.8;
  n = bel_update(st, in, 0.5, 0.45);
  CHECK(n.v_w[0] == doctest::Approx(0.3 + 0.05 * 1.0 * 0.3).epsilon(1e-12));
  CHECK(n.v_w[1] == doctest::Approx(0.2 + 0.05 * 0.5 * 0.3).epsilon(1e-12));
  CHECK(n.v_th == doctest::Approx(0.1 + 0.05 * 1.0 * 0.3).epsilon(1e-12));
  CHECK(n.w_o[0] == doctest::Approx(0.05 + 0.02 * 1.0 * (0.45 - 0.8)).epsilon(1e-12));
}

TEST_CASE("excitatory monotonicity holds on random stimulus streams") {
  Rng rng(99);
  BelState st = BelState::zeros(2);
  for (int i = 0; i < 1000; ++i) {
    BelInput in;
    in.s = {rng.unit(), rng.unit()};
    in.rew = rng.uniform(-1.0, 1.0);
    BelActivation act = bel_activations(st, in);
    BelState n = bel_update(st, in, act.a, act.e);
    REQUIRE(n.v_w[0] >= st.v_w[0]);
    REQUIRE(n.v_w[1] >= st.v_w[1]);
    REQUIRE(n.v_th >= st.v_th);
    st = n;
  }
}

TEST_CASE("the pi controller integrates within limits") {
  PiState st;
  PiResult r = pi_step(st, 0.01, 0.1);
  CHECK(r.state.integ == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(r.control == doctest::Approx(0.8 * 0.01 + 4.0 * 0.001).epsilon(1e-12));

  CHECK_THROWS_AS(pi_step(st, 0.01, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pi_step(st, 0.01, -0.1), std::invalid_argument);
}

TEST_CASE("the integrator freezes while the output saturates in the error's direction") {
  PiState st;
  PiResult r = pi_step(st, 0.05, 0.1);  // proportional alone exceeds the limit
  CHECK(r.state.integ == 0.0);
  CHECK(r.control == 0.02);

  // An opposing error integrates immediately: no windup to unwind.
  r = pi_step(r.state, -0.01, 0.1);
  CHECK(r.state.integ == doctest::Approx(-0.001).epsilon(1e-12));
  CHECK(r.control == doctest::Approx(-0.8 * 0.01 - 4.0 * 0.001).epsilon(1e-12));
}

TEST_CASE("saturation in the opposite direction still integrates") {
  PiState st;
  st.integ = 0.01;  // pushes output high
  PiResult r = pi_step(st, -0.001, 0.1);
  // Output saturates high but the error is negative: keep integrating down.
  CHECK(r.state.integ == doctest::Approx(0.0099).epsilon(1e-12));
}

}  // TEST_SUITE
