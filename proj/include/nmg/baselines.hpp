#pragma once

#include <vector>

namespace nmg {

// Two-pathway learning controller: an excitatory pathway (with a shortcut on
// the strongest stimulus channel) that only ever strengthens, and a learned
// inhibitory pathway that trims its excess against the reinforcement signal.
struct BelState {
  std::vector<double> v_w;  // excitatory weights per stimulus channel
  double v_th = 0.0;        // shortcut weight on the max channel
  std::vector<double> w_o;  // inhibitory weights per channel
  double alpha = 0.05;      // excitatory learning rate
  double beta = 0.02;       // inhibitory learning rate

  static BelState zeros(std::size_t channels, double alpha = 0.05, double beta = 0.02);
};

struct BelInput {
  std::vector<double> s;  // non-negative stimulus channels
  double rew = 0.0;       // reinforcement signal
};

struct BelActivation {
  double a = 0.0;  // excitatory output: sum v_w*s + v_th*max(s)
  double o = 0.0;  // inhibitory output: sum w_o*s
  double e = 0.0;  // control value: a - o
};

BelActivation bel_activations(const BelState& st, const BelInput& in);
double bel_output(const BelState& st, const BelInput& in);

// dv_w_i = alpha*s_i*max(0, rew - a_out); dw_o_i = beta*s_i*(e_out - rew).
// The max(0,.) floor keeps the excitatory weights monotone non-decreasing.
BelState bel_update(const BelState& st, const BelInput& in, double a_out, double e_out);

struct PiState {
  double kp = 0.8;
  double ki = 4.0;
  double integ = 0.0;
  double out_min = -0.02;
  double out_max = 0.02;
};

// Standard PI step with clamping anti-windup (the integrator freezes while
// the output is saturated in the error's direction).
struct PiResult {
  double control = 0.0;
  PiState state;
};
PiResult pi_step(const PiState& st, double error, double dt);

}  // namespace nmg
