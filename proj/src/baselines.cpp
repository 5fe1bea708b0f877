#include "nmg/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace nmg {

BelState BelState::zeros(std::size_t channels, double alpha, double beta) {
  BelState st;
  st.v_w.assign(channels, 0.0);
  st.w_o.assign(channels, 0.0);
  st.v_th = 0.0;
  st.alpha = alpha;
  st.beta = beta;
  return st;
}

BelActivation bel_activations(const BelState& st, const BelInput& in) {
  if (in.s.size() != st.v_w.size() || in.s.size() != st.w_o.size())
    throw std::invalid_argument("bel: stimulus/weight size mismatch");
  BelActivation out;
  double smax = 0.0;
  for (std::size_t i = 0; i < in.s.size(); ++i) {
    out.a += st.v_w[i] * in.s[i];
    out.o += st.w_o[i] * in.s[i];
    smax = std::max(smax, in.s[i]);
  }
  out.a += st.v_th * smax;
  out.e = out.a - out.o;
  return out;
}

double bel_output(const BelState& st, const BelInput& in) {
  return bel_activations(st, in).e;
}

BelState bel_update(const BelState& st, const BelInput& in, double a_out, double e_out) {
  if (in.s.size() != st.v_w.size())
    throw std::invalid_argument("bel_update: stimulus/weight size mismatch");
  BelState n = st;
  const double exc = std::max(0.0, in.rew - a_out);
  double smax = 0.0;
  for (double s : in.s) smax = std::max(smax, s);
  for (std::size_t i = 0; i < in.s.size(); ++i) {
    n.v_w[i] += st.alpha * in.s[i] * exc;
    n.w_o[i] += st.beta * in.s[i] * (e_out - in.rew);
  }
  n.v_th += st.alpha * smax * exc;
  return n;
}

PiResult pi_step(const PiState& st, double error, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pi_step: dt must be positive");
  PiResult r;
  r.state = st;
  const double integ_next = st.integ + error * dt;
  const double unclamped = st.kp * error + st.ki * integ_next;
  if ((unclamped > st.out_max && error > 0.0) || (unclamped < st.out_min && error < 0.0)) {
    // Saturating further in the same direction: freeze the integrator.
  } else {
    r.state.integ = integ_next;
  }
  const double u = st.kp * error + st.ki * r.state.integ;
  r.control = std::min(st.out_max, std::max(st.out_min, u));
  return r;
}

}  // namespace nmg
