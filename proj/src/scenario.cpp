#include "nmg/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "nmg/rng.hpp"

namespace nmg {

namespace {

using nlohmann::json;

double clampd(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

std::string index_name(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
  return buf;
}

// Voltage depression carried by a fed fault, deep enough to read as the major
// event itself rather than a precursor.
double fault_sag_of(double severity) {
  return std::min(0.6, 0.3 + 0.4 * severity);
}

}  // namespace

const char* injection_kind_name(InjectionKind k) {
  switch (k) {
    case InjectionKind::LoadStep: return "LoadStep";
    case InjectionKind::Sag: return "Sag";
    case InjectionKind::HarmonicBurst: return "HarmonicBurst";
    case InjectionKind::Fault: return "Fault";
    case InjectionKind::Islanding: return "Islanding";
  }
  return "LoadStep";
}

InjectionKind injection_kind_from_name(const std::string& s) {
  if (s == "LoadStep") return InjectionKind::LoadStep;
  if (s == "Sag") return InjectionKind::Sag;
  if (s == "HarmonicBurst") return InjectionKind::HarmonicBurst;
  if (s == "Fault") return InjectionKind::Fault;
  if (s == "Islanding") return InjectionKind::Islanding;
  throw std::invalid_argument("unknown injection kind '" + s + "'");
}

const char* controller_kind_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::SgNmg: return "sg-nmg";
    case ControllerKind::DroopOnly: return "droop-only";
    case ControllerKind::Bel: return "bel";
    case ControllerKind::Pi: return "pi";
  }
  return "sg-nmg";
}

ControllerKind controller_kind_from_name(const std::string& s) {
  if (s == "sg-nmg") return ControllerKind::SgNmg;
  if (s == "droop-only") return ControllerKind::DroopOnly;
  if (s == "bel") return ControllerKind::Bel;
  if (s == "pi") return ControllerKind::Pi;
  throw std::invalid_argument("unknown controller '" + s +
                              "' (expected sg-nmg|bel|pi|droop-only)");
}

const char* forced_decision_name(ForcedDecision f) {
  switch (f) {
    case ForcedDecision::Unforced: return "none";
    case ForcedDecision::Neutral: return "neutral";
    case ForcedDecision::Inhibit: return "inhibit";
    case ForcedDecision::Facilitate: return "facilitate";
  }
  return "none";
}

ForcedDecision forced_decision_from_name(const std::string& s) {
  if (s == "none") return ForcedDecision::Unforced;
  if (s == "neutral") return ForcedDecision::Neutral;
  if (s == "inhibit") return ForcedDecision::Inhibit;
  if (s == "facilitate") return ForcedDecision::Facilitate;
  throw std::invalid_argument("unknown forced decision '" + s + "'");
}

std::vector<ScenarioInjection> ScenarioSpec::flattened() const {
  std::vector<ScenarioInjection> out;
  for (const auto& entry : timeline) {
    if (std::holds_alternative<ScenarioInjection>(entry)) {
      out.push_back(std::get<ScenarioInjection>(entry));
    } else {
      const auto& pair = std::get<PrepulsePulsePair>(entry);
      out.push_back(pair.prepulse);
      if (pair.pulse) out.push_back(*pair.pulse);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScenarioInjection& a, const ScenarioInjection& b) {
                     return a.t_start < b.t_start;
                   });
  return out;
}

GroundTruth ScenarioSpec::ground_truth() const {
  for (const auto& in : flattened())
    if (in.kind == InjectionKind::Fault || in.kind == InjectionKind::Islanding)
      return GroundTruth::Harmful;
  return GroundTruth::Benign;
}

void ScenarioSpec::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument(name + ": duration must be positive");
  if (!plant.valid()) throw std::invalid_argument(name + ": invalid plant parameters");
  if (!reflex.valid()) throw std::invalid_argument(name + ": invalid protection limits");
  if (!(thresholds.sag_precursor < thresholds.sag_fault &&
        thresholds.thd_precursor < thresholds.thd_fault &&
        thresholds.rocof_precursor < thresholds.rocof_fault &&
        thresholds.df_precursor < thresholds.df_fault))
    throw std::invalid_argument(name + ": precursor thresholds must sit below fault levels");
  if (!(gate.g_min <= 1.0 && 1.0 <= gate.g_max))
    throw std::invalid_argument(name + ": gate range must bracket 1");
  if (gate.p_sat < 1) throw std::invalid_argument(name + ": p_sat must be >= 1");
  const double sp_hops = secondary_period / kHop;
  if (!(secondary_period > 0.0) || std::abs(sp_hops - std::round(sp_hops)) > 1e-9)
    throw std::invalid_argument(name + ": secondary_period must be a multiple of the hop");

  auto check_injection = [this](const ScenarioInjection& in) {
    if (in.t_start < 0.0 || in.t_start > duration)
      throw std::invalid_argument(name + ": injection outside [0, duration]");
    switch (in.kind) {
      case InjectionKind::Sag:
        if (!(in.depth > 0.0) || !(in.duration > 0.0))
          throw std::invalid_argument(name + ": sag needs positive depth and duration");
        break;
      case InjectionKind::HarmonicBurst:
        if (in.order < 2 || !(in.amplitude > 0.0) || !(in.duration > 0.0))
          throw std::invalid_argument(name + ": burst needs order >= 2, amplitude, duration");
        break;
      case InjectionKind::Fault:
        if (!(in.severity > 0.0))
          throw std::invalid_argument(name + ": fault needs positive severity");
        break;
      case InjectionKind::LoadStep:
      case InjectionKind::Islanding:
        break;
    }
  };

  for (const auto& entry : timeline) {
    if (std::holds_alternative<ScenarioInjection>(entry)) {
      check_injection(std::get<ScenarioInjection>(entry));
      continue;
    }
    const auto& pair = std::get<PrepulsePulsePair>(entry);
    check_injection(pair.prepulse);
    if (pair.ground_truth == GroundTruth::Benign) {
      if (pair.pulse)
        throw std::invalid_argument(name + ": benign pair must not carry a pulse");
    } else {
      if (!pair.pulse)
        throw std::invalid_argument(name + ": harmful pair needs a pulse");
      check_injection(*pair.pulse);
      if (!(pair.delta_t > 0.0) ||
          std::abs(pair.pulse->t_start - (pair.prepulse.t_start + pair.delta_t)) > 1e-9)
        throw std::invalid_argument(name +
                                    ": pulse must start delta_t after the prepulse");
    }
  }
}

namespace {

json injection_to_json(const ScenarioInjection& in) {
  json j;
  j["kind"] = injection_kind_name(in.kind);
  j["t_start"] = in.t_start;
  switch (in.kind) {
    case InjectionKind::LoadStep:
      j["dp"] = in.dp;
      break;
    case InjectionKind::Sag:
      j["depth"] = in.depth;
      j["duration"] = in.duration;
      break;
    case InjectionKind::HarmonicBurst:
      j["order"] = in.order;
      j["amplitude"] = in.amplitude;
      j["duration"] = in.duration;
      break;
    case InjectionKind::Fault:
      j["severity"] = in.severity;
      j["element"] = in.element;
      break;
    case InjectionKind::Islanding:
      break;
  }
  return j;
}

ScenarioInjection injection_from_json(const json& j) {
  ScenarioInjection in;
  in.kind = injection_kind_from_name(j.at("kind").get<std::string>());
  in.t_start = j.at("t_start").get<double>();
  in.dp = j.value("dp", 0.0);
  in.depth = j.value("depth", 0.0);
  in.duration = j.value("duration", 0.0);
  in.order = j.value("order", 3);
  in.amplitude = j.value("amplitude", 0.0);
  in.severity = j.value("severity", 0.0);
  in.element = j.value("element", std::string("feeder"));
  return in;
}

json plant_to_json(const PlantParams& p) {
  json units = json::array();
  for (const auto& u : p.dg_units)
    units.push_back({{"p_set", u.p_set}, {"p_max", u.p_max}, {"droop_R", u.droop_R}});
  return {{"f0", p.f0},
          {"M", p.M},
          {"D", p.D},
          {"dg_units", units},
          {"ess", {{"p_max", p.ess.p_max}, {"e_cap", p.ess.e_cap}, {"soc0", p.ess.soc0}}},
          {"v0", p.v0},
          {"dt_sim", p.dt_sim},
          {"breaker_operate_s", p.breaker_operate_s},
          {"breaker_operate_prearmed_s", p.breaker_operate_prearmed_s},
          {"ess_slew", p.ess_slew}};
}

PlantParams plant_from_json(const json& j) {
  PlantParams p;
  p.f0 = j.value("f0", p.f0);
  p.M = j.value("M", p.M);
  p.D = j.value("D", p.D);
  if (j.contains("dg_units")) {
    p.dg_units.clear();
    for (const auto& u : j.at("dg_units")) {
      DgUnit d;
      d.p_set = u.value("p_set", d.p_set);
      d.p_max = u.value("p_max", d.p_max);
      d.droop_R = u.value("droop_R", d.droop_R);
      p.dg_units.push_back(d);
    }
  }
  if (j.contains("ess")) {
    const auto& e = j.at("ess");
    p.ess.p_max = e.value("p_max", p.ess.p_max);
    p.ess.e_cap = e.value("e_cap", p.ess.e_cap);
    p.ess.soc0 = e.value("soc0", p.ess.soc0);
  }
  p.v0 = j.value("v0", p.v0);
  p.dt_sim = j.value("dt_sim", p.dt_sim);
  p.breaker_operate_s = j.value("breaker_operate_s", p.breaker_operate_s);
  p.breaker_operate_prearmed_s =
      j.value("breaker_operate_prearmed_s", p.breaker_operate_prearmed_s);
  p.ess_slew = j.value("ess_slew", p.ess_slew);
  return p;
}

json thresholds_to_json(const Thresholds& t) {
  return {{"sag_precursor", t.sag_precursor}, {"sag_fault", t.sag_fault},
          {"thd_precursor", t.thd_precursor}, {"thd_fault", t.thd_fault},
          {"rocof_precursor", t.rocof_precursor}, {"rocof_fault", t.rocof_fault},
          {"df_precursor", t.df_precursor}, {"df_fault", t.df_fault}};
}

Thresholds thresholds_from_json(const json& j) {
  Thresholds t;
  t.sag_precursor = j.value("sag_precursor", t.sag_precursor);
  t.sag_fault = j.value("sag_fault", t.sag_fault);
  t.thd_precursor = j.value("thd_precursor", t.thd_precursor);
  t.thd_fault = j.value("thd_fault", t.thd_fault);
  t.rocof_precursor = j.value("rocof_precursor", t.rocof_precursor);
  t.rocof_fault = j.value("rocof_fault", t.rocof_fault);
  t.df_precursor = j.value("df_precursor", t.df_precursor);
  t.df_fault = j.value("df_fault", t.df_fault);
  return t;
}

json reflex_to_json(const ReflexLimits& r) {
  return {{"sag_pickup", r.sag_pickup},     {"sag_delay", r.sag_delay},
          {"rocof_pickup", r.rocof_pickup}, {"rocof_delay", r.rocof_delay},
          {"df_pickup", r.df_pickup},       {"df_delay", r.df_delay},
          {"thd_pickup", r.thd_pickup},     {"thd_delay", r.thd_delay},
          {"df_hard", r.df_hard},           {"rocof_hard", r.rocof_hard}};
}

ReflexLimits reflex_from_json(const json& j) {
  ReflexLimits r;
  r.sag_pickup = j.value("sag_pickup", r.sag_pickup);
  r.sag_delay = j.value("sag_delay", r.sag_delay);
  r.rocof_pickup = j.value("rocof_pickup", r.rocof_pickup);
  r.rocof_delay = j.value("rocof_delay", r.rocof_delay);
  r.df_pickup = j.value("df_pickup", r.df_pickup);
  r.df_delay = j.value("df_delay", r.df_delay);
  r.thd_pickup = j.value("thd_pickup", r.thd_pickup);
  r.thd_delay = j.value("thd_delay", r.thd_delay);
  r.df_hard = j.value("df_hard", r.df_hard);
  r.rocof_hard = j.value("rocof_hard", r.rocof_hard);
  return r;
}

json gate_to_json(const GateParams& g) {
  return {{"k_i", g.k_i},   {"k_f", g.k_f},
          {"g_min", g.g_min}, {"g_max", g.g_max},
          {"p_sat", g.p_sat}, {"b", g.b},
          {"d", g.d},         {"p_ess_max_share", g.p_ess_max_share},
          {"df_gain", g.df_gain}, {"dv_gain", g.dv_gain}};
}

GateParams gate_from_json(const json& j) {
  GateParams g;
  g.k_i = j.value("k_i", g.k_i);
  g.k_f = j.value("k_f", g.k_f);
  g.g_min = j.value("g_min", g.g_min);
  g.g_max = j.value("g_max", g.g_max);
  g.p_sat = j.value("p_sat", g.p_sat);
  g.b = j.value("b", g.b);
  g.d = j.value("d", g.d);
  g.p_ess_max_share = j.value("p_ess_max_share", g.p_ess_max_share);
  g.df_gain = j.value("df_gain", g.df_gain);
  g.dv_gain = j.value("dv_gain", g.dv_gain);
  return g;
}

}  // namespace

std::string scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["seed"] = spec.seed;
  j["duration"] = spec.duration;
  j["plant"] = plant_to_json(spec.plant);
  j["thresholds"] = thresholds_to_json(spec.thresholds);
  j["reflex"] = reflex_to_json(spec.reflex);
  j["gate"] = gate_to_json(spec.gate);
  json tl = json::array();
  for (const auto& entry : spec.timeline) {
    if (std::holds_alternative<ScenarioInjection>(entry)) {
      tl.push_back(injection_to_json(std::get<ScenarioInjection>(entry)));
    } else {
      const auto& pair = std::get<PrepulsePulsePair>(entry);
      json p;
      p["kind"] = "PrepulsePulsePair";
      p["prepulse"] = injection_to_json(pair.prepulse);
      p["pulse"] = pair.pulse ? injection_to_json(*pair.pulse) : json(nullptr);
      p["delta_t"] = pair.delta_t;
      p["ground_truth"] = ground_truth_name(pair.ground_truth);
      tl.push_back(p);
    }
  }
  j["timeline"] = tl;
  j["controller"] = controller_kind_name(spec.controller);
  j["secondary_period"] = spec.secondary_period;
  j["force_decision"] = forced_decision_name(spec.force_decision);
  return j.dump(2);
}

ScenarioSpec scenario_from_json(const std::string& text) {
  json j = json::parse(text);
  ScenarioSpec s;
  s.name = j.value("name", std::string("scenario"));
  s.seed = j.value("seed", std::uint64_t{0});
  s.duration = j.value("duration", 2.0);
  if (j.contains("plant")) s.plant = plant_from_json(j.at("plant"));
  if (j.contains("thresholds")) s.thresholds = thresholds_from_json(j.at("thresholds"));
  if (j.contains("reflex")) s.reflex = reflex_from_json(j.at("reflex"));
  if (j.contains("gate")) s.gate = gate_from_json(j.at("gate"));
  if (j.contains("timeline")) {
    for (const auto& e : j.at("timeline")) {
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "PrepulsePulsePair") {
        PrepulsePulsePair pair;
        pair.prepulse = injection_from_json(e.at("prepulse"));
        if (e.contains("pulse") && !e.at("pulse").is_null())
          pair.pulse = injection_from_json(e.at("pulse"));
        pair.delta_t = e.value("delta_t", 0.0);
        pair.ground_truth =
            ground_truth_from_name(e.value("ground_truth", std::string("Benign")));
        s.timeline.emplace_back(pair);
      } else {
        s.timeline.emplace_back(injection_from_json(e));
      }
    }
  }
  s.controller =
      controller_kind_from_name(j.value("controller", std::string("sg-nmg")));
  s.secondary_period = j.value("secondary_period", 0.1);
  s.force_decision =
      forced_decision_from_name(j.value("force_decision", std::string("none")));
  s.validate();
  return s;
}

void save_scenario(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << scenario_to_json(spec) << "\n";
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

std::vector<ScenarioSpec> generate_ppi_suite(std::uint64_t seed, int n) {
  if (n <= 0) throw std::invalid_argument("suite size must be positive");
  std::vector<ScenarioSpec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng r(mix_seed(seed, static_cast<std::uint64_t>(i)));
    ScenarioSpec s;
    s.name = index_name("ppi", i);
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    s.duration = 1.2;
    const double t0 = r.uniform(0.3, 0.6);
    ScenarioInjection pre;
    pre.t_start = t0;
    if (i % 2 == 0) {
      pre.kind = InjectionKind::Sag;
      pre.depth = r.uniform(0.14, 0.25);
      pre.duration = r.uniform(0.03, 0.075);
    } else {
      pre.kind = InjectionKind::HarmonicBurst;
      pre.order = 3 + 2 * static_cast<int>(r.pick(3));  // 3, 5, 7
      pre.amplitude = r.uniform(0.07, 0.12);
      pre.duration = r.uniform(0.04, 0.075);
    }
    PrepulsePulsePair pair;
    pair.prepulse = pre;
    pair.ground_truth = GroundTruth::Benign;
    s.timeline.emplace_back(pair);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScenarioSpec> generate_ppf_suite(std::uint64_t seed, int n, double dt_lo,
                                             double dt_hi) {
  if (n <= 0) throw std::invalid_argument("suite size must be positive");
  if (!(dt_lo >= 0.45) || !(dt_hi >= dt_lo))
    throw std::invalid_argument(
        "prepulse-to-pulse interval must satisfy 0.45 <= dt_lo <= dt_hi");
  std::vector<ScenarioSpec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng r(mix_seed(seed, static_cast<std::uint64_t>(i)));
    ScenarioSpec s;
    s.name = index_name("ppf", i);
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    const double t0 = r.uniform(0.3, 0.5);
    const double depth = r.uniform(0.12, 0.25);
    const double sag_dur = r.uniform(0.15, 0.30);
    const int order = 3 + 2 * static_cast<int>(r.pick(3));
    const double amp = r.uniform(0.09, 0.18);
    const double delta_t = r.uniform(dt_lo, dt_hi);
    const double severity = r.uniform(0.35, 0.55);
    s.duration = t0 + delta_t + 0.9;

    ScenarioInjection burst;
    burst.kind = InjectionKind::HarmonicBurst;
    burst.t_start = t0;
    burst.order = order;
    burst.amplitude = amp;
    burst.duration = sag_dur;
    s.timeline.emplace_back(burst);

    PrepulsePulsePair pair;
    pair.prepulse.kind = InjectionKind::Sag;
    pair.prepulse.t_start = t0;
    pair.prepulse.depth = depth;
    pair.prepulse.duration = sag_dur;
    ScenarioInjection pulse;
    pulse.kind = InjectionKind::Fault;
    pulse.t_start = t0 + delta_t;
    pulse.severity = severity;
    pulse.element = "feeder";
    pair.pulse = pulse;
    pair.delta_t = delta_t;
    pair.ground_truth = GroundTruth::Harmful;
    s.timeline.emplace_back(pair);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScenarioSpec> generate_separable_suite(std::uint64_t seed, int n) {
  if (n <= 0) throw std::invalid_argument("suite size must be positive");
  std::vector<ScenarioSpec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng r(mix_seed(seed, static_cast<std::uint64_t>(i)));
    ScenarioSpec s;
    s.name = index_name("sep", i);
    s.seed = mix_seed(seed, static_cast<std::uint64_t>(i));
    const double t0 = r.uniform(0.3, 0.5);
    // Depth sits below every trip pickup; harmfulness is encoded purely in
    // how long the sag lasts, so the two classes occupy disjoint duration
    // bins of the policy's feature quantization.
    const double depth = r.uniform(0.10, 0.118);
    PrepulsePulsePair pair;
    pair.prepulse.kind = InjectionKind::Sag;
    pair.prepulse.t_start = t0;
    pair.prepulse.depth = depth;
    if (i % 2 == 0) {
      pair.prepulse.duration = r.uniform(0.055, 0.095);
      pair.ground_truth = GroundTruth::Benign;
      s.duration = 1.2;
    } else {
      pair.prepulse.duration = r.uniform(0.125, 0.195);
      const double delta_t = r.uniform(0.6, 1.2);
      ScenarioInjection pulse;
      pulse.kind = InjectionKind::Fault;
      pulse.t_start = t0 + delta_t;
      pulse.severity = r.uniform(0.35, 0.55);
      pulse.element = "feeder";
      pair.pulse = pulse;
      pair.delta_t = delta_t;
      pair.ground_truth = GroundTruth::Harmful;
      s.duration = t0 + delta_t + 0.9;
    }
    s.timeline.emplace_back(pair);
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

Trace run_scenario(const ScenarioSpec& spec, PolicyState* policy,
                   const BelRunConfig& belcfg) {
  spec.validate();
  const PlantParams& pp = spec.plant;
  const double dt = pp.dt_sim;
  const long n_steps = std::llround(spec.duration / dt);
  const long steps_per_hop = std::max<long>(1, std::llround(kHop / dt));
  const long hops_per_secondary =
      std::max<long>(1, std::llround(spec.secondary_period / kHop));

  TelemetryCfg tcfg;
  tcfg.f0 = pp.f0;
  tcfg.v0 = pp.v0;
  tcfg.window = kWindow;
  tcfg.hop = kHop;
  tcfg.dt_step = dt;
  TelemetryUnit tele(tcfg, spec.thresholds);
  ReflexUnit reflex;

  PolicyState fallback = PolicyState::rule_based();
  PolicyState& pol = policy ? *policy : fallback;

  BelState bel_local = BelState::zeros(2);
  BelState& bel = belcfg.state ? *belcfg.state : bel_local;
  double bel_integ = 0.0;
  PiState pi;

  PlantState st = make_initial_state(pp);
  SecondaryCommand cmd{};
  SupervisoryDecision cur_dec{};  // Neutral / zero-confidence until an event decides
  GateFactor cur_gf{};
  std::array<bool, 5> act_latch{};
  bool hard_active = false;
  int prev_mask = 0;

  // Evidence accumulated over the current contiguous precursor episode; the
  // supervisor classifies the event, not a single analysis frame.
  bool acc_active = false;
  double acc_last_t = 0.0;
  FeatureVector acc{};

  const auto inj = spec.flattened();
  std::vector<char> applied(inj.size(), 0);
  double t_pulse = 1e18;
  for (const auto& in : inj)
    if (in.kind == InjectionKind::Fault || in.kind == InjectionKind::Islanding)
      t_pulse = std::min(t_pulse, in.t_start);

  Trace tr;
  tr.scenario_name = spec.name;
  tr.ground_truth = spec.ground_truth();
  tr.dt_sim = dt;
  tr.hop = kHop;
  tr.steps.reserve(static_cast<std::size_t>(n_steps));
  tr.hops.reserve(static_cast<std::size_t>(n_steps / steps_per_hop) + 1);

  auto breaker_feedable = [&st](const std::string& el) {
    auto it = st.breaker_closed.find(el);
    const bool closed = it == st.breaker_closed.end() ? true : it->second;
    return closed && !st.pending_open.count(el);
  };

  for (long i = 0; i < n_steps; ++i) {
    const double t = st.t;

    // One-time activations: log arrivals, apply load changes.
    for (std::size_t k = 0; k < inj.size(); ++k) {
      if (applied[k] || inj[k].t_start > t + 1e-9) continue;
      applied[k] = 1;
      double val = 0.0;
      switch (inj[k].kind) {
        case InjectionKind::LoadStep:
          val = inj[k].dp;
          st.p_load += inj[k].dp;
          break;
        case InjectionKind::Sag: val = inj[k].depth; break;
        case InjectionKind::HarmonicBurst: val = inj[k].amplitude; break;
        case InjectionKind::Fault: val = inj[k].severity; break;
        case InjectionKind::Islanding: val = kIslandingImbalance; break;
      }
      tr.events.push_back({inj[k].t_start, "injection",
                           injection_kind_name(inj[k].kind), val});
    }

    if (i % steps_per_hop == 0) {
      const long hop_idx = i / steps_per_hop;
      tele.sample(t);
      FeatureVector fv = tele.extract_features();

      // Hard limits act before (and regardless of) anything supervisory.
      const auto hard = hard_override(fv, spec.reflex);
      if (hard) {
        if (!hard_active) {
          hard_active = true;
          tr.events.push_back({t, "hard_override", "Trip:" + hard->element, 0.0});
          if (breaker_feedable(hard->element)) {
            st = apply_protection(st, pp, *hard);
            tr.events.push_back({t, "action", "Trip:" + hard->element, 0.0});
          }
        }
      } else {
        hard_active = false;
      }

      const auto evt = tele.detect_event(fv, t);
      if (evt)
        tr.events.push_back({t, "detection", precursor_kind_name(evt->kind), 0.0});

      const bool supervising = spec.controller == ControllerKind::SgNmg &&
                               spec.force_decision != ForcedDecision::Neutral;
      bool decided = false;
      if (evt && supervising) {
        if (!acc_active || t - acc_last_t > kHop + 1e-9) {
          acc = fv;
          acc_active = true;
        } else {
          acc.sag_depth = std::max(acc.sag_depth, fv.sag_depth);
          acc.sag_duration = std::max(acc.sag_duration, fv.sag_duration);
          acc.thd = std::max(acc.thd, fv.thd);
          if (std::abs(fv.rocof) > std::abs(acc.rocof)) acc.rocof = fv.rocof;
          acc.df_mag = std::max(acc.df_mag, fv.df_mag);
          acc.persistence = fv.persistence;
          acc.t_since_precursor = fv.t_since_precursor;
        }
        acc_last_t = t;

        const int bin = feature_bin(acc, pol.bins);
        SupervisoryDecision dec;
        if (spec.force_decision == ForcedDecision::Inhibit) {
          dec = SupervisoryDecision{DecisionKind::Inhibit, 1.0, 1.0, t};
        } else if (spec.force_decision == ForcedDecision::Facilitate) {
          dec = SupervisoryDecision{DecisionKind::Facilitate, 1.0, 0.0, t};
        } else {
          const auto [label, c] = classify(acc, pol, spec.thresholds);
          dec = decide(label, c, pol, t);
        }
        cur_dec = dec;
        cur_gf = gating_factor(dec, GateContext{fv.persistence, fv.t_since_precursor},
                               spec.gate);
        // First pass carries the bias channels so this cycle's protection
        // evaluation already runs under the new gate.
        GatedResponse pre;
        pre.decision = dec;
        pre.g = cur_gf;
        pre.s_out = 0.0;
        cmd = synthesize_commands(pre, spec.gate, pp.ess.p_max);
        decided = true;
        if (t < t_pulse) tr.credited = CreditedDecision{true, bin, dec.kind, t};
      }

      // Slower secondary layers act on their own period.
      if (hop_idx % hops_per_secondary == 0) {
        if (spec.controller == ControllerKind::Pi) {
          const PiResult pr = pi_step(pi, -st.delta_f, spec.secondary_period);
          pi = pr.state;
          cmd = SecondaryCommand{};
          cmd.df_offset = pr.control;
        } else if (spec.controller == ControllerKind::Bel) {
          BelInput bin_in;
          bin_in.s = {std::min(std::abs(st.delta_f) / 0.005, 1.0),
                      std::min(std::abs(bel_integ) / 0.005, 1.0)};
          bin_in.rew = belcfg.rew;
          const BelActivation activ = bel_activations(bel, bin_in);
          if (belcfg.learn) bel = bel_update(bel, bin_in, activ.a, activ.e);
          cmd = SecondaryCommand{};
          cmd.df_offset = clampd(activ.e * 0.003, -0.02, 0.02);
        }
      }

      ReflexDrive drive = reflex.evaluate(fv, spec.reflex, cmd, t);
      const int mask = drive.fired_mask();
      if (mask != prev_mask && mask != 0) {
        std::string names;
        for (int c = 0; c < kNumCriteria; ++c) {
          if (!drive.criteria_fired[c]) continue;
          if (!names.empty()) names += '+';
          names += criterion_name(static_cast<Criterion>(c));
        }
        tr.events.push_back({t, "criteria", names, static_cast<double>(mask)});
      }
      prev_mask = mask;
      if (!drive.any_fired()) act_latch.fill(false);

      SupervisoryDecision cyc = cur_dec;
      cyc.t = t;  // the held decision governs this cycle
      const GatedResponse resp = gate_apply(drive, cyc, cur_gf);
      if (decided) cmd = synthesize_commands(resp, spec.gate, pp.ess.p_max);

      if (drive.proposed.kind != ActionKind::None && resp.s_out > 0.0) {
        const ActionKind kind = drive.proposed.kind;
        const int ki = static_cast<int>(kind);
        bool blocked = act_latch[ki];
        if (kind == ActionKind::Shed && cmd.shed_desensitize) blocked = true;
        if (kind == ActionKind::Trip && !breaker_feedable(drive.proposed.element))
          blocked = true;
        if (!blocked) {
          st.prearm = st.prearm || cmd.prearm;
          st = apply_protection(st, pp, drive.proposed);
          act_latch[ki] = true;
          std::string detail = action_kind_name(kind);
          if (kind == ActionKind::Trip) detail += ":" + drive.proposed.element;
          tr.events.push_back({t, "action", detail, drive.proposed.amount});
        }
      }

      HopRecord hr;
      hr.t = t;
      hr.features = fv;
      hr.a = drive.a;
      hr.criteria_mask = mask;
      hr.decision = cur_dec.kind;
      hr.confidence = cur_dec.c;
      hr.i_mag = cur_dec.i_mag;
      hr.g = cur_gf.g;
      hr.s_out = resp.s_out;
      tr.hops.push_back(hr);
    }

    // Disturbance view of this step from the active injections.
    StepDisturbance dist;
    std::vector<HarmonicTone> tones;
    for (std::size_t k = 0; k < inj.size(); ++k) {
      const auto& in = inj[k];
      if (!applied[k]) continue;
      const bool timed = in.kind == InjectionKind::Sag ||
                         in.kind == InjectionKind::HarmonicBurst;
      if (timed && t >= in.t_start + in.duration - 1e-9) continue;
      switch (in.kind) {
        case InjectionKind::LoadStep:
          break;  // already folded into p_load
        case InjectionKind::Sag:
          dist.sag_depth = std::max(dist.sag_depth, in.depth);
          break;
        case InjectionKind::HarmonicBurst:
          tones.push_back(HarmonicTone{in.order, in.amplitude});
          break;
        case InjectionKind::Fault:
          dist.fault_severity += in.severity;
          dist.fault_sag_depth =
              std::max(dist.fault_sag_depth, fault_sag_of(in.severity));
          dist.fault_element = in.element;
          break;
        case InjectionKind::Islanding:
          dist.p_imbalance += kIslandingImbalance;
          break;
      }
    }

    const auto prev_breakers = st.breaker_closed;
    st = plant_step(st, pp, cmd, dist);
    for (const auto& [el, closed] : st.breaker_closed) {
      if (closed) continue;
      const auto it = prev_breakers.find(el);
      const bool was_closed = it == prev_breakers.end() ? true : it->second;
      if (was_closed) tr.events.push_back({st.t, "breaker_open", el, 0.0});
    }

    StepRecord sr;
    sr.t = st.t;
    sr.delta_f = st.delta_f;
    sr.v = st.v;
    sr.p_dg = st.p_dg;
    sr.p_ess = st.p_ess;
    sr.soc = st.soc;
    sr.p_load = st.p_load;
    sr.shed_fraction = st.shed_fraction;
    {
      const auto it = st.breaker_closed.find("feeder");
      sr.breaker_feeder = it == st.breaker_closed.end() ? true : it->second;
    }
    sr.prearm = st.prearm;
    tr.steps.push_back(std::move(sr));

    tele.push_step(st.delta_f, st.v, tones);
    bel_integ += st.delta_f * dt;
  }

  return tr;
}

std::vector<Trace> run_batch(const std::vector<ScenarioSpec>& specs,
                             const PolicyState* policy, int parallelism) {
  const std::size_t n = specs.size();
  std::vector<Trace> out(n);
  if (parallelism < 1) parallelism = 1;
  parallelism = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), std::max<std::size_t>(n, 1)));

  auto work = [&](std::size_t i) {
    if (policy) {
      PolicyState local = *policy;  // isolated copy keeps runs order-independent
      out[i] = run_scenario(specs[i], &local);
    } else {
      out[i] = run_scenario(specs[i], nullptr);
    }
  };

  if (parallelism == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(parallelism));
  for (int w = 0; w < parallelism; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

TrainResult train_policy(const std::vector<ScenarioSpec>& specs, int episodes,
                         std::uint64_t seed, double alpha_lr, double epsilon) {
  if (specs.empty()) throw std::invalid_argument("train_policy: no scenarios");
  if (episodes <= 0) throw std::invalid_argument("train_policy: episodes must be positive");
  TrainResult res;
  res.policy = PolicyState::learned(seed, alpha_lr, epsilon);
  res.rewards.reserve(static_cast<std::size_t>(episodes));
  for (int ep = 0; ep < episodes; ++ep) {
    const ScenarioSpec& spec = specs[static_cast<std::size_t>(ep) % specs.size()];
    const Trace tr = run_scenario(spec, &res.policy);
    const KpiReport k = compute_kpis(tr, tr.ground_truth);
    const double r = reward_of(k);
    res.rewards.push_back(r);
    if (tr.credited.valid) {
      policy_update(res.policy, tr.credited.bin, tr.credited.kind, r);
      record_label(res.policy, tr.credited.bin, tr.ground_truth);
    }
  }
  return res;
}

EvalResult evaluate_policy(const std::vector<ScenarioSpec>& specs,
                           const PolicyState& policy, int parallelism) {
  if (specs.empty()) throw std::invalid_argument("evaluate_policy: no scenarios");
  PolicyState frozen = policy;
  frozen.epsilon = 0.0;  // greedy evaluation
  const auto traces = run_batch(specs, &frozen, parallelism);
  EvalResult res;
  res.total = static_cast<int>(specs.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& tr = traces[i];
    res.kpis.push_back(compute_kpis(tr, tr.ground_truth));
    const DecisionKind kind =
        tr.credited.valid ? tr.credited.kind : DecisionKind::Neutral;
    res.decisions.push_back(kind);
    const bool ok = (tr.ground_truth == GroundTruth::Benign &&
                     kind == DecisionKind::Inhibit) ||
                    (tr.ground_truth == GroundTruth::Harmful &&
                     kind == DecisionKind::Facilitate);
    if (ok) ++res.correct;
  }
  res.accuracy = res.total > 0 ? static_cast<double>(res.correct) / res.total : 0.0;
  return res;
}

BelTrainingResult run_bel_training(int episodes) {
  if (episodes <= 0)
    throw std::invalid_argument("run_bel_training: episodes must be positive");
  ScenarioSpec spec;
  spec.name = "bel_regulation";
  spec.duration = 2.0;
  spec.controller = ControllerKind::Bel;
  ScenarioInjection step;
  step.kind = InjectionKind::LoadStep;
  step.t_start = 0.2;
  step.dp = 0.1;
  spec.timeline.emplace_back(step);
  spec.validate();

  BelTrainingResult res;
  res.state = BelState::zeros(2);
  double rew = 0.0;  // no reinforcement available before the first episode ends
  for (int ep = 0; ep < episodes; ++ep) {
    BelRunConfig cfg;
    cfg.state = &res.state;
    cfg.rew = rew;
    cfg.learn = true;
    const Trace tr = run_scenario(spec, nullptr, cfg);
    const KpiReport k = compute_kpis(tr, tr.ground_truth);
    res.dev_areas.push_back(k.freq_dev_area);
    res.v_w_history.push_back(res.state.v_w);
    rew = 1.0 - std::abs(tr.steps.back().delta_f);
  }
  return res;
}

}  // namespace nmg
