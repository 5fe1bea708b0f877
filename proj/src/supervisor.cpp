#include "nmg/supervisor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nmg {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Relative margin of x against threshold th, clamped to [-1, 1].
double rel_margin(double x, double th) {
  if (th <= 0.0) return x > 0.0 ? 1.0 : -1.0;
  return std::min(1.0, std::max(-1.0, (x - th) / th));
}

int bin_of(double x, const std::array<double, 3>& edges) {
  int b = 0;
  while (b < 3 && x >= edges[b]) ++b;
  return b;
}

}  // namespace

const char* label_name(Label l) { return l == Label::Harmless ? "Harmless" : "Harmful"; }

PolicyState PolicyState::rule_based() {
  PolicyState p;
  p.mode = Mode::RuleBased;
  p.q.assign(kNumBins, {0.0, 0.0, 0.0});
  p.label_counts.assign(kNumBins, {0, 0});
  return p;
}

PolicyState PolicyState::learned(std::uint64_t seed, double alpha_lr, double epsilon) {
  PolicyState p;
  p.mode = Mode::Learned;
  p.alpha_lr = alpha_lr;
  p.epsilon = epsilon;
  p.q.assign(kNumBins, {0.0, 0.0, 0.0});
  p.label_counts.assign(kNumBins, {0, 0});
  p.rng = Rng(seed);
  return p;
}

int feature_bin(const FeatureVector& f, const PolicyBins& bins) {
  const int b_depth = bin_of(f.sag_depth, bins.sag_depth);
  const int b_dur = bin_of(f.sag_duration, bins.sag_duration);
  const int b_thd = bin_of(f.thd, bins.thd);
  const int b_rocof = bin_of(std::abs(f.rocof), bins.rocof);
  return ((b_depth * 4 + b_dur) * 4 + b_thd) * 4 + b_rocof;
}

std::pair<Label, double> classify(const FeatureVector& f, const PolicyState& policy,
                                  const Thresholds& thr) {
  if (policy.mode == PolicyState::Mode::RuleBased) {
    const double m_and = std::min(rel_margin(f.sag_duration, policy.rule.sag_duration_s),
                                  rel_margin(f.thd, policy.rule.thd));
    const double m_rocof = rel_margin(std::abs(f.rocof), policy.rule.rocof);
    const double m_pers = rel_margin(static_cast<double>(f.persistence),
                                     static_cast<double>(policy.rule.persistence));
    const double h = std::max({m_and, m_rocof, m_pers});
    const Label label = h > 0.0 ? Label::Harmful : Label::Harmless;

    // Confidence = margin strength, discounted by how much actual signal is
    // present; an all-quiet feature vector classifies Harmless but with ~zero
    // confidence.
    const double crossing = std::max({f.sag_depth / thr.sag_precursor,
                                      f.thd / thr.thd_precursor,
                                      std::abs(f.rocof) / thr.rocof_precursor,
                                      f.df_mag / thr.df_precursor});
    const double evidence = clamp01(crossing - 1.0);
    return {label, clamp01(std::abs(h)) * evidence};
  }

  const int bin = feature_bin(f, policy.bins);
  const auto& q = policy.q[bin];
  int best = 0;
  for (int i = 1; i < kNumActions; ++i)
    if (q[i] > q[best]) best = i;

  Label label;
  if (best == 0) {
    label = Label::Harmless;
  } else if (best == 1) {
    label = Label::Harmful;
  } else {
    const auto& lc = policy.label_counts[bin];
    label = lc[1] > lc[0] ? Label::Harmful : Label::Harmless;
  }

  // Softmax gap between the two strongest actions.
  double qmax = std::max({q[0], q[1], q[2]});
  double e0 = std::exp(q[0] - qmax), e1 = std::exp(q[1] - qmax), e2 = std::exp(q[2] - qmax);
  const double z = e0 + e1 + e2;
  std::array<double, 3> p{e0 / z, e1 / z, e2 / z};
  std::sort(p.begin(), p.end(), std::greater<>());
  double conf = p[0] - p[1];

  // Observed label purity of the bin, once enough episodes accumulated.
  const auto& lc = policy.label_counts[bin];
  const std::uint64_t total = lc[0] + lc[1];
  if (total >= kMinHistoryForPurity) {
    const double purity =
        std::abs(static_cast<double>(lc[0]) - static_cast<double>(lc[1])) /
        static_cast<double>(total);
    conf = std::max(conf, purity);
  }
  return {label, clamp01(conf)};
}

SupervisoryDecision decide(Label label, double c, PolicyState& policy, double t) {
  if (c < 0.0 || c > 1.0) throw std::invalid_argument("decide: confidence outside [0,1]");
  DecisionKind kind =
      label == Label::Harmless ? DecisionKind::Inhibit : DecisionKind::Facilitate;

  if (policy.mode == PolicyState::Mode::Learned && policy.epsilon > 0.0) {
    if (policy.rng.unit() < policy.epsilon) {
      switch (policy.rng.pick(kNumActions)) {
        case 0: kind = DecisionKind::Inhibit; break;
        case 1: kind = DecisionKind::Facilitate; break;
        default: kind = DecisionKind::Neutral; break;
      }
    }
  }

  if (c < policy.c_min) kind = DecisionKind::Neutral;

  SupervisoryDecision d;
  d.kind = kind;
  d.c = c;
  d.i_mag = kind == DecisionKind::Inhibit ? c : 0.0;
  d.t = t;
  return d;
}

double reward_of(const KpiReport& k) {
  return 1.0 - 1.0 * k.freq_dev_area - 2.0 * k.false_trips - 5.0 * k.missed_faults -
         0.1 * k.ess_stress;
}

namespace {
int action_index(DecisionKind k) {
  switch (k) {
    case DecisionKind::Inhibit: return 0;
    case DecisionKind::Facilitate: return 1;
    case DecisionKind::Neutral: return 2;
  }
  return 2;
}
}  // namespace

void policy_update(PolicyState& policy, int bin, DecisionKind executed, double r) {
  if (policy.mode != PolicyState::Mode::Learned)
    throw std::logic_error("policy_update: rejected in RuleBased mode");
  if (bin < 0 || bin >= kNumBins) throw std::out_of_range("policy_update: bad bin");
  double& q = policy.q[bin][action_index(executed)];
  q += policy.alpha_lr * (r - q);
}

void record_label(PolicyState& policy, int bin, GroundTruth truth) {
  if (bin < 0 || bin >= kNumBins) throw std::out_of_range("record_label: bad bin");
  ++policy.label_counts[bin][truth == GroundTruth::Harmful ? 1 : 0];
}

std::string policy_to_json(const PolicyState& policy) {
  nlohmann::json j;
  j["mode"] = policy.mode == PolicyState::Mode::RuleBased ? "RuleBased" : "Learned";
  j["rule"] = {{"sag_duration_s", policy.rule.sag_duration_s},
               {"thd", policy.rule.thd},
               {"rocof", policy.rule.rocof},
               {"persistence", policy.rule.persistence}};
  j["bins"] = {{"sag_depth", policy.bins.sag_depth},
               {"sag_duration", policy.bins.sag_duration},
               {"thd", policy.bins.thd},
               {"rocof", policy.bins.rocof}};
  j["epsilon"] = policy.epsilon;
  j["alpha_lr"] = policy.alpha_lr;
  j["c_min"] = policy.c_min;
  j["rng_seed"] = policy.rng.seed();
  j["rng_calls"] = policy.rng.calls();
  j["q"] = policy.q;
  j["label_counts"] = policy.label_counts;
  return j.dump(2);
}

PolicyState policy_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PolicyState p;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "RuleBased")
    p.mode = PolicyState::Mode::RuleBased;
  else if (mode == "Learned")
    p.mode = PolicyState::Mode::Learned;
  else
    throw std::invalid_argument("policy: unknown mode '" + mode + "'");
  const auto& r = j.at("rule");
  p.rule.sag_duration_s = r.at("sag_duration_s").get<double>();
  p.rule.thd = r.at("thd").get<double>();
  p.rule.rocof = r.at("rocof").get<double>();
  p.rule.persistence = r.at("persistence").get<int>();
  const auto& b = j.at("bins");
  p.bins.sag_depth = b.at("sag_depth").get<std::array<double, 3>>();
  p.bins.sag_duration = b.at("sag_duration").get<std::array<double, 3>>();
  p.bins.thd = b.at("thd").get<std::array<double, 3>>();
  p.bins.rocof = b.at("rocof").get<std::array<double, 3>>();
  p.epsilon = j.at("epsilon").get<double>();
  p.alpha_lr = j.at("alpha_lr").get<double>();
  p.c_min = j.at("c_min").get<double>();
  p.q = j.at("q").get<std::vector<std::array<double, kNumActions>>>();
  p.label_counts = j.at("label_counts").get<std::vector<std::array<std::uint64_t, 2>>>();
  if (p.q.size() != kNumBins || p.label_counts.size() != kNumBins)
    throw std::invalid_argument("policy: wrong table size");
  p.rng.restore(j.at("rng_seed").get<std::uint64_t>(), j.at("rng_calls").get<std::uint64_t>());
  return p;
}

void save_policy(const PolicyState& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy file: " + path);
  out << policy_to_json(policy) << "\n";
}

PolicyState load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read policy file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

}  // namespace nmg
