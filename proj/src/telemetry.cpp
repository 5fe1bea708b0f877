#include "nmg/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace nmg {

namespace {

// Direct DFT at the exact harmonic bins via a shared cosine table; the window
// holds an integer number of cycles, so the bins are leakage-free and the
// amplitude estimate is analytic.
class HarmonicDft {
 public:
  explicit HarmonicDft(std::size_t n) : n_(n), cos_(n), sin_(n) {
    for (std::size_t m = 0; m < n; ++m) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(m) /
                        static_cast<double>(n);
      cos_[m] = std::cos(th);
      sin_[m] = std::sin(th);
    }
  }

  // Amplitude of the sinusoidal component in bin b (0 < b < n/2).
  double amplitude(const std::vector<double>& x, std::size_t b) const {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      re += x[k] * cos_[idx];
      im -= x[k] * sin_[idx];
      idx += b;
      if (idx >= n_) idx -= n_;
    }
    return 2.0 * std::hypot(re, im) / static_cast<double>(n_);
  }

 private:
  std::size_t n_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

double thd_from_dft(const std::vector<double>& pow_samples, double pow_rate, double f0) {
  const std::size_t n = pow_samples.size();
  if (n == 0) throw std::invalid_argument("thd: empty sample window");
  // Bin spacing is pow_rate / n; the fundamental must land on an exact bin.
  const double bins_per_f0 = f0 * static_cast<double>(n) / pow_rate;
  const std::size_t b1 = static_cast<std::size_t>(std::llround(bins_per_f0));
  if (b1 == 0 || std::abs(bins_per_f0 - static_cast<double>(b1)) > 1e-9)
    throw std::invalid_argument("thd: window does not hold an integer number of cycles");
  thread_local std::unique_ptr<HarmonicDft> cached;
  thread_local std::size_t cached_n = 0;
  if (!cached || cached_n != n) {
    cached = std::make_unique<HarmonicDft>(n);
    cached_n = n;
  }
  const HarmonicDft& dft = *cached;
  const double a1 = dft.amplitude(pow_samples, b1);
  if (a1 < 1e-9) throw std::domain_error("thd: no fundamental component");
  double acc = 0.0;
  for (int h = 2; h <= 25; ++h) {
    const std::size_t b = b1 * static_cast<std::size_t>(h);
    if (b >= n / 2) break;
    const double a = dft.amplitude(pow_samples, b);
    acc += a * a;
  }
  return std::sqrt(acc) / a1;
}

}  // namespace

const char* precursor_kind_name(PrecursorKind k) {
  switch (k) {
    case PrecursorKind::Sag: return "Sag";
    case PrecursorKind::HarmonicBurst: return "HarmonicBurst";
    case PrecursorKind::LoadFluctuation: return "LoadFluctuation";
  }
  return "Sag";
}

double rocof_slope(const std::deque<TelemetryFrame>& frames) {
  if (frames.size() < 2) throw std::invalid_argument("rocof: need at least 2 frames");
  double tm = 0.0, fm = 0.0;
  for (const auto& fr : frames) {
    tm += fr.t;
    fm += fr.f;
  }
  tm /= static_cast<double>(frames.size());
  fm /= static_cast<double>(frames.size());
  double num = 0.0, den = 0.0;
  for (const auto& fr : frames) {
    num += (fr.t - tm) * (fr.f - fm);
    den += (fr.t - tm) * (fr.t - tm);
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

double thd_ratio(const std::vector<double>& pow_samples, double pow_rate, double f0) {
  return thd_from_dft(pow_samples, pow_rate, f0);
}

TelemetryUnit::TelemetryUnit(const TelemetryCfg& cfg, const Thresholds& thr)
    : cfg_(cfg), thr_(thr) {
  steps_per_window_ = static_cast<std::size_t>(std::llround(cfg.window / cfg.dt_step));
  frames_per_window_ = static_cast<std::size_t>(std::llround(cfg.window / cfg.hop));
  // Quiescent history so the first hops already see a full window.
  for (std::size_t i = 0; i < steps_per_window_; ++i)
    ring_.push_back(RingEntry{0.0, cfg.v0, {}});
  for (std::size_t i = 0; i + 1 < frames_per_window_; ++i) {
    TelemetryFrame fr;
    fr.t = -static_cast<double>(frames_per_window_ - 1 - i) * cfg.hop;
    fr.f = cfg.f0;
    fr.v_rms = cfg.v0;
    frames_.push_back(std::move(fr));
  }
}

void TelemetryUnit::push_step(double delta_f, double v,
                              const std::vector<HarmonicTone>& tones) {
  ring_.push_back(RingEntry{delta_f, v, tones});
  while (ring_.size() > steps_per_window_) ring_.pop_front();
  if (v < cfg_.v0 - thr_.sag_precursor) {
    sag_run_ += cfg_.dt_step;
    sag_run_last_ = sag_run_;
  } else {
    sag_run_ = 0.0;
  }
}

TelemetryFrame TelemetryUnit::sample(double t) {
  TelemetryFrame fr;
  fr.t = t;
  fr.f = cfg_.f0 * (1.0 + ring_.back().delta_f);
  fr.v_rms = ring_.back().v;

  const std::size_t n = static_cast<std::size_t>(std::llround(cfg_.window * cfg_.pow_rate));
  const std::size_t per_step = n / steps_per_window_;
  fr.pow_samples.resize(n);
  const double w1 = 2.0 * std::numbers::pi * cfg_.f0;
  // The point-on-wave channel is gain-normalized (AGC in front of the
  // harmonic analyzer): the voltage envelope lives in v_rms, while these
  // samples carry waveform shape only.  Otherwise a deep sag's stepped
  // envelope would leak into the harmonic bins and read as distortion.
  const double amp = std::numbers::sqrt2 * cfg_.v0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < steps_per_window_; ++k) {
    const RingEntry& e = ring_[k];
    for (std::size_t m = 0; m < per_step; ++m, ++j) {
      const double ts = t - cfg_.window + static_cast<double>(j + 1) / cfg_.pow_rate;
      double x = std::sin(w1 * ts);
      for (const auto& tone : e.tones)
        x += tone.amplitude * std::sin(w1 * static_cast<double>(tone.order) * ts);
      fr.pow_samples[j] = amp * x;
    }
  }

  frames_.push_back(fr);
  while (frames_.size() > frames_per_window_) frames_.pop_front();
  return fr;
}

FeatureVector TelemetryUnit::extract_features() {
  FeatureVector f;
  double min_v = cfg_.v0;
  for (const auto& e : ring_) min_v = std::min(min_v, e.v);
  f.sag_depth = std::max(0.0, cfg_.v0 - min_v);

  const bool window_has_dip = min_v < cfg_.v0 - thr_.sag_precursor;
  if (sag_run_ > 0.0)
    f.sag_duration = sag_run_;
  else if (window_has_dip)
    f.sag_duration = sag_run_last_;
  else
    f.sag_duration = 0.0;

  f.rocof = rocof_slope(frames_);
  f.thd = frames_.back().pow_samples.empty()
              ? 0.0
              : thd_ratio(frames_.back().pow_samples, cfg_.pow_rate, cfg_.f0);
  double dfm = 0.0;
  for (const auto& fr : frames_) dfm = std::max(dfm, std::abs(fr.f - cfg_.f0) / cfg_.f0);
  f.df_mag = dfm;

  const bool event = f.sag_depth > thr_.sag_precursor || f.thd > thr_.thd_precursor ||
                     std::abs(f.rocof) > thr_.rocof_precursor ||
                     f.df_mag > thr_.df_precursor;
  event_hops_ = event ? event_hops_ + 1 : 0;
  f.persistence = event_hops_ / static_cast<int>(frames_per_window_);

  f.t_since_precursor = have_precursor_ ? frames_.back().t - last_precursor_t_
                                        : FeatureVector::kNoPrecursor;
  return f;
}

std::optional<PrecursorEvent> TelemetryUnit::detect_event(const FeatureVector& f,
                                                          double t) {
  const bool sag_p = f.sag_depth > thr_.sag_precursor;
  const bool thd_p = f.thd > thr_.thd_precursor;
  const bool rocof_p = std::abs(f.rocof) > thr_.rocof_precursor;
  const bool df_p = f.df_mag > thr_.df_precursor;
  if (!(sag_p || thd_p || rocof_p || df_p)) return std::nullopt;

  const bool fault_level = f.sag_depth > thr_.sag_fault || f.thd > thr_.thd_fault ||
                           std::abs(f.rocof) > thr_.rocof_fault ||
                           f.df_mag > thr_.df_fault;
  if (fault_level) return std::nullopt;  // that is the pulse itself, not a precursor

  PrecursorEvent ev;
  ev.t_detect = t;
  if (sag_p)
    ev.kind = PrecursorKind::Sag;
  else if (thd_p)
    ev.kind = PrecursorKind::HarmonicBurst;
  else
    ev.kind = PrecursorKind::LoadFluctuation;
  ev.features = f;
  last_precursor_t_ = t;
  have_precursor_ = true;
  return ev;
}

}  // namespace nmg
