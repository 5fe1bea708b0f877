#pragma once

#include <deque>
#include <optional>
#include <vector>

namespace nmg {

struct TelemetryCfg {
  double f0 = 50.0;       // Hz fundamental
  double v0 = 1.0;        // pu nominal voltage
  double window = 0.1;    // s analysis window (5 cycles at 50 Hz)
  double hop = 0.01;      // s frame hop
  double pow_rate = 1e4;  // Hz point-on-wave sample rate
  double dt_step = 1e-3;  // s plant step feeding the sample ring
};

// A harmonic component riding on the bus voltage, amplitude relative to the
// fundamental.
struct HarmonicTone {
  int order = 3;
  double amplitude = 0.1;
};

struct TelemetryFrame {
  double t = 0.0;
  double f = 50.0;     // Hz
  double v_rms = 1.0;  // pu
  std::vector<double> pow_samples;  // window ending at t, pow_rate * window long
};

// Event thresholds: a feature above its precursor level flags a precursor,
// above its fault level it is treated as the major event itself.
struct Thresholds {
  double sag_precursor = 0.05, sag_fault = 0.30;
  double thd_precursor = 0.05, thd_fault = 0.30;
  double rocof_precursor = 0.5, rocof_fault = 2.0;  // Hz/s, on |rocof|
  double df_precursor = 0.01, df_fault = 0.05;      // pu
};

struct FeatureVector {
  static constexpr double kNoPrecursor = 1e9;  // serialized sentinel for "never"

  double sag_depth = 0.0;     // pu, v0 - min v over window
  double sag_duration = 0.0;  // s, running time below the sag threshold
  double rocof = 0.0;         // Hz/s, signed least-squares slope of f
  double thd = 0.0;
  double df_mag = 0.0;        // pu, max |delta_f| over window
  int persistence = 0;        // consecutive whole windows with any feature above threshold
  double t_since_precursor = kNoPrecursor;
};

enum class PrecursorKind { Sag, HarmonicBurst, LoadFluctuation };

const char* precursor_kind_name(PrecursorKind k);

struct PrecursorEvent {
  double t_detect = 0.0;
  PrecursorKind kind = PrecursorKind::Sag;
  FeatureVector features;
};

// Least-squares slope of f(t) over the frame window; requires >= 2 frames.
double rocof_slope(const std::deque<TelemetryFrame>& frames);

// sqrt(sum of squared harmonic bin amplitudes) / fundamental amplitude, DFT
// bins at k*f0 up to order 25.  The window must hold an integer number of
// cycles; throws std::domain_error if the fundamental is absent.
double thd_ratio(const std::vector<double>& pow_samples, double pow_rate, double f0);

// Streaming sampler + feature extractor.  push_step() is called once per
// plant step; at hop boundaries sample() synthesizes the point-on-wave frame
// and extract_features()/detect_event() produce the analytics consumed by the
// protection and supervisory layers.  The ring starts pre-filled with
// quiescent samples so features are defined from t = 0.
class TelemetryUnit {
 public:
  TelemetryUnit(const TelemetryCfg& cfg, const Thresholds& thr);

  void push_step(double delta_f, double v, const std::vector<HarmonicTone>& tones);

  TelemetryFrame sample(double t);

  // Consumes the frame produced at this hop; updates persistence and the
  // running sag-duration counter.
  FeatureVector extract_features();

  std::optional<PrecursorEvent> detect_event(const FeatureVector& f, double t);

  const Thresholds& thresholds() const { return thr_; }

 private:
  struct RingEntry {
    double delta_f = 0.0;
    double v = 1.0;
    std::vector<HarmonicTone> tones;
  };

  TelemetryCfg cfg_;
  Thresholds thr_;
  std::size_t steps_per_window_ = 100;
  std::size_t frames_per_window_ = 10;
  std::deque<RingEntry> ring_;
  std::deque<TelemetryFrame> frames_;

  double sag_run_ = 0.0;       // current consecutive time below the sag threshold
  double sag_run_last_ = 0.0;  // held while the window still shows dip samples
  int event_hops_ = 0;
  double last_precursor_t_ = -1.0;
  bool have_precursor_ = false;
};

}  // namespace nmg
