#pragma once
// modified relay feedback: a relay whose switching thresholds are fractions
// (set by beta) of the last error extrema, so the closed loop settles into a
// limit cycle where the plant phase equals -180 deg + arcsin(beta). also the
// limit-cycle detector and the normalization of one steady cycle into the
// classifier input.

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "relaytune/sim.hpp"

namespace relaytune {

struct MRFTError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// relay test ran past its time cap without a steady cycle
struct NoConvergence : MRFTError {
  using MRFTError::MRFTError;
};
// steady cycle does not fit the classifier input width
struct InputOverflow : MRFTError {
  using MRFTError::MRFTError;
};

struct MRFTConfig {
  double beta = -0.73;  // hysteresis fraction, |beta| < 1
  double h = 0.1;       // relay amplitude, command units
};

// relay law; recomputes on sampled-controller boundaries and holds in between.
// switch levels are b1 = -beta*e_min and b2 = beta*e_max, where e_max/e_min
// are the error extrema of the running half-wave (both start at 0). each
// half-wave goes through two phases:
//   at +h the law hunts the error maximum; once the error has retreated from
//   it by a small margin the maximum is confirmed and the switch is armed;
//   the output then drops to -h at the first sample with e <= -b2.
//   the -h half-wave mirrors this through the minimum and e >= b1.
// gating each switch behind its own half-wave's peak keeps sample noise from
// chattering the relay, while the plain level test (rather than a crossing
// test) means the relay can never be stranded on the wrong side of a level.
// decisions run on a short moving average of the sampled error, which removes
// the early-switch bias noise would otherwise cause at the levels; the group
// delay is the same in every run, so paired comparisons cancel it.
class MRFTLaw : public ControlLaw {
 public:
  MRFTLaw(MRFTConfig cfg, int steps_per_sample);
  void reset() override;
  double output(double e, double e_rate, int64_t k) override;
  double peek(double, double, int64_t) const override { return u_; }

  double e_max() const { return emax_; }
  double e_min() const { return emin_; }
  bool positive() const { return positive_; }
  // error-filter length in decision samples; the filter starts empty after
  // reset/prime, so the first decision sees its input unaveraged
  static constexpr int filter_width = 5;
  // inject mid-oscillation state: confirmed extrema, latch, armed switch
  // (threshold unit tests, and handover from another controller)
  void prime(double e_max, double e_min, bool last_positive);

 private:
  void update(double e);

  MRFTConfig cfg_;
  int rate_;
  double margin_frac_ = 0.12;  // extremum-confirmation retreat, fraction of span
  double u_ = 0.0;
  bool positive_ = false;
  bool armed_ = false;              // this half-wave's extremum is confirmed
  double emax_ = 0.0, emin_ = 0.0;  // confirmed extrema (emax >= 0 >= emin)
  double cur_ = 0.0;                // running extremum of this half-wave
  double win_[filter_width] = {};   // ring of recent sampled errors
  int win_n_ = 0, win_i_ = 0;
};

// one full cycle of the steady limit cycle, sampled at the logging step
struct OscillationRecord {
  double a0 = 0.0;      // half peak-to-peak of pv
  double omega0 = 0.0;  // rad/s
  double period = 0.0;  // s
  double t_high = 0.0;  // time spent at +h within the cycle, s
  double t_low = 0.0;
  double dt = 1e-3;
  std::vector<double> pv;
  std::vector<double> u;
  bool steady = false;
};

// scans forward for the first three consecutive full cycles (delimited by
// rising relay switches) that agree pairwise within 2% in period and
// amplitude; returns the third. nullopt while no such triple exists.
std::optional<OscillationRecord> detect_steady_oscillation(const TimeSeries& ts);

using InputMatrix = Eigen::Matrix<float, 2, Eigen::Dynamic>;

// one steady cycle -> 2 x n_s input: rows [pv; u], each zero-centered and
// scaled to unit peak over the cycle, right-zero-padded to n_s.
// throws InputOverflow when the cycle is longer than n_s samples.
InputMatrix preprocess_to_input(const OscillationRecord& osc, int n_s);

struct MRFTOutcome {
  TimeSeries ts;
  OscillationRecord osc;
};

// run the relay test on a plant at setpoint zero until steady; throws
// NoConvergence if cfg.duration elapses first
MRFTOutcome run_relay_test(const BlockDiagram& plant, const MRFTConfig& mrft,
                           const SimConfig& sim);

}  // namespace relaytune
