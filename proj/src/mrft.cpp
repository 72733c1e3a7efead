#include "relaytune/mrft.hpp"

#include <algorithm>
#include <cmath>

#include "relaytune/numerics.hpp"

namespace relaytune {

MRFTLaw::MRFTLaw(MRFTConfig cfg, int steps_per_sample) : cfg_(cfg), rate_(steps_per_sample) {
  if (!(std::abs(cfg_.beta) < 1.0)) throw MRFTError("relay: |beta| must be below 1");
  if (!(cfg_.h > 0.0)) throw MRFTError("relay: amplitude must be positive");
  if (rate_ < 1) throw MRFTError("relay: steps per sample must be at least 1");
  // retreat margin that confirms an extremum, as a fraction of the confirmed
  // peak-to-peak span. two constraints pull on it: it must stay under
  // (1 - |beta|)/2 of the span so the peak confirms before the error falls
  // back to the switch level, and it should be as large as possible so sample
  // noise cannot fake a retreat (12% of span is about 7 sigma at the worst
  // supported noise-to-amplitude ratio).
  margin_frac_ = std::min(0.12, 0.45 * (1.0 - std::abs(cfg_.beta)));
  reset();
}

void MRFTLaw::reset() {
  // start latched positive and unarmed: the output holds +h through any dead
  // time (the flat error never confirms a maximum) and drops at the first
  // genuine retreat
  u_ = cfg_.h;
  positive_ = true;
  armed_ = false;
  emax_ = emin_ = 0.0;
  cur_ = 0.0;
  win_n_ = win_i_ = 0;
}

void MRFTLaw::prime(double e_max, double e_min, bool last_positive) {
  emax_ = std::max(e_max, 0.0);
  emin_ = std::min(e_min, 0.0);
  positive_ = last_positive;
  u_ = positive_ ? cfg_.h : -cfg_.h;
  // mid-oscillation: this half-wave's peak is taken as already passed, so the
  // next switch fires directly on its level
  armed_ = true;
  cur_ = positive_ ? emax_ : emin_;
  win_n_ = win_i_ = 0;
}

void MRFTLaw::update(double e_raw) {
  win_[win_i_] = e_raw;
  win_i_ = (win_i_ + 1) % filter_width;
  if (win_n_ < filter_width) ++win_n_;
  double e = 0.0;
  for (int i = 0; i < win_n_; ++i) e += win_[i];
  e /= win_n_;

  double margin = margin_frac_ * (emax_ - emin_);  // zero on the first wave
  if (positive_) {
    if (e > cur_) {
      cur_ = e;
    } else if (cur_ - e > margin) {
      // re-confirm freely: cur_ only ever grows within a half-wave, so a
      // second, higher crest updates the level before the switch fires
      emax_ = std::max(cur_, 0.0);
      armed_ = true;
    }
    if (armed_ && e <= -cfg_.beta * emax_) {
      positive_ = false;
      armed_ = false;
      cur_ = e;
    }
  } else {
    if (e < cur_) {
      cur_ = e;
    } else if (e - cur_ > margin) {
      emin_ = std::min(cur_, 0.0);
      armed_ = true;
    }
    if (armed_ && e >= -cfg_.beta * emin_) {
      positive_ = true;
      armed_ = false;
      cur_ = e;
    }
  }
  u_ = positive_ ? cfg_.h : -cfg_.h;
}

double MRFTLaw::output(double e, double, int64_t k) {
  if (k % rate_ == 0) update(e);
  return u_;
}

namespace {

bool within(double x, double y, double frac) {
  return std::abs(x - y) <= frac * std::max(std::abs(x), std::abs(y));
}

}  // namespace

std::optional<OscillationRecord> detect_steady_oscillation(const TimeSeries& ts) {
  const auto& u = ts.u;
  std::vector<size_t> starts;  // rising switch indices
  for (size_t i = 1; i < u.size(); ++i)
    if (u[i - 1] < 0.0 && u[i] > 0.0) starts.push_back(i);
  if (starts.size() < 4) return std::nullopt;

  // prefix sums for the smoothing window used by the amplitude measurement
  std::vector<double> pre(ts.pv.size() + 1, 0.0);
  for (size_t i = 0; i < ts.pv.size(); ++i) pre[i + 1] = pre[i] + ts.pv[i];
  auto smooth_at = [&](size_t i, size_t half) {
    size_t lo = i >= half ? i - half : 0;
    size_t hi = std::min(ts.pv.size(), i + half + 1);
    return (pre[hi] - pre[lo]) / double(hi - lo);
  };

  size_t n_cycles = starts.size() - 1;
  std::vector<double> period(n_cycles), amp(n_cycles);
  for (size_t c = 0; c < n_cycles; ++c) {
    size_t len = starts[c + 1] - starts[c];
    period[c] = double(len) * ts.dt;
    // amplitude on a lightly smoothed trace (window about a twentieth of the
    // cycle) so sample noise does not inflate the peak-to-peak reading
    size_t half = len / 40;
    double lo = smooth_at(starts[c], half), hi = lo;
    for (size_t i = starts[c]; i < starts[c + 1]; ++i) {
      double v = smooth_at(i, half);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    amp[c] = 0.5 * (hi - lo);
  }

  for (size_t c = 2; c < n_cycles; ++c) {
    bool ok = true;
    for (size_t a = c - 2; a <= c && ok; ++a)
      ok = amp[a] > 0.0 && period[a] >= 10.0 * ts.dt;
    for (size_t a = c - 2; a <= c && ok; ++a)
      for (size_t b = a + 1; b <= c && ok; ++b)
        ok = within(period[a], period[b], 0.02) && within(amp[a], amp[b], 0.02);
    if (!ok) continue;

    OscillationRecord rec;
    rec.dt = ts.dt;
    rec.period = period[c];
    rec.a0 = amp[c];
    rec.omega0 = 2.0 * kPi / rec.period;
    size_t hi_n = 0;
    for (size_t i = starts[c]; i < starts[c + 1]; ++i) hi_n += (u[i] > 0.0);
    rec.t_high = double(hi_n) * ts.dt;
    rec.t_low = rec.period - rec.t_high;
    rec.pv.assign(ts.pv.begin() + long(starts[c]), ts.pv.begin() + long(starts[c + 1]));
    rec.u.assign(u.begin() + long(starts[c]), u.begin() + long(starts[c + 1]));
    rec.steady = true;
    return rec;
  }
  return std::nullopt;
}

InputMatrix preprocess_to_input(const OscillationRecord& osc, int n_s) {
  int n = int(osc.pv.size());
  if (n == 0) throw MRFTError("preprocess: empty cycle");
  if (n > n_s)
    throw InputOverflow("preprocess: steady cycle exceeds the input width (plant slower than "
                        "the model's slowest process)");
  InputMatrix x = InputMatrix::Zero(2, n_s);
  const std::vector<double>* rows[2] = {&osc.pv, &osc.u};
  for (int r = 0; r < 2; ++r) {
    const auto& v = *rows[r];
    double mean = 0.0;
    for (double s : v) mean += s;
    mean /= n;
    double peak = 0.0;
    for (double s : v) peak = std::max(peak, std::abs(s - mean));
    if (peak == 0.0) throw MRFTError("preprocess: flat signal in cycle");
    for (int i = 0; i < n; ++i) x(r, i) = float((v[size_t(i)] - mean) / peak);
  }
  return x;
}

MRFTOutcome run_relay_test(const BlockDiagram& plant, const MRFTConfig& mrft,
                           const SimConfig& sim) {
  int rate = int(std::llround(sim.log_step / sim.internal_step));
  MRFTLaw law(mrft, rate);
  MRFTOutcome out;
  out.ts = simulate(plant, law, Setpoint::step(0.0), sim);
  auto osc = detect_steady_oscillation(out.ts);
  if (!osc)
    throw NoConvergence("relay test: no steady oscillation within the time cap");
  out.osc = std::move(*osc);
  return out;
}

}  // namespace relaytune
