#pragma once
// fixed-step time-domain simulation of block-diagram plants under feedback.
// each rational factor is discretized exactly (zero-order hold, with a
// first-order-hold corrector for smoothly varying loop signals); transport
// delays are integer-step ring buffers.

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "relaytune/model.hpp"

namespace relaytune {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimDivergence : SimError {
  double t;
  explicit SimDivergence(double time)
      : SimError("simulation diverged (state beyond guard)"), t(time) {}
};

struct SimConfig {
  double internal_step = 1e-4;  // integration step, s
  double log_step = 1e-3;       // logging / sampled-controller step, s
  double duration = 20.0;       // s
  double noise_sigma = 0.0;     // gaussian measurement noise on pv, per log sample
  double bias = 0.0;            // constant offset added to the plant input
  uint64_t seed = 0;
  double divergence_guard = 1e6;
};

struct TimeSeries {
  double dt = 1e-3;
  std::vector<double> t;   // log instants
  std::vector<double> r;   // setpoint
  std::vector<double> pv;  // measured process variable (noise included)
  std::vector<double> u;   // control law output (bias excluded)
};

// causal control law evaluated on the loop error. laws that sample at the log
// rate (relay family) recompute on log-step boundaries and hold in between;
// `k` is the internal step index and `steps_per_sample` tells them the ratio.
class ControlLaw {
 public:
  virtual ~ControlLaw() = default;
  virtual void reset() = 0;
  // control value over [k dt, (k+1) dt); may latch internal switching state
  virtual double output(double e, double e_rate, int64_t k) = 0;
  // side-effect-free estimate of output(e_next, ..., k + 1) for the corrector
  virtual double peek(double e_next, double e_rate_next, int64_t k_next) const = 0;
  // advance integral state from t to t+dt given both error endpoints
  virtual void commit(double e_t, double e_next, double dt) {}
};

class PDLaw : public ControlLaw {
 public:
  explicit PDLaw(PDGains g) : g_(g) {}
  void reset() override {}
  double output(double e, double e_rate, int64_t) override { return g_.kp * e + g_.kd * e_rate; }
  double peek(double e, double e_rate, int64_t) const override {
    return g_.kp * e + g_.kd * e_rate;
  }

 private:
  PDGains g_;
};

class PILaw : public ControlLaw {
 public:
  explicit PILaw(PIGains g) : g_(g) {}
  void reset() override {
    integral_ = 0.0;
    e_last_ = 0.0;
  }
  double output(double e, double, int64_t) override {
    e_last_ = e;
    return g_.kp * e + integral_;
  }
  double peek(double e_next, double, int64_t) const override {
    return g_.kp * e_next + integral_ + 0.5 * g_.ki * dt_hint_ * (e_last_ + e_next);
  }
  void commit(double e_t, double e_next, double dt) override {
    dt_hint_ = dt;
    integral_ += 0.5 * g_.ki * dt * (e_t + e_next);
  }
  double integral() const { return integral_; }

 private:
  PIGains g_;
  double integral_ = 0.0;
  double e_last_ = 0.0;
  double dt_hint_ = 1e-4;
};

class ZeroLaw : public ControlLaw {
 public:
  void reset() override {}
  double output(double, double, int64_t) override { return 0.0; }
  double peek(double, double, int64_t) const override { return 0.0; }
};

namespace detail {

// one rational factor in controllable canonical form, discretized exactly
struct SSBlock {
  int n = 0;
  double ad[2][2] = {{1, 0}, {0, 1}};
  double b0[2] = {0, 0};  // foh weight on u(t)
  double b1[2] = {0, 0};  // foh weight on u(t+dt)
  double bz[2] = {0, 0};  // zoh input matrix
  double cv[2] = {0, 0};
  double d = 0.0;
  double x[2] = {0, 0};
  int dlen = 0;
  std::vector<double> ring;
  int head = 0;

  void init(const RationalBlock& b, double dt);
  void reset();
  bool state_only_output() const { return dlen >= 1 || (n >= 1 && d == 0.0); }
  double raw_output(double u_t) const {
    double y = d * u_t;
    for (int i = 0; i < n; ++i) y += cv[i] * x[i];
    return y;
  }
  double output_at_t(double u_t) const { return dlen ? ring[size_t(head)] : raw_output(u_t); }
  double peek_next(double u_zoh) const;
  double commit(double u_t, double u_next);  // returns output at t+dt
};

}  // namespace detail

class FeedbackSim;

// compiled series chain; stages are exact-discretized blocks or nested
// feedback loops. last stage must have state-only output so the loop error
// at the current instant never needs the current input (no algebraic loop).
class Chain {
 public:
  Chain() = default;
  Chain(const BlockDiagram& d, double dt);
  Chain(Chain&&) noexcept;
  Chain& operator=(Chain&&) noexcept;
  ~Chain();

  void reset();
  double output() const { return out_; }
  bool has_rate() const { return rate_ok_; }
  double rate() const;                 // input of the trailing integrator
  double peek(double u_zoh) const;     // predicted output at t+dt, read-only
  double peek_rate(double u_zoh) const;
  double commit(double u_t, double u_next, int64_t k);
  double max_abs_state() const;
  // zero the velocity-like tail states (used by the ground-contact clamp)
  void clamp_tail_states();

 private:
  struct Stage;
  std::vector<Stage> stages_;
  double out_ = 0.0;
  bool rate_ok_ = false;
  friend class FeedbackSim;
};

// unity negative feedback of a control law around a chain, advanced with a
// one-pass predictor/corrector so smooth loops converge at O(dt^2)
class FeedbackSim {
 public:
  FeedbackSim(std::unique_ptr<ControlLaw> law, const BlockDiagram& plant, double dt);
  void reset();
  double output() const { return chain_.output(); }
  double rate() const;
  double peek(double r_next) const;  // predicted output under held setpoint
  // advance one internal step; returns (y_t, y_next) via out params
  void commit(double r_t, double r_next, double rdot_t, double rdot_next, int64_t k);
  double last_u() const { return u_last_; }
  ControlLaw& law() { return *law_; }
  Chain& chain() { return chain_; }

 private:
  std::unique_ptr<ControlLaw> law_;
  Chain chain_;
  double dt_ = 1e-4;
  double u_last_ = 0.0;
  double y_prev_ = 0.0;  // numeric rate fallback
  friend class Chain;
};

struct Setpoint {
  std::function<double(double)> value;
  std::function<double(double)> rate;  // optional; nullptr treated as zero
  static Setpoint step(double level) {
    return {[level](double) { return level; }, nullptr};
  }
};

// closed-loop run of `law` around `plant` with measurement noise and input
// bias; logs at cfg.log_step
TimeSeries simulate(const BlockDiagram& plant, ControlLaw& law, const Setpoint& sp,
                    const SimConfig& cfg);

// mean squared error of the unit-step response over [0, t_s], noiseless,
// trapezoid rule on the internal grid. throws SimDivergence past the guard.
double ise_unit_step(const PDGains& c, const BlockDiagram& plant, double t_s,
                     double internal_step = 1e-4, double divergence_guard = 1e6);

}  // namespace relaytune
