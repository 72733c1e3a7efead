#include "relaytune/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

namespace relaytune {

namespace detail {

namespace {
int poly_degree(const std::vector<double>& c) {
  int d = int(c.size()) - 1;
  while (d > 0 && c[size_t(d)] == 0.0) --d;
  return d;
}
}  // namespace

void SSBlock::init(const RationalBlock& b, double dt) {
  b.validate();
  n = poly_degree(b.den);
  const double lead = b.den[size_t(n)];
  double a[2] = {0, 0};
  for (int i = 0; i < n; ++i) a[i] = b.den[size_t(i)] / lead;
  double bb[3] = {0, 0, 0};
  for (int i = 0; i <= n; ++i)
    bb[i] = (i < int(b.num.size()) ? b.num[size_t(i)] : 0.0) / lead;
  d = bb[n];
  for (int i = 0; i < n; ++i) cv[i] = bb[i] - bb[n] * a[i];

  if (n > 0) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd B = Eigen::VectorXd::Zero(n);
    if (n == 1) {
      A(0, 0) = -a[0];
      B(0) = 1.0;
    } else {
      A(0, 1) = 1.0;
      A(1, 0) = -a[0];
      A(1, 1) = -a[1];
      B(1) = 1.0;
    }
    // van loan augmentation: exp of [[A B 0],[0 0 1],[0 0 0]] dt packs the
    // zoh input matrix and the ramp-response integral in one shot
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 2, n + 2);
    M.topLeftCorner(n, n) = A * dt;
    M.block(0, n, n, 1) = B * dt;
    M(n, n + 1) = dt;
    Eigen::MatrixXd E = M.exp();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) ad[i][j] = E(i, j);
      bz[i] = E(i, n);
      double br = E(i, n + 1);
      b1[i] = br / dt;
      b0[i] = bz[i] - b1[i];
    }
  }

  dlen = int(std::lround(b.delay / dt));
  ring.assign(size_t(dlen), 0.0);
  head = 0;
  x[0] = x[1] = 0.0;
}

void SSBlock::reset() {
  x[0] = x[1] = 0.0;
  std::fill(ring.begin(), ring.end(), 0.0);
  head = 0;
}

double SSBlock::peek_next(double u) const {
  if (dlen >= 2) return ring[size_t((head + 1) % dlen)];
  if (dlen == 1) return raw_output(u);
  double xn[2];
  for (int i = 0; i < n; ++i) {
    xn[i] = bz[i] * u;
    for (int j = 0; j < n; ++j) xn[i] += ad[i][j] * x[j];
  }
  double y = d * u;
  for (int i = 0; i < n; ++i) y += cv[i] * xn[i];
  return y;
}

double SSBlock::commit(double u_t, double u_next) {
  double y_raw_t = raw_output(u_t);
  double xn[2];
  for (int i = 0; i < n; ++i) {
    xn[i] = b0[i] * u_t + b1[i] * u_next;
    for (int j = 0; j < n; ++j) xn[i] += ad[i][j] * x[j];
  }
  for (int i = 0; i < n; ++i) x[i] = xn[i];
  if (dlen) {
    double out_next = (dlen == 1) ? y_raw_t : ring[size_t((head + 1) % dlen)];
    ring[size_t(head)] = y_raw_t;
    head = (head + 1) % dlen;
    return out_next;
  }
  return raw_output(u_next);
}

}  // namespace detail

struct Chain::Stage {
  detail::SSBlock blk;
  std::unique_ptr<FeedbackSim> fb;
  double out = 0.0;  // committed output at the current instant
  bool state_only = false;
};

Chain::Chain(Chain&&) noexcept = default;
Chain& Chain::operator=(Chain&&) noexcept = default;
Chain::~Chain() = default;

namespace {

std::unique_ptr<ControlLaw> law_from_node(const BlockDiagram& c) {
  if (c.kind == BlockDiagram::Kind::pd) return std::make_unique<PDLaw>(PDGains{c.kp, c.kd});
  if (c.kind == BlockDiagram::Kind::pi) return std::make_unique<PILaw>(PIGains{c.kp, c.ki});
  throw SimError("feedback controller must be a pd or pi element for simulation");
}

}  // namespace

Chain::Chain(const BlockDiagram& d, double dt) {
  std::function<void(const BlockDiagram&)> flatten = [&](const BlockDiagram& node) {
    switch (node.kind) {
      case BlockDiagram::Kind::series:
        for (const auto& c : node.children) flatten(c);
        break;
      case BlockDiagram::Kind::block: {
        Stage s;
        s.blk.init(node.blk, dt);
        s.state_only = s.blk.state_only_output();
        stages_.push_back(std::move(s));
        break;
      }
      case BlockDiagram::Kind::feedback: {
        Stage s;
        s.fb = std::make_unique<FeedbackSim>(law_from_node(node.children[0]), node.children[1],
                                             dt);
        s.state_only = true;
        stages_.push_back(std::move(s));
        break;
      }
      default:
        throw SimError("block diagram node not simulatable in the time domain");
    }
  };
  flatten(d);
  if (stages_.empty()) throw SimError("empty plant");
  if (!stages_.back().state_only)
    throw SimError("plant output must not have direct feedthrough");

  // rate source: trailing pure integrator fed by a state-only stage
  rate_ok_ = false;
  if (stages_.size() >= 2 && !stages_.back().fb) {
    const auto& b = stages_.back().blk;
    bool pure_int = (b.n == 1 && b.dlen == 0 && b.d == 0.0 && b.ad[0][0] == 1.0);
    if (pure_int && stages_[stages_.size() - 2].state_only) rate_ok_ = true;
  }
}

void Chain::reset() {
  for (auto& s : stages_) {
    if (s.fb)
      s.fb->reset();
    else
      s.blk.reset();
    s.out = 0.0;
  }
  out_ = 0.0;
}

double Chain::rate() const {
  const auto& last = stages_.back().blk;
  return last.cv[0] * stages_[stages_.size() - 2].out;
}

double Chain::peek(double u_zoh) const {
  double v = u_zoh;
  for (const auto& s : stages_) v = s.fb ? s.fb->peek(v) : s.blk.peek_next(v);
  return v;
}

double Chain::peek_rate(double u_zoh) const {
  double v = u_zoh;
  for (size_t i = 0; i + 1 < stages_.size(); ++i)
    v = stages_[i].fb ? stages_[i].fb->peek(v) : stages_[i].blk.peek_next(v);
  return stages_.back().blk.cv[0] * v;
}

double Chain::commit(double u_t, double u_next, int64_t k) {
  double v_t = u_t, v_next = u_next;
  for (auto& s : stages_) {
    if (s.fb) {
      // inner setpoint is the upstream signal; its slope over the step is known
      double rdot = (v_next - v_t) / s.fb->dt_;
      double y_t = s.fb->output();
      s.fb->commit(v_t, v_next, rdot, rdot, k);
      double y_next = s.fb->output();
      v_t = y_t;
      v_next = y_next;
      s.out = y_next;
    } else {
      double y_t = s.blk.output_at_t(v_t);
      double y_next = s.blk.commit(v_t, v_next);
      v_t = y_t;
      v_next = y_next;
      s.out = y_next;
    }
  }
  out_ = v_next;
  return out_;
}

double Chain::max_abs_state() const {
  double m = 0.0;
  for (const auto& s : stages_) {
    if (s.fb) {
      m = std::max(m, s.fb->chain().max_abs_state());
    } else {
      for (int i = 0; i < s.blk.n; ++i) m = std::max(m, std::abs(s.blk.x[i]));
    }
    m = std::max(m, std::abs(s.out));
  }
  return m;
}

void Chain::clamp_tail_states() {
  size_t n = stages_.size();
  for (size_t i = n >= 2 ? n - 2 : 0; i < n; ++i) {
    auto& s = stages_[i];
    if (!s.fb) {
      s.blk.x[0] = s.blk.x[1] = 0.0;
      std::fill(s.blk.ring.begin(), s.blk.ring.end(), 0.0);
    }
    s.out = 0.0;
  }
  out_ = 0.0;
}

FeedbackSim::FeedbackSim(std::unique_ptr<ControlLaw> law, const BlockDiagram& plant, double dt)
    : law_(std::move(law)), chain_(plant, dt), dt_(dt) {
  law_->reset();
}

void FeedbackSim::reset() {
  law_->reset();
  chain_.reset();
  u_last_ = 0.0;
  y_prev_ = 0.0;
}

double FeedbackSim::rate() const {
  if (chain_.has_rate()) return chain_.rate();
  return (chain_.output() - y_prev_) / dt_;
}

double FeedbackSim::peek(double r_next) const {
  double y_t = chain_.output();
  double u = law_->peek(r_next - y_t, -rate(), 0);
  return chain_.peek(u);
}

void FeedbackSim::commit(double r_t, double r_next, double rdot_t, double rdot_next, int64_t k) {
  double y_t = chain_.output();
  double rate_t = rate();
  double e_t = r_t - y_t;
  double u_t = law_->output(e_t, rdot_t - rate_t, k);
  double y_hat = chain_.peek(u_t);
  double rate_hat = chain_.has_rate() ? chain_.peek_rate(u_t) : rate_t;
  double e_hat = r_next - y_hat;
  double u_hat = law_->peek(e_hat, rdot_next - rate_hat, k + 1);
  law_->commit(e_t, e_hat, dt_);
  y_prev_ = y_t;
  u_last_ = u_t;
  chain_.commit(u_t, u_hat, k);
}

TimeSeries simulate(const BlockDiagram& plant, ControlLaw& law, const Setpoint& sp,
                    const SimConfig& cfg) {
  if (cfg.internal_step <= 0 || cfg.log_step <= 0 || cfg.duration <= 0)
    throw SimError("simulate: nonpositive step or duration");
  int64_t ratio = int64_t(std::llround(cfg.log_step / cfg.internal_step));
  if (ratio < 1 || std::abs(double(ratio) * cfg.internal_step - cfg.log_step) > 1e-12)
    throw SimError("simulate: log step must be an integer multiple of the internal step");

  const double dt = cfg.internal_step;
  Chain chain(plant, dt);
  law.reset();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  int64_t n_log = int64_t(std::floor(cfg.duration / cfg.log_step + 0.5));
  TimeSeries ts;
  ts.dt = cfg.log_step;
  ts.t.reserve(size_t(n_log));
  ts.r.reserve(size_t(n_log));
  ts.pv.reserve(size_t(n_log));
  ts.u.reserve(size_t(n_log));

  double y_prev = 0.0;
  for (int64_t j = 0; j < n_log; ++j) {
    double noise = cfg.noise_sigma > 0.0 ? gauss(rng) * cfg.noise_sigma : 0.0;
    for (int64_t i = 0; i < ratio; ++i) {
      int64_t k = j * ratio + i;
      double t = double(k) * dt;
      double y_t = chain.output();
      double rate_t = chain.has_rate() ? chain.rate() : (k == 0 ? 0.0 : (y_t - y_prev) / dt);
      double r_t = sp.value(t);
      double r_next = sp.value(t + dt);
      double rdot_t = sp.rate ? sp.rate(t) : 0.0;
      double rdot_next = sp.rate ? sp.rate(t + dt) : 0.0;
      double e_t = r_t - (y_t + noise);
      double u_t = law.output(e_t, rdot_t - rate_t, k);
      if (i == 0) {
        ts.t.push_back(t);
        ts.r.push_back(r_t);
        ts.pv.push_back(y_t + noise);
        ts.u.push_back(u_t);
      }
      double y_hat = chain.peek(u_t + cfg.bias);
      double rate_hat = chain.has_rate() ? chain.peek_rate(u_t + cfg.bias) : rate_t;
      double e_hat = r_next - (y_hat + noise);
      double u_hat = law.peek(e_hat, rdot_next - rate_hat, k + 1);
      law.commit(e_t, e_hat, dt);
      y_prev = y_t;
      chain.commit(u_t + cfg.bias, u_hat + cfg.bias, k);
    }
    if (std::abs(chain.output()) > cfg.divergence_guard)
      throw SimDivergence(double(j + 1) * cfg.log_step);
  }
  return ts;
}

double ise_unit_step(const PDGains& c, const BlockDiagram& plant, double t_s,
                     double internal_step, double divergence_guard) {
  if (t_s <= 0) throw SimError("ise: nonpositive horizon");
  const double dt = internal_step;
  FeedbackSim loop(std::make_unique<PDLaw>(c), plant, dt);
  int64_t n = int64_t(std::llround(t_s / dt));
  double acc = 0.0;
  double e_prev = 1.0;  // zero state, unit setpoint
  for (int64_t k = 0; k < n; ++k) {
    loop.commit(1.0, 1.0, 0.0, 0.0, k);
    double e = 1.0 - loop.output();
    acc += 0.5 * (e_prev * e_prev + e * e) * dt;
    e_prev = e;
    if (std::abs(loop.output()) > divergence_guard)
      throw SimDivergence(double(k + 1) * dt);
  }
  return acc / t_s;
}

}  // namespace relaytune
