#include "relaytune/model.hpp"

#include <algorithm>
#include <cmath>

#include "relaytune/numerics.hpp"

namespace relaytune {

namespace {

constexpr double kWMin = kBandLo;
constexpr double kWMax = kBandHi;
constexpr int kGridPoints = 400;

int poly_degree(const std::vector<double>& c) {
  int d = int(c.size()) - 1;
  while (d > 0 && c[size_t(d)] == 0.0) --d;
  return d;
}

std::complex<double> poly_eval(const std::vector<double>& c, std::complex<double> s) {
  std::complex<double> acc(0.0, 0.0);
  for (size_t i = c.size(); i-- > 0;) acc = acc * s + c[i];
  return acc;
}

double principal(double rad) {
  while (rad > kPi) rad -= 2.0 * kPi;
  while (rad <= -kPi) rad += 2.0 * kPi;
  return rad;
}

}  // namespace

void RationalBlock::validate() const {
  if (num.empty() || den.empty()) throw ModelError("block: empty polynomial");
  if (poly_degree(den) > 2) throw ModelError("block: order above 2, factor the plant");
  if (poly_degree(num) > poly_degree(den)) throw ModelError("block: improper transfer function");
  if (den[size_t(poly_degree(den))] == 0.0) throw ModelError("block: zero denominator");
  bool all_zero = true;
  for (double d : den)
    if (d != 0.0) all_zero = false;
  if (all_zero) throw ModelError("block: zero denominator");
  if (delay < 0.0) throw ModelError("block: negative delay");
  if (!(std::isfinite(delay))) throw ModelError("block: non-finite delay");
  for (double v : num)
    if (!std::isfinite(v)) throw ModelError("block: non-finite coefficient");
  for (double v : den)
    if (!std::isfinite(v)) throw ModelError("block: non-finite coefficient");
}

int RationalBlock::order() const { return poly_degree(den); }

int RationalBlock::relative_degree() const { return poly_degree(den) - poly_degree(num); }

int RationalBlock::integrators_at_dc() const {
  int n = 0;
  while (n < int(den.size()) && den[size_t(n)] == 0.0) ++n;
  return n;
}

std::complex<double> RationalBlock::eval(double omega) const {
  std::complex<double> s(0.0, omega);
  std::complex<double> g = poly_eval(num, s) / poly_eval(den, s);
  if (delay > 0.0) g *= std::exp(std::complex<double>(0.0, -omega * delay));
  return g;
}

RationalBlock gain_block(double k, double delay) { return RationalBlock{{k}, {1.0}, delay}; }
RationalBlock integrator_block() { return RationalBlock{{1.0}, {0.0, 1.0}, 0.0}; }
RationalBlock first_order_block(double t, double delay) {
  return RationalBlock{{1.0}, {1.0, t}, delay};
}

BlockDiagram BlockDiagram::leaf(RationalBlock b) {
  b.validate();
  BlockDiagram d;
  d.kind = Kind::block;
  d.blk = std::move(b);
  return d;
}

BlockDiagram BlockDiagram::pd(PDGains g) {
  BlockDiagram d;
  d.kind = Kind::pd;
  d.kp = g.kp;
  d.kd = g.kd;
  return d;
}

BlockDiagram BlockDiagram::pi(PIGains g) {
  BlockDiagram d;
  d.kind = Kind::pi;
  d.kp = g.kp;
  d.ki = g.ki;
  return d;
}

BlockDiagram BlockDiagram::series(std::vector<BlockDiagram> parts) {
  if (parts.empty()) throw ModelError("series: no children");
  BlockDiagram d;
  d.kind = Kind::series;
  d.children = std::move(parts);
  return d;
}

BlockDiagram BlockDiagram::parallel(std::vector<BlockDiagram> parts) {
  if (parts.empty()) throw ModelError("parallel: no children");
  BlockDiagram d;
  d.kind = Kind::parallel;
  d.children = std::move(parts);
  return d;
}

BlockDiagram BlockDiagram::feedback(BlockDiagram controller, BlockDiagram plant) {
  BlockDiagram d;
  d.kind = Kind::feedback;
  d.children.push_back(std::move(controller));
  d.children.push_back(std::move(plant));
  return d;
}

int BlockDiagram::relative_degree() const {
  switch (kind) {
    case Kind::block:
      return blk.relative_degree();
    case Kind::pd:
      return kd != 0.0 ? -1 : 0;
    case Kind::pi:
      return kp != 0.0 ? 0 : 1;
    case Kind::series: {
      int r = 0;
      for (const auto& c : children) r += c.relative_degree();
      return r;
    }
    case Kind::parallel: {
      int r = children[0].relative_degree();
      for (const auto& c : children) r = std::min(r, c.relative_degree());
      return r;
    }
    case Kind::feedback: {
      int r = children[0].relative_degree() + children[1].relative_degree();
      return r;
    }
  }
  return 0;
}

int BlockDiagram::integrators_at_dc() const {
  switch (kind) {
    case Kind::block:
      return blk.integrators_at_dc();
    case Kind::pd:
      return 0;
    case Kind::pi:
      return ki != 0.0 ? 1 : 0;
    case Kind::series: {
      int r = 0;
      for (const auto& c : children) r += c.integrators_at_dc();
      return r;
    }
    case Kind::parallel: {
      int r = 0;
      for (const auto& c : children) r = std::max(r, c.integrators_at_dc());
      return r;
    }
    case Kind::feedback:
      return 0;  // loop integrators give unity dc gain once closed
  }
  return 0;
}

std::complex<double> freq_response(const BlockDiagram& d, double omega) {
  switch (d.kind) {
    case BlockDiagram::Kind::block:
      return d.blk.eval(omega);
    case BlockDiagram::Kind::pd:
      return std::complex<double>(d.kp, omega * d.kd);
    case BlockDiagram::Kind::pi:
      return std::complex<double>(d.kp, -d.ki / omega);
    case BlockDiagram::Kind::series: {
      std::complex<double> g(1.0, 0.0);
      for (const auto& c : d.children) g *= freq_response(c, omega);
      return g;
    }
    case BlockDiagram::Kind::parallel: {
      std::complex<double> g(0.0, 0.0);
      for (const auto& c : d.children) g += freq_response(c, omega);
      return g;
    }
    case BlockDiagram::Kind::feedback: {
      std::complex<double> l =
          freq_response(d.children[0], omega) * freq_response(d.children[1], omega);
      return l / (1.0 + l);
    }
  }
  return {0.0, 0.0};
}

BlockDiagram inner_plant(const InnerParams& p) {
  if (p.t_prop <= 0 || p.t_1 <= 0 || p.tau < 0 || p.k_eq <= 0)
    throw ModelError("inner_plant: parameters must be positive");
  return BlockDiagram::series({
      BlockDiagram::leaf(gain_block(p.k_eq, p.tau)),
      BlockDiagram::leaf(first_order_block(p.t_prop)),
      BlockDiagram::leaf(first_order_block(p.t_1)),
      BlockDiagram::leaf(integrator_block()),
  });
}

BlockDiagram side_chain(const OuterParams& p, double k_side) {
  if (p.t_2 <= 0 || p.tau_side < 0 || k_side <= 0)
    throw ModelError("side_chain: parameters must be positive");
  return BlockDiagram::series({
      BlockDiagram::leaf(gain_block(k_side, p.tau_side)),
      BlockDiagram::leaf(first_order_block(p.t_2)),
      BlockDiagram::leaf(integrator_block()),
  });
}

BlockDiagram outer_plant(const BlockDiagram& inner_closed, const OuterParams& p, double k_side) {
  return BlockDiagram::series({inner_closed, side_chain(p, k_side)});
}

BlockDiagram yaw_plant(double t_prop, double tau, double k_eq) {
  if (t_prop <= 0 || tau < 0 || k_eq <= 0) throw ModelError("yaw_plant: bad parameters");
  return BlockDiagram::series({
      BlockDiagram::leaf(gain_block(k_eq, tau)),
      BlockDiagram::leaf(first_order_block(t_prop)),
      BlockDiagram::leaf(integrator_block()),
  });
}

std::complex<double> describing_function(double a0, double beta, double h) {
  if (a0 <= 0.0) throw ModelError("describing_function: amplitude must be positive");
  double c = 4.0 * h / (kPi * a0);
  return std::complex<double>(c * std::sqrt(1.0 - beta * beta), -c * beta);
}

namespace {

// phase aligned at the low end of the band: the principal value shifted so it
// sits near -90 deg per free integrator (delay and lag contributions are
// negligible at kWMin for the plants this library models)
double aligned_phase_at(const BlockDiagram& d, double omega) {
  double expected = -0.5 * kPi * d.integrators_at_dc();
  double phi = std::arg(freq_response(d, omega));
  while (phi - expected > kPi) phi -= 2.0 * kPi;
  while (phi - expected <= -kPi) phi += 2.0 * kPi;
  return phi;
}

double total_delay(const BlockDiagram& d) {
  if (d.kind == BlockDiagram::Kind::block) return d.blk.delay;
  double s = 0.0;
  for (const auto& c : d.children) s += total_delay(c);
  return s;
}

// walk the phase from (w_from, phi_from) up to w_to. step density follows the
// worst-case phase slope (transport delay dominates at high frequency) and any
// principal increment above pi/2 forces a geometric subdivision, so the
// unwrapped value stays unambiguous through lags, delays and resonances.
double continue_phase(const BlockDiagram& d, double w_from, double phi_from,
                      std::complex<double> g_from, double w_to, double tau_sum) {
  if (w_to == w_from) return phi_from;
  double w = w_from;
  double phi = phi_from;
  std::complex<double> g = g_from;
  const bool up = w_to > w_from;
  int guard = 0;
  while (w != w_to && guard++ < 200000) {
    double r = 1.26;  // ~10 points per decade baseline
    if (tau_sum > 0.0) r = std::min(r, 1.0 + kPi / (3.0 * tau_sum * std::max(w, w_to)));
    double next = up ? std::min(w * r, w_to) : std::max(w / r, w_to);
    int depth = 0;
    for (;;) {
      std::complex<double> gn = freq_response(d, next);
      double delta = std::arg(gn / g);
      if (std::abs(delta) > 0.5 * kPi && depth < 48 && std::abs(next / w - 1.0) > 1e-13) {
        next = w * std::sqrt(next / w);
        ++depth;
        continue;
      }
      phi += delta;
      w = next;
      g = gn;
      break;
    }
  }
  return phi;
}

double continue_phase(const BlockDiagram& d, double w_from, double phi_from,
                      std::complex<double> g_from, double w_to) {
  return continue_phase(d, w_from, phi_from, g_from, w_to, total_delay(d));
}

}  // namespace

double unwrapped_phase(const BlockDiagram& d, double omega) {
  if (omega <= kWMin) return aligned_phase_at(d, omega);
  double phi0 = aligned_phase_at(d, kWMin);
  return continue_phase(d, kWMin, phi0, freq_response(d, kWMin), omega);
}

std::optional<HarmonicBalance> solve_harmonic_balance(const BlockDiagram& plant, double beta,
                                                      double h) {
  if (beta <= -1.0 || beta >= 1.0) throw ModelError("harmonic balance: beta outside (-1, 1)");
  if (h <= 0.0) throw ModelError("harmonic balance: relay amplitude must be positive");
  const double target = -kPi + std::asin(beta);

  double w_prev = kWMin;
  double phi_prev = aligned_phase_at(plant, kWMin);
  std::complex<double> g_prev = freq_response(plant, kWMin);
  if (phi_prev <= target) return std::nullopt;  // already past the intersection at band edge

  const double ratio = std::pow(kWMax / kWMin, 1.0 / (kGridPoints - 1));
  for (int k = 1; k < kGridPoints; ++k) {
    double w = kWMin * std::pow(ratio, k);
    double phi = continue_phase(plant, w_prev, phi_prev, g_prev, w);
    if (phi <= target) {
      // bracket [w_prev, w]; phase continued from the bracket's low edge
      double wa = w_prev, pa = phi_prev;
      std::complex<double> ga = g_prev;
      auto f = [&](double x) { return continue_phase(plant, wa, pa, ga, x) - target; };
      double w0 = bisect(f, wa, w, 1e-9);
      double a0 = 4.0 * h * std::abs(freq_response(plant, w0)) / kPi;
      return HarmonicBalance{w0, a0};
    }
    w_prev = w;
    phi_prev = phi;
    g_prev = freq_response(plant, w);
  }
  return std::nullopt;
}

std::optional<Margins> loop_margins(const PDGains& c, const BlockDiagram& plant) {
  BlockDiagram loop = BlockDiagram::series({BlockDiagram::pd(c), plant});
  const double ratio = std::pow(kWMax / kWMin, 1.0 / (kGridPoints - 1));
  double w_prev = kWMin;
  double m_prev = std::abs(freq_response(loop, kWMin));
  for (int k = 1; k < kGridPoints; ++k) {
    double w = kWMin * std::pow(ratio, k);
    double m = std::abs(freq_response(loop, w));
    if ((m_prev - 1.0) == 0.0 || ((m_prev - 1.0) > 0.0) != ((m - 1.0) > 0.0)) {
      auto f = [&](double x) { return std::log(std::abs(freq_response(loop, x))); };
      double wc = bisect(f, w_prev, w, 1e-9);
      double phi = unwrapped_phase(loop, wc);
      return Margins{wc, 180.0 + phi * 180.0 / kPi};
    }
    w_prev = w;
    m_prev = m;
  }
  return std::nullopt;
}

}  // namespace relaytune
