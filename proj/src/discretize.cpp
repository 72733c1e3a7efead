#include "relaytune/discretize.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "relaytune/numerics.hpp"
#include "relaytune/sim.hpp"

namespace relaytune {

namespace {

constexpr double kTableH = 0.1;         // relay amplitude for the table runs
constexpr double kSampleDt = 1e-3;      // classifier sample interval, s
constexpr double kInputHeadroom = 1.10; // width slack over the slowest cycle

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void check_band_params(double j_star, double tol) {
  if (!(j_star > tol) || !(tol > 0.0))
    throw DiscretizeError("discretize: need j_star > tol > 0");
}

// bounds-only validation; build_cascade does not need a plant builder
void validate_bounds(const DomainBox& box) {
  if (box.lo.size() == 0 || box.lo.size() != box.hi.size())
    throw DiscretizeError("domain box: empty or mismatched bounds");
  if (int(box.axis_names.size()) != box.dims())
    throw DiscretizeError("domain box: one name per axis required");
  for (int a = 0; a < box.dims(); ++a)
    if (!(box.lo[a] > 0.0) || !(box.hi[a] >= box.lo[a]))
      throw DiscretizeError("domain box: bounds must satisfy 0 < lo <= hi");
}

std::vector<Eigen::VectorXd> coarse_points(const DomainBox& box) {
  auto pts = box.corners();
  Eigen::VectorXd c = box.center();
  for (const auto& q : pts)
    if (q == c) return pts;  // fully degenerate box: center is a corner
  pts.push_back(c);
  return pts;
}

// ---- joint-cost-calibrated axis marching ----------------------------------

struct Node {
  Eigen::VectorXd p;
  TunedPD tuned;
  bool clamped = false;  // landed on the high face of its chain axis
};

double joint_cost(const Node& a, const BlockDiagram& plant_a, const Node& b,
                  const BlockDiagram& plant_b) {
  return std::max(deterioration(a.tuned.gains, b.tuned.gains, plant_b, b.tuned.t_s),
                  deterioration(b.tuned.gains, a.tuned.gains, plant_a, a.tuned.t_s));
}

// extend a chain from nodes[start] along one axis: each step is expanded then
// bisected in log space until the joint deterioration with the previous node
// sits within tol/2 of j_star, leaving half the band for the final refit.
// the last step may stop short on the box face. returns the new node indices.
std::vector<int> march_axis(const DomainBox& box, int axis, int start,
                            std::vector<Node>& nodes,
                            std::vector<std::pair<int, int>>& edges,
                            const TuningSpec& spec, double j_star, double tol) {
  std::vector<int> added;
  const double xhi = std::log(box.hi[axis]);
  const double span = xhi - std::log(box.lo[axis]);
  if (span <= 1e-12) return added;

  int cur = start;
  int guard = 0;
  while (std::log(nodes[cur].p[axis]) < xhi - 1e-9) {
    if (++guard > 64)
      throw DiscretizeError("discretize: axis " + box.axis_names[axis] +
                            " march did not terminate");
    const double x0 = std::log(nodes[cur].p[axis]);
    const BlockDiagram plant_cur = box.make(nodes[cur].p);

    auto probe = [&](double d) {
      Node cand;
      cand.p = nodes[cur].p;
      cand.clamped = x0 + d >= xhi - 1e-9;
      cand.p[axis] = cand.clamped ? box.hi[axis] : std::exp(x0 + d);
      TuningSpec ws = spec;
      ws.init = nodes[cur].tuned.gains;
      ws.restarts = 1;  // exact warm start is enough while searching
      ws.t_s = 0.0;
      BlockDiagram plant_cand = box.make(cand.p);
      cand.tuned = optimize_pd(plant_cand, ws);
      double cost = joint_cost(nodes[cur], plant_cur, cand, plant_cand);
      return std::pair<Node, double>(std::move(cand), cost);
    };

    double d_lo = 0.0;
    double d = std::min(span / 8.0, xhi - x0);
    auto r = probe(d);
    while (r.second < j_star && !r.first.clamped) {
      d_lo = d;
      d = std::min(2.0 * d, xhi - x0);
      r = probe(d);
    }
    if (!(r.first.clamped && r.second <= j_star + 0.5 * tol)) {
      double d_hi = d;
      while (std::abs(r.second - j_star) > 0.5 * tol) {
        if (d_hi - d_lo < 1e-6 * span)
          throw DiscretizeError("discretize: joint cost cannot be brought to " +
                                fmt(j_star) + "% along axis " + box.axis_names[axis]);
        double mid = 0.5 * (d_lo + d_hi);
        r = probe(mid);
        (r.second < j_star ? d_lo : d_hi) = mid;
      }
    }

    // refit the accepted process with a jittered second start
    Node accepted = std::move(r.first);
    TuningSpec fs = spec;
    fs.init = accepted.tuned.gains;
    fs.restarts = 2;
    fs.t_s = 0.0;
    accepted.tuned = optimize_pd(box.make(accepted.p), fs);

    nodes.push_back(std::move(accepted));
    int ni = int(nodes.size()) - 1;
    edges.emplace_back(cur, ni);
    added.push_back(ni);
    cur = ni;
  }
  return added;
}

void fill_processes(DiscretizedDomain& d, const std::vector<Node>& nodes) {
  d.processes.resize(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    auto& pr = d.processes[i];
    char idbuf[80];
    std::snprintf(idbuf, sizeof idbuf, "%s-%03zu", d.name.c_str(), i);
    pr.id = idbuf;
    pr.params = nodes[i].p;
    pr.controller = nodes[i].tuned.gains;
    pr.q = nodes[i].tuned.q;
    pr.margin_deg = nodes[i].tuned.margin_deg;
    pr.t_s = nodes[i].tuned.t_s;
    pr.clamped = nodes[i].clamped;
  }
}

// table runs at the domain phase: amplitude ratios plus the input width that
// fits the slowest steady cycle with headroom
void attach_zeta(DiscretizedDomain& d) {
  d.table_h = kTableH;
  ZetaTable zt = compute_zeta_table(d, kTableH);
  double max_period = 0.0;
  for (size_t i = 0; i < d.processes.size(); ++i) {
    d.processes[i].zeta = zt.rows[i].zeta;
    d.processes[i].a0 = zt.rows[i].a0;
    d.processes[i].omega0 = zt.rows[i].omega0;
    max_period = std::max(max_period, 2.0 * kPi / zt.rows[i].omega0);
  }
  d.n_s = int(std::ceil(kInputHeadroom * max_period / kSampleDt));
}

void attach_costs(DiscretizedDomain& d) {
  std::vector<BlockDiagram> plants;
  std::vector<PDGains> ctrls;
  std::vector<double> tss;
  plants.reserve(d.processes.size());
  for (const auto& pr : d.processes) {
    plants.push_back(d.make(pr.params));
    ctrls.push_back(pr.controller);
    tss.push_back(pr.t_s);
  }
  d.costs = cost_matrix(plants, ctrls, tss);
}

// the far node of a chain step may sit on the box face, where the step was
// cut short and the joint cost is allowed to fall under the band
void check_edge_band(const DiscretizedDomain& d, int i, int k, double j_star, double tol) {
  double c = d.costs.jmax[i][k];
  bool below_ok = d.processes[k].clamped;
  if (c > j_star + tol || (!below_ok && c < j_star - tol))
    throw DiscretizeError("discretize: joint cost " + fmt(c) + "% between " +
                          d.processes[i].id + " and " + d.processes[k].id +
                          " falls outside [" + fmt(j_star - tol) + ", " +
                          fmt(j_star + tol) + "]%");
}

}  // namespace

// ---- DomainBox -------------------------------------------------------------

void DomainBox::validate() const {
  validate_bounds(*this);
  if (!make) throw DiscretizeError("domain box: no plant builder attached");
}

Eigen::VectorXd DomainBox::center() const {
  Eigen::VectorXd c(dims());
  for (int a = 0; a < dims(); ++a) c[a] = std::sqrt(lo[a] * hi[a]);
  return c;
}

std::vector<Eigen::VectorXd> DomainBox::corners() const {
  std::vector<Eigen::VectorXd> out;
  const int d = dims();
  for (int m = 0; m < (1 << d); ++m) {
    Eigen::VectorXd v(d);
    bool dup = false;
    for (int a = 0; a < d; ++a) {
      bool high = (m >> a) & 1;
      if (high && hi[a] == lo[a]) dup = true;  // degenerate axis repeats the low pick
      v[a] = high ? hi[a] : lo[a];
    }
    if (!dup) out.push_back(std::move(v));
  }
  return out;
}

bool DomainBox::contains(const Eigen::VectorXd& p, double rel_tol) const {
  if (p.size() != lo.size()) return false;
  for (int a = 0; a < dims(); ++a)
    if (p[a] < lo[a] * (1.0 - rel_tol) || p[a] > hi[a] * (1.0 + rel_tol)) return false;
  return true;
}

DomainBox attitude_box() {
  DomainBox b;
  b.name = "att";
  b.lo.resize(3);
  b.hi.resize(3);
  b.lo << 0.015, 0.2, 0.0005;
  b.hi << 0.3, 2.0, 0.1;
  b.axis_names = {"t_prop", "t_1", "tau"};
  b.make = [](const Eigen::VectorXd& p) { return inner_plant({p[0], p[1], p[2], 1.0}); };
  return b;
}

DomainBox altitude_box() {
  DomainBox b = attitude_box();
  b.name = "alt";
  return b;
}

DomainBox side_box() {
  DomainBox b;
  b.name = "side";
  b.lo.resize(2);
  b.hi.resize(2);
  b.lo << 0.015, 0.0005;
  b.hi << 0.3, 0.1;
  b.axis_names = {"t_2", "tau_side"};
  b.make = [](const Eigen::VectorXd& p) { return side_chain({p[0], p[1]}, 1.0); };
  return b;
}

// ---- distinguishing phase ---------------------------------------------------

PhaseResult find_distinguishing_phase(const DomainBox& box, const PhaseSearch& ps) {
  box.validate();
  if (ps.grid_points < 2 || !(ps.beta_lo < ps.beta_hi) || std::abs(ps.beta_lo) >= 1.0 ||
      std::abs(ps.beta_hi) >= 1.0)
    throw DiscretizeError("distinguishing phase: bad beta grid");

  auto pts = coarse_points(box);
  const int n = int(pts.size());
  std::vector<BlockDiagram> plants;
  plants.reserve(n);
  for (const auto& p : pts) plants.push_back(box.make(p));

  // a beta qualifies only when every coarse process oscillates there
  std::vector<double> betas;
  std::vector<std::vector<HarmonicBalance>> preds;
  for (int gi = 0; gi < ps.grid_points; ++gi) {
    double beta =
        ps.beta_lo + (ps.beta_hi - ps.beta_lo) * double(gi) / double(ps.grid_points - 1);
    std::vector<HarmonicBalance> row(n);
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) {
      auto s = solve_harmonic_balance(plants[k], beta, 1.0);
      if (s)
        row[k] = *s;
      else
        ok = false;
    }
    if (ok) {
      betas.push_back(beta);
      preds.push_back(std::move(row));
    }
  }
  if (betas.empty())
    throw DiscretizeError(
        "no distinguishing phase: no grid beta excites every coarse process");

  std::vector<TunedPD> tuned(n);
  for (int k = 0; k < n; ++k) tuned[k] = optimize_pd(plants[k], ps.tuning);

  // each rule carries its process' optimum as amplitude/frequency multiples;
  // transferring it to process j rescales by the oscillation predictions
  PhaseResult best;
  bool have = false;
  for (size_t b = 0; b < betas.size(); ++b) {
    const auto& hb = preds[b];
    double score = 0.0;
    bool first_rule = true;
    for (int i = 0; i < n; ++i) {
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double ra = hb[i].a0 / hb[j].a0;
        double rw = hb[i].omega0 / hb[j].omega0;
        PDGains c{tuned[i].gains.kp * ra, tuned[i].gains.kd * ra * rw};
        worst = std::max(worst, deterioration(c, tuned[j].gains, plants[j], tuned[j].t_s));
      }
      if (first_rule || worst < score) {
        score = worst;
        first_rule = false;
      }
    }
    if (!have || score < best.worst_pct ||
        (score == best.worst_pct && std::abs(betas[b]) < std::abs(best.beta))) {
      best.beta = betas[b];
      best.worst_pct = score;
      have = true;
    }
  }
  best.phi_d = std::asin(best.beta);
  return best;
}

// ---- cascade structure ------------------------------------------------------

CascadeStructure build_cascade(const ModelSplit& split, const DomainBox& box,
                               const CascadeProbe& probe) {
  if (!split) throw DiscretizeError("cascade: no split provided");
  validate_bounds(box);

  std::vector<Eigen::VectorXd> pts = box.corners();
  const size_t n_vertex = pts.size();
  pts.push_back(box.center());

  const int m = int(split(pts[0]).size());
  if (m == 0) throw DiscretizeError("cascade split: no factors");
  for (const auto& p : pts) {
    auto f = split(p);
    if (int(f.size()) != m)
      throw DiscretizeError("cascade split: factor count varies across the box");
    for (const auto& blk : f) {
      blk.validate();
      int dc = 0;
      while (blk.den[dc] == 0.0) ++dc;  // integrators contribute no dc gain
      if (blk.num.empty() || blk.num[0] == 0.0 ||
          std::abs(blk.num[0] - blk.den[dc]) >
              1e-9 * std::max(std::abs(blk.num[0]), std::abs(blk.den[dc])))
        throw DiscretizeError("cascade split: every factor must be unity gain at dc");
    }
  }

  // the chain grown so far, per evaluation point: closed loops stacked in
  // front of the factors absorbed since the last closure
  std::vector<BlockDiagram> prefix(pts.size());
  std::vector<bool> has_prefix(pts.size(), false);
  auto chain_at = [&](size_t v, int from, int to) {
    auto f = split(pts[v]);
    std::vector<BlockDiagram> parts;
    if (has_prefix[v]) parts.push_back(prefix[v]);
    for (int k = from; k < to; ++k) parts.push_back(BlockDiagram::leaf(f[k]));
    return parts.size() == 1 ? parts[0] : BlockDiagram::series(std::move(parts));
  };

  CascadeStructure out;
  int seg_start = 0;
  for (int i = 1; i < m; ++i) {
    bool fire = false;
    for (size_t v = 0; v < n_vertex && !fire; ++v) {
      BlockDiagram vi = chain_at(v, seg_start, i);
      auto hb = solve_harmonic_balance(vi, probe.beta, probe.h);
      if (!hb) continue;  // no prediction here, nothing to test against
      if (hb->a0 > probe.a0_max || hb->omega0 < probe.omega0_min) {
        fire = true;
        break;
      }
      auto f = split(pts[v]);
      std::complex<double> val = describing_function(hb->a0, probe.beta, probe.h) *
                                 freq_response(BlockDiagram::leaf(f[i]), hb->omega0) *
                                 freq_response(vi, hb->omega0);
      // at the prediction point the chain contributes exactly -1, so this is
      // -Re{G_next}; an integrator next factor sits on the zero boundary and
      // must not fire, hence the strict positive guard
      fire = val.real() > probe.re_tol;
    }
    if (fire) {
      CascadeLoop loop;
      for (int k = seg_start; k < i; ++k) loop.factor_indices.push_back(k);
      TunedPD star = optimize_pd(chain_at(pts.size() - 1, seg_start, i), probe.tuning);
      for (size_t v = 0; v < pts.size(); ++v) {
        BlockDiagram open_v = chain_at(v, seg_start, i);
        prefix[v] = BlockDiagram::feedback(BlockDiagram::pd(star.gains), std::move(open_v));
        has_prefix[v] = true;
      }
      out.loops.push_back(std::move(loop));
      seg_start = i;
    }
  }
  CascadeLoop last;
  for (int k = seg_start; k < m; ++k) last.factor_indices.push_back(k);
  out.loops.push_back(std::move(last));
  return out;
}

// ---- discretization ---------------------------------------------------------

const DiscreteProcess* DiscretizedDomain::find(const std::string& id) const {
  for (const auto& pr : processes)
    if (pr.id == id) return &pr;
  return nullptr;
}

DiscretizedDomain discretize_inner(const DomainBox& box, const TuningSpec& spec,
                                   double j_star, double tol) {
  box.validate();
  check_band_params(j_star, tol);

  DiscretizedDomain d;
  d.name = box.name;
  d.axis_names = box.axis_names;
  d.make = box.make;

  PhaseResult phase = find_distinguishing_phase(box, {25, -0.9, 0.9, spec});
  d.phi_d = phase.phi_d;
  d.beta = phase.beta;

  // greedy frontier expansion from the low corner: every axis is marched from
  // each node of the layer the previous axes produced
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;
  Node seed;
  seed.p = box.lo;
  seed.tuned = optimize_pd(box.make(seed.p), spec);
  nodes.push_back(std::move(seed));
  std::vector<int> layer{0};
  for (int a = 0; a < box.dims(); ++a) {
    std::vector<int> next = layer;
    for (int idx : layer) {
      auto added = march_axis(box, a, idx, nodes, edges, spec, j_star, tol);
      next.insert(next.end(), added.begin(), added.end());
    }
    layer = std::move(next);
  }

  fill_processes(d, nodes);
  d.neighbors = edges;
  attach_zeta(d);
  attach_costs(d);
  for (const auto& [i, k] : d.neighbors) check_edge_band(d, i, k, j_star, tol);
  return d;
}

namespace {

DiscretizedDomain discretize_outer_one(const DomainBox& box, const TuningSpec& spec,
                                       double j_star, double tol,
                                       const std::string& parent_id) {
  DiscretizedDomain d;
  d.name = box.name;
  d.axis_names = box.axis_names;
  d.make = box.make;
  d.parent_id = parent_id;

  PhaseResult phase = find_distinguishing_phase(box, {25, -0.9, 0.9, spec});
  d.phi_d = phase.phi_d;
  d.beta = phase.beta;

  // worst-case spacing: the first axis reacts hardest when the second sits at
  // its high face and vice versa at the low face, so those two lines set the
  // breakpoints and the grid is their tensor product
  std::vector<Node> line0, line1;
  std::vector<std::pair<int, int>> e0, e1;
  Node s0;
  s0.p = box.lo;
  s0.p[1] = box.hi[1];
  s0.tuned = optimize_pd(box.make(s0.p), spec);
  line0.push_back(std::move(s0));
  march_axis(box, 0, 0, line0, e0, spec, j_star, tol);
  if (std::log(box.hi[1]) - std::log(box.lo[1]) > 1e-12) {
    Node s1;
    s1.p = box.lo;
    s1.tuned = optimize_pd(box.make(s1.p), spec);
    line1.push_back(std::move(s1));
    march_axis(box, 1, 0, line1, e1, spec, j_star, tol);
  }

  const int nk = int(line0.size());
  const int nm = std::max<int>(1, int(line1.size()));
  std::vector<Node> grid(size_t(nk) * nm);
  auto at = [nk](int k, int mm) { return size_t(mm) * nk + k; };
  for (int mm = 0; mm < nm; ++mm) {
    for (int k = 0; k < nk; ++k) {
      Node& cell = grid[at(k, mm)];
      if (mm == nm - 1) {
        cell = line0[k];  // marched at the high face of axis 1
      } else if (k == 0) {
        cell = line1[mm];
      } else {
        cell.p = line0[k].p;
        cell.p[1] = line1[mm].p[1];
        TuningSpec ws = spec;
        ws.init = grid[at(k - 1, mm)].tuned.gains;
        ws.restarts = 2;
        ws.t_s = 0.0;
        cell.tuned = optimize_pd(box.make(cell.p), ws);
      }
    }
  }

  fill_processes(d, grid);
  for (int mm = 0; mm < nm; ++mm)
    for (int k = 0; k + 1 < nk; ++k)
      d.neighbors.emplace_back(int(at(k, mm)), int(at(k + 1, mm)));
  for (int k = 0; k < nk; ++k)
    for (int mm = 0; mm + 1 < nm; ++mm)
      d.neighbors.emplace_back(int(at(k, mm)), int(at(k, mm + 1)));

  attach_zeta(d);
  attach_costs(d);

  // marched lines must meet the band; everywhere else the spacing is at worst
  // conservative, so only the upper bound binds
  for (const auto& [i, k] : d.neighbors) {
    int ki = i % nk, mi = i / nk, kk = k % nk, mk = k / nk;
    bool horizontal = mi == mk;
    bool worst_line = horizontal ? (mi == nm - 1) : (ki == 0);
    double c = d.costs.jmax[i][k];
    if (worst_line) {
      // a step cut short by the box face may fall under the band
      bool face_cut = horizontal ? line0[size_t(kk)].clamped : line1[size_t(mk)].clamped;
      if (c > j_star + tol || (!face_cut && c < j_star - tol))
        throw DiscretizeError("discretize: joint cost " + fmt(c) + "% between " +
                              d.processes[i].id + " and " + d.processes[k].id +
                              " falls outside [" + fmt(j_star - tol) + ", " +
                              fmt(j_star + tol) + "]%");
    } else if (c > j_star + tol) {
      throw DiscretizeError("discretize: joint cost " + fmt(c) + "% between " +
                            d.processes[i].id + " and " + d.processes[k].id +
                            " exceeds " + fmt(j_star + tol) + "%");
    }
  }
  return d;
}

}  // namespace

std::vector<DiscretizedDomain> discretize_outer(const DiscretizedDomain& inner,
                                                const DomainBox& side_template,
                                                const TuningSpec& spec, double j_star,
                                                double tol,
                                                const std::vector<int>& inner_subset) {
  side_template.validate();
  if (side_template.dims() != 2)
    throw DiscretizeError("outer discretization expects a two-axis side template");
  check_band_params(j_star, tol);
  if (!inner.make)
    throw DiscretizeError("outer discretization: inner domain has no plant builder");
  if (inner.processes.empty())
    throw DiscretizeError("outer discretization: empty inner domain");

  std::vector<int> sel = inner_subset;
  if (sel.empty()) {
    sel.resize(inner.processes.size());
    std::iota(sel.begin(), sel.end(), 0);
  }
  for (int ii : sel)
    if (ii < 0 || ii >= int(inner.processes.size()))
      throw DiscretizeError("outer discretization: inner index out of range");

  std::vector<DiscretizedDomain> out;
  out.reserve(sel.size());
  for (int ii : sel) {
    const DiscreteProcess& ip = inner.processes[ii];
    BlockDiagram closed =
        BlockDiagram::feedback(BlockDiagram::pd(ip.controller), inner.make(ip.params));
    auto side_make = side_template.make;
    DomainBox box;
    box.name = side_template.name + "@" + ip.id;
    box.lo = side_template.lo;
    box.hi = side_template.hi;
    box.axis_names = side_template.axis_names;
    box.make = [closed, side_make](const Eigen::VectorXd& p) {
      return BlockDiagram::series({closed, side_make(p)});
    };
    out.push_back(discretize_outer_one(box, spec, j_star, tol, ip.id));
  }
  return out;
}

ZetaTable compute_zeta_table(const DiscretizedDomain& d, double h) {
  if (!d.make) throw DiscretizeError("zeta table: domain has no plant builder attached");
  if (d.processes.empty()) throw DiscretizeError("zeta table: empty domain");
  ZetaTable t;
  for (const auto& pr : d.processes) {
    try {
      t.rows.push_back(measure_zeta(d.make(pr.params), d.beta, h));
    } catch (const std::exception& e) {
      throw DiscretizeError("zeta table: relay run failed for " + pr.id + ": " + e.what());
    }
    t.class_ids.push_back(pr.id);
  }
  return t;
}

// ---- persistence ------------------------------------------------------------

void write_domain(const std::string& dir, const DiscretizedDomain& d) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DiscretizeError("domain dir: cannot create " + dir);

  nlohmann::json j;
  j["format"] = 1;
  j["name"] = d.name;
  j["axis_names"] = d.axis_names;
  j["phi_d"] = d.phi_d;
  j["beta"] = d.beta;
  j["n_s"] = d.n_s;
  j["table_h"] = d.table_h;
  j["parent_id"] = d.parent_id;
  auto procs = nlohmann::json::array();
  for (const auto& p : d.processes) {
    nlohmann::json e;
    e["id"] = p.id;
    e["params"] = std::vector<double>(p.params.data(), p.params.data() + p.params.size());
    e["q"] = p.q;
    e["margin_deg"] = p.margin_deg;
    e["t_s"] = p.t_s;
    e["clamped"] = p.clamped;
    procs.push_back(std::move(e));
  }
  j["processes"] = std::move(procs);
  auto nb = nlohmann::json::array();
  for (const auto& [a, b] : d.neighbors) nb.push_back({a, b});
  j["neighbors"] = std::move(nb);
  {
    std::ofstream out(dir + "/domain.json");
    if (!out) throw DiscretizeError("domain dir: cannot open domain.json for writing");
    out << j.dump(2) << "\n";
    if (!out) throw DiscretizeError("domain dir: write failed for domain.json");
  }
  {
    std::ofstream out(dir + "/controllers.csv");
    if (!out) throw DiscretizeError("domain dir: cannot open controllers.csv for writing");
    out << "id,kp,kd\n";
    char buf[64];
    for (const auto& p : d.processes) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", p.controller.kp, p.controller.kd);
      out << p.id << "," << buf << "\n";
    }
    if (!out) throw DiscretizeError("domain dir: write failed for controllers.csv");
  }
  ZetaTable zt;
  for (const auto& p : d.processes) {
    zt.class_ids.push_back(p.id);
    zt.rows.push_back({p.zeta, p.a0, d.table_h, p.omega0});
  }
  write_zeta_csv(dir + "/zeta.csv", zt);
  std::vector<std::string> ids;
  for (const auto& p : d.processes) ids.push_back(p.id);
  write_cost_matrix_csv(dir + "/costmatrix.csv", ids, d.costs);
}

DiscretizedDomain read_domain(const std::string& dir,
                              std::function<BlockDiagram(const Eigen::VectorXd&)> make) {
  std::ifstream in(dir + "/domain.json");
  if (!in) throw DiscretizeError("domain dir: cannot open " + dir + "/domain.json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DiscretizeError(std::string("domain.json: ") + e.what());
  }

  DiscretizedDomain d;
  try {
    if (j.at("format").get<int>() != 1)
      throw DiscretizeError("domain.json: unsupported format");
    d.name = j.at("name").get<std::string>();
    d.axis_names = j.at("axis_names").get<std::vector<std::string>>();
    d.phi_d = j.at("phi_d").get<double>();
    d.beta = j.at("beta").get<double>();
    d.n_s = j.at("n_s").get<int>();
    d.table_h = j.at("table_h").get<double>();
    d.parent_id = j.at("parent_id").get<std::string>();
    for (const auto& e : j.at("processes")) {
      DiscreteProcess p;
      p.id = e.at("id").get<std::string>();
      auto pv = e.at("params").get<std::vector<double>>();
      p.params = Eigen::Map<const Eigen::VectorXd>(pv.data(), long(pv.size()));
      p.q = e.at("q").get<double>();
      p.margin_deg = e.at("margin_deg").get<double>();
      p.t_s = e.at("t_s").get<double>();
      p.clamped = e.at("clamped").get<bool>();
      d.processes.push_back(std::move(p));
    }
    for (const auto& e : j.at("neighbors"))
      d.neighbors.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  } catch (const DiscretizeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DiscretizeError(std::string("domain.json: ") + e.what());
  }

  for (const auto& [a, b] : d.neighbors)
    if (a < 0 || b < 0 || a >= int(d.processes.size()) || b >= int(d.processes.size()))
      throw DiscretizeError("domain.json: neighbor index out of range");

  // controllers join by id
  {
    std::ifstream cs(dir + "/controllers.csv");
    if (!cs) throw DiscretizeError("domain dir: cannot open " + dir + "/controllers.csv");
    std::string line;
    if (!std::getline(cs, line) || line.rfind("id,", 0) != 0)
      throw DiscretizeError("controllers.csv: missing header");
    size_t found = 0;
    while (std::getline(cs, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string id, kp, kd;
      if (!std::getline(ls, id, ',') || !std::getline(ls, kp, ',') || !std::getline(ls, kd))
        throw DiscretizeError("controllers.csv: short row");
      bool matched = false;
      for (auto& p : d.processes)
        if (p.id == id) {
          try {
            p.controller = {std::stod(kp), std::stod(kd)};
          } catch (const std::exception&) {
            throw DiscretizeError("controllers.csv: bad gain value for " + id);
          }
          matched = true;
          ++found;
          break;
        }
      if (!matched) throw DiscretizeError("controllers.csv: unknown process " + id);
    }
    if (found != d.processes.size())
      throw DiscretizeError("controllers.csv: missing gains for some processes");
  }

  ZetaTable zt;
  try {
    zt = read_zeta_csv(dir + "/zeta.csv");
  } catch (const std::exception& e) {
    throw DiscretizeError(std::string("zeta.csv: ") + e.what());
  }
  if (zt.class_ids.size() != d.processes.size())
    throw DiscretizeError("zeta.csv: row count disagrees with domain.json");
  for (size_t i = 0; i < d.processes.size(); ++i) {
    if (zt.class_ids[i] != d.processes[i].id)
      throw DiscretizeError("zeta.csv: process ids disagree with domain.json");
    d.processes[i].zeta = zt.rows[i].zeta;
    d.processes[i].a0 = zt.rows[i].a0;
    d.processes[i].omega0 = zt.rows[i].omega0;
  }

  std::vector<std::string> mat_ids;
  try {
    d.costs = read_cost_matrix_csv(dir + "/costmatrix.csv", &mat_ids);
  } catch (const std::exception& e) {
    throw DiscretizeError(std::string("costmatrix.csv: ") + e.what());
  }
  if (mat_ids.size() != d.processes.size())
    throw DiscretizeError("costmatrix.csv: size disagrees with domain.json");
  for (size_t i = 0; i < mat_ids.size(); ++i)
    if (mat_ids[i] != d.processes[i].id)
      throw DiscretizeError("costmatrix.csv: process ids disagree with domain.json");

  d.make = std::move(make);
  return d;
}

}  // namespace relaytune
