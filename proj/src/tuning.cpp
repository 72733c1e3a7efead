#include "relaytune/tuning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>

#include "relaytune/numerics.hpp"

namespace relaytune {

namespace {

constexpr double kDivergedScore = 1e6;   // objective value for an unstable iterate
constexpr double kInstabilityCapPct = 1e4;

struct SimplexResult {
  Eigen::Vector2d x;
  double f = kDivergedScore;
};

// textbook Nelder-Mead in two dimensions (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5); stops on relative simplex diameter
SimplexResult nelder_mead(const std::function<double(const Eigen::Vector2d&)>& f,
                          std::array<Eigen::Vector2d, 3> x, int max_iter) {
  std::array<double, 3> fv{f(x[0]), f(x[1]), f(x[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    int lo = idx[0], mid = idx[1], hi = idx[2];

    double diam = std::max({(x[0] - x[1]).norm(), (x[0] - x[2]).norm(), (x[1] - x[2]).norm()});
    if (diam < 1e-4) break;

    Eigen::Vector2d c = 0.5 * (x[lo] + x[mid]);
    Eigen::Vector2d xr = c + (c - x[hi]);
    double fr = f(xr);
    if (fr < fv[lo]) {
      Eigen::Vector2d xe = c + 2.0 * (c - x[hi]);
      double fe = f(xe);
      if (fe < fr) {
        x[hi] = xe;
        fv[hi] = fe;
      } else {
        x[hi] = xr;
        fv[hi] = fr;
      }
    } else if (fr < fv[mid]) {
      x[hi] = xr;
      fv[hi] = fr;
    } else {
      Eigen::Vector2d xc = fr < fv[hi] ? Eigen::Vector2d(c + 0.5 * (xr - c))
                                       : Eigen::Vector2d(c + 0.5 * (x[hi] - c));
      double fc = f(xc);
      if (fc < std::min(fr, fv[hi])) {
        x[hi] = xc;
        fv[hi] = fc;
      } else {
        for (int i : {mid, hi}) {
          x[i] = x[lo] + 0.5 * (x[i] - x[lo]);
          fv[i] = f(x[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i : {1, 2})
    if (fv[i] < fv[best]) best = i;
  return {x[best], fv[best]};
}

// starting gains from the plant's critical point: half the ultimate gain,
// derivative time tied to the critical frequency
// loop gain below unity across the whole analysis band: no crossover exists,
// so the phase-margin constraint genuinely cannot bind
bool subunity_loop(const PDGains& c, const BlockDiagram& plant) {
  BlockDiagram loop = BlockDiagram::series({BlockDiagram::pd(c), plant});
  return std::abs(freq_response(loop, kBandLo)) < 1.0 &&
         std::abs(freq_response(loop, kBandHi)) < 1.0;
}

PDGains df_seed(const BlockDiagram& plant) {
  if (auto hb = solve_harmonic_balance(plant, 0.0, 1.0)) {
    double mag = hb->a0 * kPi / 4.0;  // |G| at the phase crossover for h = 1
    double ku = 1.0 / mag;
    return {0.5 * ku, 0.5 * ku / hb->omega0};
  }
  // phase never reaches -180 deg (delay-free low-order plant): scale off the
  // frequency where the plant gain itself passes unity
  double lo = 1e-2, hi = 1e3;
  auto gain = [&](double w) { return std::abs(freq_response(plant, w)) - 1.0; };
  double omega = 1.0;
  if (gain(lo) > 0.0 && gain(hi) < 0.0) {
    for (int i = 0; i < 200; ++i) {
      double midw = std::sqrt(lo * hi);
      (gain(midw) > 0.0 ? lo : hi) = midw;
    }
    omega = std::sqrt(lo * hi);
  }
  return {1.0, 1.0 / omega};
}

}  // namespace

TunedPD optimize_pd(const BlockDiagram& plant, const TuningSpec& spec) {
  if (!(spec.min_margin_deg > 0.0)) throw TuningError("optimize_pd: margin must be positive");
  if (spec.restarts < 1) throw TuningError("optimize_pd: needs at least one start");

  PDGains seed = spec.init.kp > 0.0 ? spec.init : df_seed(plant);
  if (!(seed.kd > 0.0)) seed.kd = seed.kp;

  double t_s = spec.t_s;
  if (t_s <= 0.0) {
    // ten closed-loop settling estimates of the seeded design loop
    auto m = loop_margins(seed, plant);
    double wc = m ? m->omega_crossover : 1.0;
    t_s = std::min(40.0 / wc, 20.0);
  }

  auto objective = [&](const Eigen::Vector2d& x) {
    PDGains c{std::exp(x[0]), std::exp(x[1])};
    double pen = 0.0;
    if (auto m = loop_margins(c, plant)) {
      double lack = spec.min_margin_deg - m->phase_margin_deg;
      if (lack > 0.0) pen = 1e3 * lack * lack;
    } else if (!subunity_loop(c, plant)) {
      // crossover fell outside the analysis band: the margin cannot be
      // certified there, so score it like a gross violation
      double lack = spec.min_margin_deg + 180.0;
      pen = 1e3 * lack * lack;
    }
    try {
      return ise_unit_step(c, plant, t_s) + pen;
    } catch (const SimDivergence&) {
      return kDivergedScore;
    }
  };

  std::mt19937_64 rng(0x5eedba5e);
  const double half_decade = 0.5 * std::log(10.0);
  std::uniform_real_distribution<double> jitter(-half_decade, half_decade);
  Eigen::Vector2d x0(std::log(seed.kp), std::log(seed.kd));

  SimplexResult best;
  for (int r = 0; r < spec.restarts; ++r) {
    Eigen::Vector2d c = x0;
    if (r > 0) c += Eigen::Vector2d(jitter(rng), jitter(rng));
    std::array<Eigen::Vector2d, 3> simplex{c, c + Eigen::Vector2d(0.3, 0.0),
                                           c + Eigen::Vector2d(0.0, 0.3)};
    SimplexResult res = nelder_mead(objective, simplex, 500);
    if (res.f < best.f) best = res;
  }

  TunedPD out;
  out.gains = {std::exp(best.x[0]), std::exp(best.x[1])};
  out.t_s = t_s;
  if (auto m = loop_margins(out.gains, plant)) {
    out.margin_deg = m->phase_margin_deg;
  } else if (subunity_loop(out.gains, plant)) {
    out.margin_deg = 90.0;  // no crossover anywhere: report a floor
  } else {
    throw TuningError("optimize_pd: crossover outside the analysis band");
  }
  if (best.f >= kDivergedScore || out.margin_deg < spec.min_margin_deg - 0.5)
    throw TuningError("optimize_pd: no stable gains meet the phase-margin floor");
  out.q = ise_unit_step(out.gains, plant, t_s);
  return out;
}

double deterioration(const PDGains& c_i, const PDGains& c_j, const BlockDiagram& g_j,
                     double t_s) {
  double q_ref;
  try {
    q_ref = ise_unit_step(c_j, g_j, t_s);
  } catch (const SimDivergence&) {
    throw TuningError("deterioration: reference controller unstable on its own plant");
  }
  if (!(q_ref > 0.0)) throw TuningError("deterioration: reference cost is zero");
  double q;
  try {
    q = ise_unit_step(c_i, g_j, t_s);
  } catch (const SimDivergence&) {
    return kInstabilityCapPct;
  }
  return (q - q_ref) / q_ref * 100.0;
}

CostMatrix cost_matrix(const std::vector<BlockDiagram>& processes,
                       const std::vector<PDGains>& controllers,
                       const std::vector<double>& t_s) {
  size_t n = processes.size();
  if (n != controllers.size() || n != t_s.size())
    throw TuningError("cost_matrix: length mismatch");
  CostMatrix cm;
  cm.j.assign(n, std::vector<double>(n, 0.0));
  cm.jmax.assign(n, std::vector<double>(n, 0.0));
  // entries are independent simulations; farm out rows, gather in index order
  std::vector<std::future<std::vector<double>>> rows(n);
  for (size_t i = 0; i < n; ++i)
    rows[i] = std::async(std::launch::async, [&, i] {
      std::vector<double> row(n);
      for (size_t k = 0; k < n; ++k)
        row[k] = deterioration(controllers[i], controllers[k], processes[k], t_s[k]);
      return row;
    });
  for (size_t i = 0; i < n; ++i) cm.j[i] = rows[i].get();
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < n; ++k) cm.jmax[i][k] = std::max(cm.j[i][k], cm.j[k][i]);
  return cm;
}

CostMatrix cost_matrix(const std::vector<BlockDiagram>& processes,
                       const std::vector<PDGains>& controllers, double t_s) {
  return cost_matrix(processes, controllers, std::vector<double>(processes.size(), t_s));
}

void write_cost_matrix_csv(const std::string& path,
                           const std::vector<std::string>& process_ids,
                           const CostMatrix& cm) {
  size_t n = cm.j.size();
  if (process_ids.size() != n) throw TuningError("cost matrix csv: id count mismatch");
  std::ofstream out(path);
  if (!out) throw TuningError("cost matrix csv: cannot open " + path);
  nlohmann::json hdr{{"processes", process_ids}};
  out << hdr.dump() << "\n";
  out << "matrix,process";
  for (const auto& id : process_ids) out << "," << id;
  out << "\n";
  char buf[32];
  auto rows = [&](const char* name, const std::vector<std::vector<double>>& m) {
    for (size_t i = 0; i < n; ++i) {
      out << name << "," << process_ids[i];
      for (size_t k = 0; k < n; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", m[i][k]);
        out << "," << buf;
      }
      out << "\n";
    }
  };
  rows("j", cm.j);
  rows("jmax", cm.jmax);
  if (!out) throw TuningError("cost matrix csv: write failed for " + path);
}

CostMatrix read_cost_matrix_csv(const std::string& path,
                                std::vector<std::string>* process_ids) {
  std::ifstream in(path);
  if (!in) throw TuningError("cost matrix csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw TuningError("cost matrix csv: missing header");
  auto hdr = nlohmann::json::parse(line);
  auto ids = hdr.at("processes").get<std::vector<std::string>>();
  size_t n = ids.size();
  if (process_ids) *process_ids = ids;
  std::getline(in, line);  // column names
  CostMatrix cm;
  cm.j.assign(n, std::vector<double>(n, 0.0));
  cm.jmax.assign(n, std::vector<double>(n, 0.0));
  for (auto* m : {&cm.j, &cm.jmax})
    for (size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw TuningError("cost matrix csv: truncated");
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');  // matrix name
      std::getline(ss, cell, ',');  // process id
      for (size_t k = 0; k < n; ++k) {
        if (!std::getline(ss, cell, ',')) throw TuningError("cost matrix csv: short row");
        (*m)[i][k] = std::stod(cell);
      }
    }
  return cm;
}

}  // namespace relaytune
