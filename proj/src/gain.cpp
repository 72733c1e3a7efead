#include "relaytune/gain.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "relaytune/numerics.hpp"

namespace relaytune {

ZetaRecord measure_zeta(const BlockDiagram& unit_plant, double beta, double h,
                        double duration) {
  if (!(std::abs(beta) < 1.0)) throw GainError("measure_zeta: |beta| must be < 1");
  if (!(h > 0.0)) throw GainError("measure_zeta: relay amplitude must be positive");
  if (!(duration > 0.0)) throw GainError("measure_zeta: duration must be positive");
  MRFTConfig mrft{beta, h};
  SimConfig sim;
  sim.duration = duration;
  MRFTOutcome out = run_relay_test(unit_plant, mrft, sim);
  ZetaRecord rec;
  rec.a0 = out.osc.a0;
  rec.h = h;
  rec.zeta = out.osc.a0 / h;
  rec.omega0 = out.osc.omega0;
  return rec;
}

double zeta_df(const BlockDiagram& unit_plant, double beta) {
  if (!(std::abs(beta) < 1.0)) throw GainError("zeta_df: |beta| must be < 1");
  auto hb = solve_harmonic_balance(unit_plant, beta, 1.0);
  if (!hb) throw GainError("zeta_df: no oscillation predicted for this plant and beta");
  return hb->a0;  // a0 at h = 1 is 4/pi times the response magnitude
}

double estimate_gain(double a0_meas, double h_meas, double zeta) {
  if (!(a0_meas > 0.0)) throw GainError("estimate_gain: amplitude must be positive");
  if (!(h_meas > 0.0)) throw GainError("estimate_gain: relay amplitude must be positive");
  if (!(zeta > 0.0)) throw GainError("estimate_gain: zeta must be positive");
  return (a0_meas / h_meas) / zeta;
}

PDGains scale_controller(const PDGains& c_norm, double k_hat) {
  if (!(k_hat > 0.0)) throw GainError("scale_controller: gain estimate must be positive");
  return PDGains{c_norm.kp / k_hat, c_norm.kd / k_hat};
}

Eigen::VectorXd HarmonicContent::magnitude() const {
  Eigen::VectorXd m(cos_coef.size());
  for (Eigen::Index n = 0; n < m.size(); ++n)
    m[n] = std::hypot(cos_coef[n], sin_coef[n]);
  return m;
}

double HarmonicContent::eval(double t) const {
  double v = dc;
  for (Eigen::Index n = 0; n < cos_coef.size(); ++n) {
    double ph = double(n + 1) * omega0 * t;
    v += cos_coef[n] * std::cos(ph) + sin_coef[n] * std::sin(ph);
  }
  return v;
}

HarmonicContent harmonic_content(const OscillationRecord& osc, int n_max) {
  if (!osc.steady) throw GainError("harmonic_content: cycle is not steady");
  if (n_max < 1) throw GainError("harmonic_content: order must be >= 1");
  const int n = int(osc.pv.size());
  if (n < 4) throw GainError("harmonic_content: cycle too short");
  const double period = double(n) * osc.dt;
  HarmonicContent hc;
  hc.omega0 = 2.0 * kPi / period;
  hc.cos_coef = Eigen::VectorXd::Zero(n_max);
  hc.sin_coef = Eigen::VectorXd::Zero(n_max);
  // the cycle holds one full period with the wrap sample omitted, so the
  // closed-cycle trapezoid collapses to a plain sum: the two half-weight
  // endpoints are the same periodic sample
  double mean = 0.0;
  for (int k = 0; k < n; ++k) mean += osc.pv[k];
  hc.dc = mean / double(n);
  for (int m = 1; m <= n_max; ++m) {
    double ca = 0.0, sa = 0.0;
    const double step = 2.0 * kPi * double(m) / double(n);
    for (int k = 0; k < n; ++k) {
      ca += osc.pv[k] * std::cos(step * double(k));
      sa += osc.pv[k] * std::sin(step * double(k));
    }
    hc.cos_coef[m - 1] = 2.0 * ca / double(n);
    hc.sin_coef[m - 1] = 2.0 * sa / double(n);
  }
  return hc;
}

void write_zeta_csv(const std::string& path, const ZetaTable& table) {
  if (table.class_ids.size() != table.rows.size())
    throw GainError("write_zeta_csv: id and row counts differ");
  std::ofstream out(path);
  if (!out) throw GainError("write_zeta_csv: cannot open " + path);
  out << "class_id,zeta,a0_sim,h_sim,omega0_sim\n";
  char buf[32];
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const ZetaRecord& r = table.rows[i];
    out << table.class_ids[i];
    for (double v : {r.zeta, r.a0, r.h, r.omega0}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw GainError("write_zeta_csv: write failed for " + path);
}

ZetaTable read_zeta_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GainError("read_zeta_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("class_id,", 0) != 0)
    throw GainError("read_zeta_csv: bad header in " + path);
  ZetaTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) throw GainError("read_zeta_csv: bad row in " + path);
    ZetaRecord r;
    table.class_ids.push_back(cell);
    for (double* v : {&r.zeta, &r.a0, &r.h, &r.omega0}) {
      if (!std::getline(ss, cell, ','))
        throw GainError("read_zeta_csv: short row in " + path);
      *v = std::stod(cell);
    }
    table.rows.push_back(r);
  }
  return table;
}

}  // namespace relaytune
