#pragma once
// exact process-gain identification. the relay amplitude ratio a0/h measured
// on a unit-gain plant is independent of both h and the true plant gain, so
// it serves as a per-process signature zeta: dividing a field measurement's
// own a0/h by zeta recovers the plant gain, and dividing the gain-normalized
// controller by that estimate rescales it to the physical plant. also the
// Fourier diagnostics that show when the 4/pi first-harmonic shortcut is poor.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "relaytune/model.hpp"
#include "relaytune/mrft.hpp"

namespace relaytune {

struct GainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// outcome of one unit-gain table run
struct ZetaRecord {
  double zeta = 0.0;    // a0 / h
  double a0 = 0.0;      // steady oscillation amplitude of the run
  double h = 0.0;       // relay amplitude used
  double omega0 = 0.0;  // steady oscillation frequency, rad/s
};

// clean (noise- and bias-free) relay run on a unit-gain plant at hysteresis
// fraction beta; relay-loop linearity makes the returned ratio a0/h invariant
// to h, which is what lets a single table row serve any field amplitude.
// steadiness failures propagate as MRFTError.
ZetaRecord measure_zeta(const BlockDiagram& unit_plant, double beta, double h = 0.1,
                        double duration = 300.0);

// first-harmonic baseline for the same ratio: 4/pi times the plant response
// magnitude at the predicted oscillation frequency. exact zeta beats this
// whenever the limit cycle carries meaningful higher harmonics.
double zeta_df(const BlockDiagram& unit_plant, double beta);

// gain estimate from a measured oscillation and the table row of the
// classified process: (a0_meas / h_meas) / zeta
double estimate_gain(double a0_meas, double h_meas, double zeta);

// rescale a gain-normalized controller to the estimated plant gain
PDGains scale_controller(const PDGains& c_norm, double k_hat);

// truncated Fourier series of one steady cycle
struct HarmonicContent {
  double dc = 0.0;
  double omega0 = 0.0;       // fundamental, rad/s
  Eigen::VectorXd cos_coef;  // order n = 1..n_max
  Eigen::VectorXd sin_coef;

  Eigen::VectorXd magnitude() const;  // per-order amplitude
  double eval(double t) const;        // partial-sum reconstruction
};

// trapezoidal projection of the cycle's pv onto harmonics of its own period.
// requires a steady record and n_max >= 1.
HarmonicContent harmonic_content(const OscillationRecord& osc, int n_max);

// one zeta row per process of a discretized domain, in process order
struct ZetaTable {
  std::vector<std::string> class_ids;
  std::vector<ZetaRecord> rows;
};

// csv persistence: header class_id,zeta,a0_sim,h_sim,omega0_sim then one row
// per class, doubles printed to full precision so a round trip is bit-exact
void write_zeta_csv(const std::string& path, const ZetaTable& table);
ZetaTable read_zeta_csv(const std::string& path);

}  // namespace relaytune
