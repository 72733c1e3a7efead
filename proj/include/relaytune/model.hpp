#pragma once
// plant model blocks, block-diagram composition and frequency-domain analysis

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace relaytune {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// single rational factor with transport delay. coefficients ascending in s.
// kept proper (deg num <= deg den) and low order (<= 2) so the simulator can
// discretize each factor exactly.
struct RationalBlock {
  std::vector<double> num{1.0};
  std::vector<double> den{1.0};
  double delay = 0.0;

  void validate() const;
  int order() const;           // denominator degree
  int relative_degree() const;
  int integrators_at_dc() const;
  std::complex<double> eval(double omega) const;  // response at s = j*omega
};

RationalBlock gain_block(double k, double delay = 0.0);
RationalBlock integrator_block();
RationalBlock first_order_block(double t, double delay = 0.0);  // 1/(t s + 1)

struct PDGains {
  double kp = 0.0, kd = 0.0;
};
struct PIGains {
  double kp = 0.0, ki = 0.0;
};

// composition tree. leaves are rational blocks or PD/PI controller elements;
// interior nodes are series products, parallel sums, or unity negative feedback
// (controller in the forward path ahead of the plant).
struct BlockDiagram {
  enum class Kind { block, pd, pi, series, parallel, feedback };
  Kind kind = Kind::block;
  RationalBlock blk;
  double kp = 0.0, kd = 0.0, ki = 0.0;
  std::vector<BlockDiagram> children;  // feedback: children[0]=controller, children[1]=plant

  static BlockDiagram leaf(RationalBlock b);
  static BlockDiagram pd(PDGains g);
  static BlockDiagram pi(PIGains g);
  static BlockDiagram series(std::vector<BlockDiagram> parts);
  static BlockDiagram parallel(std::vector<BlockDiagram> parts);
  static BlockDiagram feedback(BlockDiagram controller, BlockDiagram plant);

  int relative_degree() const;
  int integrators_at_dc() const;
};

std::complex<double> freq_response(const BlockDiagram& d, double omega);

// attitude / altitude inner-loop structure: k e^{-tau s} / (s (t_prop s+1)(t_1 s+1))
struct InnerParams {
  double t_prop = 0.0, t_1 = 0.0, tau = 0.0, k_eq = 1.0;
};
// lateral chain appended to a closed inner loop: k e^{-tau_side s} / (s (t_2 s+1))
struct OuterParams {
  double t_2 = 0.0, tau_side = 0.0;
};

BlockDiagram inner_plant(const InnerParams& p);
BlockDiagram side_chain(const OuterParams& p, double k_side = 1.0);
BlockDiagram outer_plant(const BlockDiagram& inner_closed, const OuterParams& p,
                         double k_side = 1.0);
BlockDiagram yaw_plant(double t_prop, double tau, double k_eq = 1.0);

// relay describing function for amplitude a0, hysteresis fraction beta
std::complex<double> describing_function(double a0, double beta, double h);

struct HarmonicBalance {
  double omega0 = 0.0;  // rad/s
  double a0 = 0.0;      // predicted oscillation amplitude
};

// frequency band every grid scan (harmonic balance, margins) covers, rad/s
inline constexpr double kBandLo = 1e-2;
inline constexpr double kBandHi = 1e3;

// first (lowest-frequency) intersection of the plant phase with -pi + asin(beta).
// nullopt when the phase never reaches the target on [kBandLo, kBandHi] rad/s.
std::optional<HarmonicBalance> solve_harmonic_balance(const BlockDiagram& plant, double beta,
                                                      double h);

// continuous (unwrapped) phase in radians at a single frequency
double unwrapped_phase(const BlockDiagram& d, double omega);

struct Margins {
  double omega_crossover = 0.0;  // rad/s, lowest gain crossover
  double phase_margin_deg = 0.0;
};

// margins of the loop C(s) G(s) with unity negative feedback
std::optional<Margins> loop_margins(const PDGains& c, const BlockDiagram& plant);

}  // namespace relaytune
