#pragma once
// parameter-box discretization: distinguishing-phase search, cascade loop
// structure detection, and joint-cost-calibrated process grids that persist
// to a domain directory.

#include <Eigen/Core>

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "relaytune/gain.hpp"
#include "relaytune/model.hpp"
#include "relaytune/tuning.hpp"

namespace relaytune {

struct DiscretizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// axis-aligned box of positive plant parameters together with a builder for
// the unit-gain plant at a coordinate. degenerate axes (lo == hi) are allowed.
struct DomainBox {
  std::string name;  // id prefix for generated processes
  Eigen::VectorXd lo, hi;
  std::vector<std::string> axis_names;
  std::function<BlockDiagram(const Eigen::VectorXd&)> make;

  int dims() const { return int(lo.size()); }
  void validate() const;
  Eigen::VectorXd center() const;  // geometric mean per axis
  std::vector<Eigen::VectorXd> corners() const;  // deduplicated vertex set
  bool contains(const Eigen::VectorXd& p, double rel_tol = 1e-9) const;
};

// supported identification ranges for the standard loop shapes
DomainBox attitude_box();
DomainBox altitude_box();
// template for the lateral translation stage appended to a closed inner loop:
// make builds the side chain alone, callers put the closed loop in front
DomainBox side_box();

struct PhaseSearch {
  int grid_points = 25;
  double beta_lo = -0.9, beta_hi = 0.9;
  TuningSpec tuning{};  // per-process optimum search
};

struct PhaseResult {
  double phi_d = 0.0;     // radians
  double beta = 0.0;      // sin(phi_d)
  double worst_pct = 0.0; // winning rule's worst cross-process deterioration
};

// pick the relay hysteresis phase that best separates the box: over a beta
// grid, fit one amplitude/frequency tuning rule per coarse process (corners
// plus center), cross-apply each rule to every other process, and keep the
// beta whose best rule has the smallest worst-case deterioration. ties fall
// to the smaller |beta|. throws DiscretizeError when no grid beta yields an
// oscillation prediction for every coarse process.
PhaseResult find_distinguishing_phase(const DomainBox& box, const PhaseSearch& ps = {});

// one closed loop of a cascade: the split factors it wraps around everything
// closed before it. loops are listed innermost first; identification follows
// the same order.
struct CascadeLoop {
  std::vector<int> factor_indices;
};

struct CascadeStructure {
  std::vector<CascadeLoop> loops;
};

struct CascadeProbe {
  double h = 0.1;          // relay amplitude the practicality limits assume
  double beta = 0.0;
  double a0_max = 1.0;     // amplitude beyond practical excitation
  double omega0_min = 0.5; // rad/s, slower cycles take too long to identify
  double re_tol = 1e-6;    // strict-positivity guard on the closure test
  TuningSpec tuning{};     // closure controller fitted at the box center
};

using ModelSplit = std::function<std::vector<RationalBlock>(const Eigen::VectorXd&)>;

// walk an ordered factorization of a high-order model and close a feedback
// loop whenever extending the open chain with the next factor would break
// relay identification: at each step the chain so far is pushed through the
// relay oscillation prediction at every box vertex, and the loop closes when
// Re{N(a0) G_next(jw0) V(jw0)} goes positive at any vertex, or when the
// predicted cycle is impractically large or slow. every factor must be
// unity-gain at dc (integrators aside) or DiscretizeError is thrown.
CascadeStructure build_cascade(const ModelSplit& split, const DomainBox& box,
                               const CascadeProbe& probe = {});

struct DiscreteProcess {
  std::string id;
  Eigen::VectorXd params;
  PDGains controller;      // optimum for the unit-gain plant
  double q = 0.0;          // its normalized step ISE
  double margin_deg = 0.0;
  double t_s = 0.0;        // horizon its costs are evaluated at
  double zeta = 0.0;       // steady relay amplitude ratio a0/h at phi_d
  double a0 = 0.0;         // raw table-run oscillation summary
  double omega0 = 0.0;
  bool clamped = false;    // landed on the box face along its chain axis
};

struct DiscretizedDomain {
  std::string name;
  std::vector<std::string> axis_names;
  std::vector<DiscreteProcess> processes;
  double phi_d = 0.0, beta = 0.0;
  int n_s = 0;             // classifier input width, 1 ms samples per channel
  double table_h = 0.1;    // relay amplitude the zeta table was recorded at
  std::string parent_id;   // inner process an outer domain assumes, else empty
  std::vector<std::pair<int, int>> neighbors;  // construction adjacency
  CostMatrix costs;
  // runtime-only plant builder; read_domain re-attaches it
  std::function<BlockDiagram(const Eigen::VectorXd&)> make;

  const DiscreteProcess* find(const std::string& id) const;
};

// grid the box so every neighboring pair of processes has joint deterioration
// inside [j_star - tol, j_star + tol]: greedy frontier expansion from the low
// corner, marching each axis in log space and sizing every step by bisection
// on the joint cost. chain ends clamped to a box face may fall below the
// band. fills controllers, table ratios, the full cost matrix, the
// distinguishing phase, and the classifier input width.
DiscretizedDomain discretize_inner(const DomainBox& box, const TuningSpec& spec,
                                   double j_star = 10.0, double tol = 3.0);

// one outer-stage domain per selected inner process (all when subset is
// empty): the inner loop is closed with its own controller, the side template
// is appended, and the 2-d box is gridded with worst-case spacing (first axis
// marched at the second axis' high face and vice versa, breakpoints combined
// as a tensor grid). worst-case grid lines meet the joint-cost band; interior
// edges may land below it.
std::vector<DiscretizedDomain> discretize_outer(const DiscretizedDomain& inner,
                                                const DomainBox& side_template,
                                                const TuningSpec& spec,
                                                double j_star = 10.0, double tol = 3.0,
                                                const std::vector<int>& inner_subset = {});

// rerun the table relay test on every process of a domain at its phase
ZetaTable compute_zeta_table(const DiscretizedDomain& d, double h = 0.1);

// persist/load a domain directory: domain.json, controllers.csv, zeta.csv,
// costmatrix.csv. make is re-attached on load when provided.
void write_domain(const std::string& dir, const DiscretizedDomain& d);
DiscretizedDomain read_domain(const std::string& dir,
                              std::function<BlockDiagram(const Eigen::VectorXd&)> make = {});

}  // namespace relaytune
