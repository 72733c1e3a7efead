#pragma once
// ISE-optimal PD synthesis under a phase-margin floor, and the pairwise
// controller-deterioration cost used to compare processes.

#include <string>
#include <vector>

#include "relaytune/model.hpp"
#include "relaytune/sim.hpp"

namespace relaytune {

struct TuningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TuningSpec {
  double min_margin_deg = 20.0;
  double t_s = 0.0;  // step-response horizon, s; 0 derives it from the loop bandwidth
  int restarts = 8;
  PDGains init{0.0, 0.0};  // optional warm start, used when init.kp > 0
};

struct TunedPD {
  PDGains gains;
  double q = 0.0;           // achieved normalized ISE
  double margin_deg = 0.0;  // achieved phase margin
  double t_s = 0.0;         // horizon the optimizer actually used
};

// minimize the normalized step-response ISE over (kp, kd) subject to the
// phase-margin floor (soft penalty 1e3 * violation_deg^2 during the search,
// hard-checked on the result). multi-start Nelder-Mead; deterministic.
// throws TuningError when no restart yields a stable loop meeting the margin.
TunedPD optimize_pd(const BlockDiagram& plant, const TuningSpec& spec = {});

// percent ISE deterioration of controller c_i on plant g_j relative to that
// plant's own controller c_j: (Q_i - Q_j) / Q_j * 100. a cross-application
// that trips the divergence guard scores the finite cap 1e4.
// throws TuningError when the reference loop itself scores Q = 0 or diverges.
double deterioration(const PDGains& c_i, const PDGains& c_j, const BlockDiagram& g_j,
                     double t_s);

struct CostMatrix {
  std::vector<std::vector<double>> j;      // j[i][k] = deterioration of c_i on g_k, percent
  std::vector<std::vector<double>> jmax;   // joint cost max(j[i][k], j[k][i])
};

// full pairwise deterioration of every controller on every process. rows are
// evaluated concurrently (each entry is an independent pair of simulations)
// and assembled in index order, so the result is deterministic. the second
// form scores column k at that process' own horizon t_s[k].
CostMatrix cost_matrix(const std::vector<BlockDiagram>& processes,
                       const std::vector<PDGains>& controllers, double t_s);
CostMatrix cost_matrix(const std::vector<BlockDiagram>& processes,
                       const std::vector<PDGains>& controllers,
                       const std::vector<double>& t_s);

// persist a cost matrix as CSV: first line is a JSON object naming the
// processes, then one row per (matrix, process) pair with full precision
void write_cost_matrix_csv(const std::string& path,
                           const std::vector<std::string>& process_ids,
                           const CostMatrix& cm);
CostMatrix read_cost_matrix_csv(const std::string& path,
                                std::vector<std::string>* process_ids = nullptr);

}  // namespace relaytune
