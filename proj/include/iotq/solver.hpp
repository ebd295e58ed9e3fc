#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iotq/qbd.hpp"
#include "iotq/spatial.hpp"

namespace iotq::solver {

enum class Scheme { ScUl, RaUl };

std::string to_string(Scheme s);

struct Options {
  double eps = 1e-8;       // outer fixed-point tolerance
  int max_iter = 1000;     // outer iterations
  double damping = 0.5;    // relaxation weight on the new iterate
  int grace_iters = 5;     // damped iterations before an instability verdict
  double r_eps = 1e-10;    // inner R-matrix tolerance
  double tail_eps = 1e-9;  // waiting-time PMF truncation
  bool compute_metrics = true;
  bool cold_start = false;  // start from phi = 0 instead of the mild-load guess
};

/// Converged operating point of the coupled spatial/queueing fixed point.
struct SolverReport {
  Scheme scheme = Scheme::ScUl;
  bool stable = false;
  bool converged = false;
  bool marginally_stable = false;  // 0 < margin < 1e-6: metrics untrusted
  double margin = 0.0;
  double p_ra = 0.0;    // SC-UL only
  double p_aval = 0.0;  // SC-UL only
  double p_tx = 0.0;    // P_Tx for SC-UL, p for RA-UL
  double x0 = 0.0;
  qbd::RowVector phi;   // SC-UL phase marginals
  std::optional<qbd::QueueMetrics> metrics;
  int iterations = 0;
  std::vector<double> trace;  // successive-iterate max changes
};

struct FrontierPoint {
  double alpha = 0.0;
  double a_star = 0.0;  // largest stable arrival rate
};

SolverReport solve_scul(const SystemParams& params, const Options& opts = {});
SolverReport solve_raul(const SystemParams& params, const Options& opts = {});
SolverReport solve(const SystemParams& params, Scheme scheme, const Options& opts = {});

/// Largest stable arrival rate per device-to-BS ratio, by bisection on the
/// solver's stability verdict.
std::vector<FrontierPoint> pareto_frontier(const SystemParams& params, Scheme scheme,
                                           const std::vector<double>& alpha_grid,
                                           double a_tol = 1e-3,
                                           const Options& opts = {});

/// One solver run per value of the named SystemParams field.  Errors are
/// captured per row and the sweep continues.
struct SweepRow {
  double value = 0.0;
  std::optional<SolverReport> report;
  std::string error;
};

std::vector<SweepRow> sweep(const SystemParams& params, Scheme scheme,
                            const std::string& axis, const std::vector<double>& values,
                            const Options& opts = {}, int jobs = 1);

/// Sets a named numeric field on a SystemParams ("alpha" scales
/// device_intensity at fixed bs_intensity).  Throws on unknown names.
void set_axis(SystemParams& params, const std::string& axis, double value);

}  // namespace iotq::solver
