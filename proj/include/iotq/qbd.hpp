#pragma once

#include <Eigen/Dense>

#include "iotq/spatial.hpp"

namespace iotq::qbd {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

/// Sub-stochastic phase-transition matrices of the scheduled-uplink service
/// process: S holds failure/hold transitions, G holds departures.  Size is
/// (N+1) x (N+1): the RA-SR phase plus N grant slots.
struct PhaseMatrices {
  Matrix S;
  Matrix G;
  int grant_slots() const { return static_cast<int>(S.rows()) - 1; }
};

/// Block-tridiagonal QBD transition blocks: B, C, E at the idle boundary and
/// A0 (level up), A1 (level hold), A2 (level down) in the repeating part.
struct QbdBlocks {
  double B = 0.0;
  RowVector C;
  Vector E;
  Matrix A0, A1, A2;
};

/// Matrix-geometric steady state of the QBD.
struct SteadyState {
  double x0 = 0.0;        // idle probability
  RowVector x1;           // level-1 phase vector
  Matrix R;               // minimal nonnegative solution of R = A0 + R A1 + R^2 A2
  RowVector phi;          // phase marginals x1 (I-R)^-1
  double balance_residual = 0.0;  // max boundary-balance violation
};

/// Queue-length and waiting-time summary.
struct QueueMetrics {
  double mean_queue_len = 0.0;  // packets
  Pmf wait_pmf;                 // slots
  double wait_mean = 0.0;
  double wait_var = 0.0;
  double dispersion = 0.0;      // wait_var / wait_mean
};

/// Scalar Geo/Geo/1 result for the grant-free scheme.
struct RaulResult {
  bool stable = false;
  double x0 = 0.0;
  double R = 0.0;
  QueueMetrics metrics;
};

/// Builds the S/G stencil from the RA-SR, availability, and transmission
/// success probabilities for a grant of N slots.
PhaseMatrices build_scul_phase_matrices(double p_ra, double p_aval, double p_tx, int N);

/// Assembles the QBD blocks for arrival probability a.
QbdBlocks assemble_qbd(double a, const PhaseMatrices& pm);

/// Fixed-point iteration R <- A0 + R A1 + R^2 A2 from R = 0; stops when the
/// max-abs elementwise change drops below eps.
Matrix compute_R(const QbdBlocks& blocks, double eps = 1e-10, int max_iter = 100000);

/// Stationary distribution of the phase process A = A0+A1+A2, in closed form.
RowVector stationary_nu(double p_ra, double p_aval, int N);

/// General fallback: solves nu A = nu, nu e = 1 for a stochastic A.
RowVector stationary_distribution(const Matrix& A);

/// Drift margin nu a-bar G e - nu a S e; the chain is stable iff positive.
double stability_margin(const RowVector& nu, double a, const PhaseMatrices& pm);

/// Boundary solve x1 = x0 C + x1 (A1 + R A2) with
/// normalization x0 + x1 (I-R)^-1 e = 1.
SteadyState steady_state(const QbdBlocks& blocks, const Matrix& R);

/// E{Q_L} = x1 R (I-R)^-2 e.
double mean_queue_length_scul(const SteadyState& ss);

/// Waiting-time PMF via the departure-count recursion over the S/G stencil,
/// truncated once cumulative mass exceeds 1 - tail_eps.
QueueMetrics waiting_time_scul(const SteadyState& ss, const PhaseMatrices& pm,
                               double tail_eps = 1e-9);

/// Scalar Geo/Geo/1 chain for the grant-free scheme: closed-form steady state
/// and metrics for arrival a and departure p.
RaulResult raul_chain(double a, double p, double tail_eps = 1e-9);

}  // namespace iotq::qbd
