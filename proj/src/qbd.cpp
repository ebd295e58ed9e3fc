#include "iotq/qbd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace iotq::qbd {

namespace {

void check_prob(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::domain_error(std::string(name) + " must be in [0,1]");
}

}  // namespace

PhaseMatrices build_scul_phase_matrices(double p_ra, double p_aval, double p_tx, int N) {
  check_prob(p_ra, "p_ra");
  check_prob(p_aval, "p_aval");
  check_prob(p_tx, "p_tx");
  if (N < 1) throw std::domain_error("N must be >= 1");

  const int n = N + 1;
  PhaseMatrices pm;
  pm.S = Matrix::Zero(n, n);
  pm.G = Matrix::Zero(n, n);

  pm.S(0, 0) = (1.0 - p_ra) + p_ra * (1.0 - p_aval);
  pm.S(0, 1) = p_ra * p_aval;
  for (int i = 1; i < N; ++i) {
    pm.S(i, i + 1) = 1.0 - p_tx;
    pm.G(i, i + 1) = p_tx;
  }
  pm.S(N, 0) = 1.0 - p_tx;
  pm.G(N, 0) = p_tx;
  return pm;
}

QbdBlocks assemble_qbd(double a, const PhaseMatrices& pm) {
  check_prob(a, "a");
  const int n = static_cast<int>(pm.S.rows());
  QbdBlocks b;
  b.B = 1.0 - a;
  b.C = RowVector::Zero(n);
  b.C(0) = a;
  const Vector s = Vector::Ones(n) - pm.S * Vector::Ones(n);
  b.E = (1.0 - a) * s;
  b.A0 = a * pm.S;
  b.A1 = a * pm.G + (1.0 - a) * pm.S;
  b.A2 = (1.0 - a) * pm.G;
  return b;
}

Matrix compute_R(const QbdBlocks& blocks, double eps, int max_iter) {
  if (!(eps > 0.0)) throw std::domain_error("compute_R: eps must be positive");
  const int n = static_cast<int>(blocks.A0.rows());
  Matrix R = Matrix::Zero(n, n);
  for (int it = 0; it < max_iter; ++it) {
    Matrix next = blocks.A0 + R * blocks.A1 + R * R * blocks.A2;
    const double delta = (next - R).cwiseAbs().maxCoeff();
    R = std::move(next);
    if (delta < eps) return R;
  }
  throw std::runtime_error("compute_R: no convergence (unstable or near-critical chain)");
}

RowVector stationary_nu(double p_ra, double p_aval, int N) {
  check_prob(p_ra, "p_ra");
  check_prob(p_aval, "p_aval");
  if (N < 1) throw std::domain_error("N must be >= 1");
  const double g = p_ra * p_aval;
  RowVector nu(N + 1);
  nu(0) = 1.0 / (1.0 + N * g);
  for (int l = 1; l <= N; ++l) nu(l) = nu(0) * g;
  return nu;
}

RowVector stationary_distribution(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  // nu (A - I) = 0 with the last equation replaced by the normalization.
  Matrix M = (A - Matrix::Identity(n, n)).transpose();
  M.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible())
    throw std::runtime_error("stationary_distribution: no unique normalized solution");
  return lu.solve(rhs).transpose();
}

double stability_margin(const RowVector& nu, double a, const PhaseMatrices& pm) {
  check_prob(a, "a");
  const Vector e = Vector::Ones(pm.S.rows());
  return (1.0 - a) * nu.dot((pm.G * e)) - a * nu.dot((pm.S * e));
}

SteadyState steady_state(const QbdBlocks& blocks, const Matrix& R) {
  const int n = static_cast<int>(blocks.A0.rows());
  const Matrix I = Matrix::Identity(n, n);
  const Vector e = Vector::Ones(n);

  const Matrix M = I - blocks.A1 - R * blocks.A2;
  Eigen::PartialPivLU<Matrix> luM(M.transpose());
  const RowVector x1_unit = luM.solve(blocks.C.transpose()).transpose();

  Eigen::PartialPivLU<Matrix> luIR(I - R);
  const Vector y = luIR.solve(e);
  if (!y.allFinite())
    throw std::runtime_error("steady_state: (I - R) numerically singular");

  SteadyState ss;
  ss.R = R;
  ss.x0 = 1.0 / (1.0 + x1_unit.dot(y));
  ss.x1 = ss.x0 * x1_unit;
  ss.phi = Eigen::PartialPivLU<Matrix>((I - R).transpose())
               .solve(ss.x1.transpose())
               .transpose();

  // Boundary balance equations, re-checked at runtime as a guard against an
  // operator-order slip in the boundary solve.
  const double r_idle = std::abs(ss.x0 * blocks.B + ss.x1.dot(blocks.E) - ss.x0);
  const double r_l1 = (ss.x0 * blocks.C + ss.x1 * blocks.A1 +
                       (ss.x1 * R) * blocks.A2 - ss.x1)
                          .cwiseAbs()
                          .maxCoeff();
  const double r_norm = std::abs(ss.x0 + ss.x1.dot(y) - 1.0);
  ss.balance_residual = std::max({r_idle, r_l1, r_norm});
  if (!(ss.balance_residual < 1e-7))
    throw std::runtime_error("steady_state: boundary balance residual too large");
  return ss;
}

double mean_queue_length_scul(const SteadyState& ss) {
  const int n = static_cast<int>(ss.R.rows());
  const Matrix I = Matrix::Identity(n, n);
  Eigen::PartialPivLU<Matrix> lu(I - ss.R);
  const Vector y = lu.solve(lu.solve(Vector::Ones(n)));
  return (ss.x1 * ss.R).dot(y);
}

namespace {

// Shared waiting-time accumulation: level vectors xv[k] = x_k (row) against
// the departure-count recursion u_j^(k) = B_j^(k) e run over the S/G stencil.
QueueMetrics waiting_time_impl(double x0, const std::vector<RowVector>& xv,
                               const Matrix& S, const Matrix& G,
                               double tail_eps, double neglected_level_mass) {
  const int n = static_cast<int>(S.rows());
  const Vector e = Vector::Ones(n);
  const int V = static_cast<int>(xv.size());  // xv[0] unused; levels 1..V-1
  constexpr long kMaxSlots = 1000000;

  QueueMetrics qm;
  qm.wait_pmf.probs.push_back(x0);
  double mass = x0;
  const double target = 1.0 - tail_eps - neglected_level_mass;

  std::vector<Vector> u;  // u[k-1] = B_j^(k) e for current j
  u.reserve(V);

  for (long j = 1; mass < target; ++j) {
    if (j > kMaxSlots)
      throw std::runtime_error("waiting_time: PMF mass target not reached");
    // Advance the recursion from j-1 to j.  The fresh diagonal entry
    // B_j^(j) = G B_{j-1}^(j-1) is appended first from the untouched state,
    // then existing entries update top-down against last step's values.
    const bool append = j <= V - 1;
    if (append) u.push_back(j == 1 ? Vector(G * e) : Vector(G * u[j - 2]));
    const int k_hi = static_cast<int>(u.size()) - (append ? 1 : 0);
    for (int k = k_hi; k >= 2; --k) u[k - 1] = S * u[k - 1] + G * u[k - 2];
    if (j > 1 && !u.empty()) u[0] = S * u[0];

    double wj = 0.0;
    for (std::size_t k = 1; k <= u.size(); ++k) wj += xv[k].dot(u[k - 1]);
    qm.wait_pmf.probs.push_back(wj);
    mass += wj;
  }
  qm.wait_pmf.tail_mass = std::max(0.0, 1.0 - mass);

  double mean = 0.0;
  for (std::size_t j = 1; j < qm.wait_pmf.probs.size(); ++j)
    mean += static_cast<double>(j) * qm.wait_pmf.probs[j];
  double var = 0.0;
  for (std::size_t j = 0; j < qm.wait_pmf.probs.size(); ++j) {
    const double d = static_cast<double>(j) - mean;
    var += d * d * qm.wait_pmf.probs[j];
  }
  qm.wait_mean = mean;
  qm.wait_var = var;
  qm.dispersion = mean > 0.0 ? var / mean : 0.0;
  return qm;
}

}  // namespace

QueueMetrics waiting_time_scul(const SteadyState& ss, const PhaseMatrices& pm,
                               double tail_eps) {
  const int n = static_cast<int>(pm.S.rows());
  const Vector e = Vector::Ones(n);

  // Expand levels until the remaining level mass is negligible against the
  // requested tail tolerance.
  std::vector<RowVector> xv;
  xv.push_back(RowVector::Zero(n));  // level 0 placeholder
  RowVector x = ss.x1;
  double remaining = 1.0 - ss.x0;
  constexpr int kMaxLevels = 20000;
  while (static_cast<int>(xv.size()) <= kMaxLevels) {
    xv.push_back(x);
    remaining -= x.dot(e);
    if (remaining < tail_eps * 1e-3) break;
    x = x * ss.R;
  }
  return waiting_time_impl(ss.x0, xv, pm.S, pm.G, tail_eps,
                           std::max(0.0, remaining));
}

RaulResult raul_chain(double a, double p, double tail_eps) {
  check_prob(a, "a");
  check_prob(p, "p");

  RaulResult res;
  if (a == 0.0) {
    res.stable = true;
    res.x0 = 1.0;
    res.R = 0.0;
    res.metrics.wait_pmf.probs = {1.0};
    return res;
  }
  if (!(p > a)) {
    res.stable = false;
    return res;
  }

  res.stable = true;
  res.x0 = (p - a) / p;
  res.R = a * (1.0 - p) / ((1.0 - a) * p);

  const double x1 = a * res.x0 / ((1.0 - a) * p);
  res.metrics.mean_queue_len = a * a * (1.0 - p) * res.x0 / ((p - a) * (p - a));
  const double wait_mean_cf = a * (1.0 - a) * res.x0 / ((p - a) * (p - a));

  // Scalar embedding of the waiting-time recursion (S -> 1-p, G -> p).
  std::vector<RowVector> xv;
  xv.push_back(RowVector::Zero(1));
  double lvl = x1;
  double remaining = 1.0 - res.x0;
  constexpr int kMaxLevels = 20000;
  while (static_cast<int>(xv.size()) <= kMaxLevels) {
    RowVector r(1);
    r(0) = lvl;
    xv.push_back(r);
    remaining -= lvl;
    if (remaining < tail_eps * 1e-3) break;
    lvl *= res.R;
  }
  Matrix S(1, 1), G(1, 1);
  S(0, 0) = 1.0 - p;
  G(0, 0) = p;
  QueueMetrics qm = waiting_time_impl(res.x0, xv, S, G, tail_eps,
                                      std::max(0.0, remaining));
  res.metrics.wait_pmf = std::move(qm.wait_pmf);
  res.metrics.wait_var = qm.wait_var;
  res.metrics.wait_mean = wait_mean_cf;
  res.metrics.dispersion =
      wait_mean_cf > 0.0 ? qm.wait_var / wait_mean_cf : 0.0;
  return res;
}

}  // namespace iotq::qbd
