#include "iotq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

namespace iotq::solver {

namespace {

constexpr double kMarginalMargin = 1e-6;

qbd::QueueMetrics zero_metrics() {
  qbd::QueueMetrics qm;
  qm.wait_pmf.probs = {1.0};
  return qm;
}

// Saturated (always-backlogged) phase fixed point: iterate phi <- nu(phi)
// from a uniform start.  The resulting departure-rate margin is the
// dominant-system stability test; the real queue is stable only if the
// saturated network still drains faster than packets arrive.
struct SaturatedPoint {
  qbd::RowVector phi;
  double p_ra = 0.0;
  double p_aval = 0.0;
  double margin = 0.0;
};

SaturatedPoint scul_saturated_point(const SystemParams& params, const Options& opts) {
  const int N = params.n_slots;
  SaturatedPoint sp;
  sp.phi = qbd::RowVector::Constant(N + 1, 1.0 / (N + 1));
  for (int m = 0; m < opts.max_iter; ++m) {
    sp.p_ra = spatial::ra_sr_success(params, sp.phi(0));
    std::vector<double> phi_tx(sp.phi.data() + 1, sp.phi.data() + N + 1);
    sp.p_aval = spatial::availability_prob(params, phi_tx);
    const qbd::RowVector nu = qbd::stationary_nu(sp.p_ra, sp.p_aval, N);
    const double delta = opts.damping * (nu - sp.phi).cwiseAbs().maxCoeff();
    sp.phi = (1.0 - opts.damping) * sp.phi + opts.damping * nu;
    if (delta < opts.eps) break;
  }
  const qbd::PhaseMatrices pm = qbd::build_scul_phase_matrices(
      sp.p_ra, sp.p_aval, spatial::ea_tx_success(params), N);
  const qbd::RowVector nu = qbd::stationary_nu(sp.p_ra, sp.p_aval, N);
  sp.margin = qbd::stability_margin(nu, params.arrival, pm);
  return sp;
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::ScUl ? "SC-UL" : "RA-UL"; }

SolverReport solve_scul(const SystemParams& params, const Options& opts) {
  params.validate();
  const int N = params.n_slots;
  const double a = params.arrival;

  SolverReport rep;
  rep.scheme = Scheme::ScUl;
  rep.phi = qbd::RowVector::Zero(N + 1);

  if (a == 0.0) {
    rep.stable = rep.converged = true;
    rep.x0 = 1.0;
    rep.p_ra = spatial::ra_sr_success(params, 0.0);
    rep.p_aval = 1.0;
    rep.p_tx = spatial::ea_tx_success(params);
    rep.margin = 1.0;
    if (opts.compute_metrics) rep.metrics = zero_metrics();
    return rep;
  }

  const SaturatedPoint sat = scul_saturated_point(params, opts);
  if (sat.margin <= 0.0) {
    rep.stable = false;
    rep.p_ra = sat.p_ra;
    rep.p_aval = sat.p_aval;
    rep.p_tx = spatial::ea_tx_success(params);
    rep.margin = sat.margin;
    rep.phi = sat.phi;
    return rep;
  }

  // Mild-load initial guess: phi e = a, split evenly over the phases.
  const qbd::RowVector phi_init =
      opts.cold_start ? qbd::RowVector::Zero(N + 1).eval()
                      : qbd::RowVector::Constant(N + 1, a / (N + 1)).eval();
  qbd::RowVector phi = phi_init;
  const double p_tx = spatial::ea_tx_success(params);

  for (int m = 1; m <= opts.max_iter; ++m) {
    const double p_ra = spatial::ra_sr_success(params, phi(0));
    std::vector<double> phi_tx(phi.data() + 1, phi.data() + N + 1);
    const double p_aval = spatial::availability_prob(params, phi_tx);

    const qbd::PhaseMatrices pm =
        qbd::build_scul_phase_matrices(p_ra, p_aval, p_tx, N);
    const qbd::RowVector nu = qbd::stationary_nu(p_ra, p_aval, N);
    const double margin = qbd::stability_margin(nu, a, pm);

    rep.iterations = m;
    rep.p_ra = p_ra;
    rep.p_aval = p_aval;
    rep.p_tx = p_tx;
    rep.margin = margin;

    if (margin <= 0.0) {
      if (m <= opts.grace_iters) {
        // Possibly a poor start; pull back toward the mild-load guess and
        // re-test before declaring instability.
        phi = (1.0 - opts.damping) * phi + opts.damping * phi_init;
        continue;
      }
      rep.stable = false;
      rep.phi = phi;
      return rep;
    }

    const qbd::QbdBlocks blocks = qbd::assemble_qbd(a, pm);
    qbd::SteadyState ss;
    try {
      const qbd::Matrix R = qbd::compute_R(blocks, opts.r_eps);
      ss = qbd::steady_state(blocks, R);
    } catch (const std::runtime_error&) {
      // The dominant-system test passed but the level process at this iterate
      // is too close to critical for the R recursion: report the point as
      // marginal rather than abort the sweep.
      rep.stable = true;
      rep.converged = false;
      rep.marginally_stable = true;
      rep.phi = phi;
      return rep;
    }

    const double delta =
        opts.damping * (ss.phi - phi).cwiseAbs().maxCoeff();
    phi = (1.0 - opts.damping) * phi + opts.damping * ss.phi;
    rep.trace.push_back(delta);

    if (delta < opts.eps) {
      rep.stable = true;
      rep.converged = true;
      rep.marginally_stable = margin < kMarginalMargin;
      rep.x0 = ss.x0;
      rep.phi = phi;
      if (opts.compute_metrics) {
        qbd::QueueMetrics qm = qbd::waiting_time_scul(ss, pm, opts.tail_eps);
        qm.mean_queue_len = qbd::mean_queue_length_scul(ss);
        rep.metrics = std::move(qm);
      }
      return rep;
    }
  }

  rep.stable = true;
  rep.converged = false;
  rep.phi = phi;
  return rep;
}

SolverReport solve_raul(const SystemParams& params, const Options& opts) {
  params.validate();
  const double a = params.arrival;

  SolverReport rep;
  rep.scheme = Scheme::RaUl;

  if (a == 0.0) {
    rep.stable = rep.converged = true;
    rep.x0 = 1.0;
    rep.p_tx = spatial::ra_ul_success(params, 0.0);
    rep.margin = rep.p_tx;
    if (opts.compute_metrics) rep.metrics = zero_metrics();
    return rep;
  }

  // Dominant-system test: with every device backlogged the per-slot success
  // probability must still exceed the arrival rate.
  const double p_sat = spatial::ra_ul_success(params, 1.0);
  if (p_sat <= a) {
    rep.stable = false;
    rep.p_tx = p_sat;
    rep.margin = p_sat - a;
    rep.x0 = 0.0;
    return rep;
  }

  double x0 = opts.cold_start ? 1.0 : 1.0 - a;
  double p = 0.0;
  for (int m = 1; m <= opts.max_iter; ++m) {
    p = spatial::ra_ul_success(params, 1.0 - x0);
    rep.iterations = m;
    rep.p_tx = p;
    rep.margin = p - a;

    if (p <= a) {
      if (m <= opts.grace_iters) {
        x0 = (1.0 - opts.damping) * x0 + opts.damping * (1.0 - a);
        continue;
      }
      rep.stable = false;
      rep.x0 = x0;
      return rep;
    }

    const double x0_new = (p - a) / p;
    const double delta = opts.damping * std::abs(x0_new - x0);
    x0 = (1.0 - opts.damping) * x0 + opts.damping * x0_new;
    rep.trace.push_back(delta);

    if (delta < opts.eps) {
      rep.stable = true;
      rep.converged = true;
      rep.marginally_stable = rep.margin < kMarginalMargin;
      rep.x0 = x0;
      if (opts.compute_metrics) {
        const qbd::RaulResult rr = qbd::raul_chain(a, p, opts.tail_eps);
        rep.metrics = rr.metrics;
      }
      return rep;
    }
  }

  rep.stable = true;
  rep.converged = false;
  rep.x0 = x0;
  return rep;
}

SolverReport solve(const SystemParams& params, Scheme scheme, const Options& opts) {
  return scheme == Scheme::ScUl ? solve_scul(params, opts) : solve_raul(params, opts);
}

std::vector<FrontierPoint> pareto_frontier(const SystemParams& params, Scheme scheme,
                                           const std::vector<double>& alpha_grid,
                                           double a_tol, const Options& opts) {
  if (!(a_tol > 0.0)) throw std::domain_error("pareto_frontier: a_tol must be positive");
  for (std::size_t i = 1; i < alpha_grid.size(); ++i)
    if (!(alpha_grid[i] > alpha_grid[i - 1]))
      throw std::domain_error("pareto_frontier: alpha grid must be increasing");

  Options fast = opts;
  fast.compute_metrics = false;

  std::vector<FrontierPoint> frontier;
  frontier.reserve(alpha_grid.size());
  for (double alpha : alpha_grid) {
    SystemParams pt = params;
    pt.device_intensity = alpha * pt.bs_intensity;

    auto stable_at = [&](double a) {
      SystemParams q = pt;
      q.arrival = a;
      const SolverReport r = solve(q, scheme, fast);
      return r.stable && r.converged;
    };

    FrontierPoint fp;
    fp.alpha = alpha;
    if (!stable_at(a_tol)) {
      fp.a_star = 0.0;
    } else {
      double lo = a_tol, hi = 1.0;
      while (hi - lo > a_tol) {
        const double mid = 0.5 * (lo + hi);
        (stable_at(mid) ? lo : hi) = mid;
      }
      fp.a_star = lo;
    }
    frontier.push_back(fp);
  }
  return frontier;
}

void set_axis(SystemParams& params, const std::string& axis, double value) {
  if (axis == "alpha") params.device_intensity = value * params.bs_intensity;
  else if (axis == "arrival" || axis == "a") params.arrival = value;
  else if (axis == "device_intensity") params.device_intensity = value;
  else if (axis == "bs_intensity") params.bs_intensity = value;
  else if (axis == "eta") params.eta = value;
  else if (axis == "rho") params.rho = value;
  else if (axis == "noise") params.noise = value;
  else if (axis == "theta_sr") params.theta_sr = value;
  else if (axis == "theta_tx") params.theta_tx = value;
  else if (axis == "theta_ul") params.theta_ul = value;
  else if (axis == "n_zc") params.n_zc = static_cast<int>(value);
  else if (axis == "n_chan") params.n_chan = static_cast<int>(value);
  else if (axis == "q_blocks") params.q_blocks = static_cast<int>(value);
  else if (axis == "n_slots") params.n_slots = static_cast<int>(value);
  else throw std::domain_error("sweep: unknown axis '" + axis + "'");
}

std::vector<SweepRow> sweep(const SystemParams& params, Scheme scheme,
                            const std::string& axis, const std::vector<double>& values,
                            const Options& opts, int jobs) {
  {
    SystemParams probe = params;  // validate the axis name up front
    if (!values.empty()) set_axis(probe, axis, values.front());
  }

  auto run_one = [&](double v) -> SweepRow {
    SweepRow row;
    row.value = v;
    try {
      SystemParams pt = params;
      set_axis(pt, axis, v);
      row.report = solve(pt, scheme, opts);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<SweepRow> rows(values.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < values.size(); ++i) rows[i] = run_one(values[i]);
    return rows;
  }
  std::vector<std::future<SweepRow>> pending;
  for (std::size_t base = 0; base < values.size();
       base += static_cast<std::size_t>(jobs)) {
    const std::size_t end =
        std::min(values.size(), base + static_cast<std::size_t>(jobs));
    pending.clear();
    for (std::size_t i = base; i < end; ++i)
      pending.push_back(std::async(std::launch::async, run_one, values[i]));
    for (std::size_t i = base; i < end; ++i) rows[i] = pending[i - base].get();
  }
  return rows;
}

}  // namespace iotq::solver
