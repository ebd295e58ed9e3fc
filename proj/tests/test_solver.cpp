#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "iotq/solver.hpp"

using namespace iotq;
using namespace iotq::solver;

namespace {

SystemParams at(double alpha, double a) {
  SystemParams p;
  p.device_intensity = alpha * p.bs_intensity;
  p.arrival = a;
  return p;
}

}  // namespace

TEST_CASE("solve: zero arrivals are trivially stable and empty") {
  for (Scheme s : {Scheme::ScUl, Scheme::RaUl}) {
    const SolverReport r = solve(at(100.0, 0.0), s);
    CHECK(r.stable);
    CHECK(r.converged);
    CHECK(r.x0 == doctest::Approx(1.0));
    REQUIRE(r.metrics.has_value());
    CHECK(r.metrics->mean_queue_len == doctest::Approx(0.0));
    CHECK(r.metrics->wait_mean == doctest::Approx(0.0));
  }
}

TEST_CASE("solve_raul: converged point is self-consistent") {
  const SolverReport r = solve_raul(at(100.0, 0.1));
  REQUIRE(r.stable);
  REQUIRE(r.converged);
  // fixed point: p evaluated at the converged busy probability gives back x0
  SystemParams p = at(100.0, 0.1);
  const double p_chk = spatial::ra_ul_success(p, 1.0 - r.x0);
  CHECK(r.x0 == doctest::Approx((p_chk - 0.1) / p_chk).epsilon(1e-6));
  CHECK(r.p_tx == doctest::Approx(p_chk).epsilon(1e-8));
  CHECK(r.margin == doctest::Approx(r.p_tx - 0.1).epsilon(1e-12));
  REQUIRE(r.metrics.has_value());
  CHECK(r.metrics->wait_mean >= 0.0);
}

TEST_CASE("solve_scul: converged point is self-consistent") {
  const SolverReport r = solve_scul(at(100.0, 0.1));
  REQUIRE(r.stable);
  REQUIRE(r.converged);
  CHECK(r.x0 > 0.0);
  CHECK(r.x0 < 1.0);
  // phase marginals: phi e = 1 - x0
  CHECK(r.phi.sum() == doctest::Approx(1.0 - r.x0).epsilon(1e-6));
  // reported rates match a re-evaluation at the converged marginals
  SystemParams p = at(100.0, 0.1);
  CHECK(r.p_ra == doctest::Approx(spatial::ra_sr_success(p, r.phi(0))).epsilon(1e-6));
  CHECK(r.p_tx == doctest::Approx(spatial::ea_tx_success(p)).epsilon(1e-12));
  REQUIRE(r.metrics.has_value());
  CHECK(r.metrics->mean_queue_len >= 0.0);
  CHECK(r.metrics->dispersion >= 0.0);
}

TEST_CASE("solver: stability verdicts on both sides of the load boundary") {
  CHECK(solve_scul(at(100.0, 0.1)).stable);
  CHECK(!solve_scul(at(1000.0, 0.1)).stable);
  CHECK(solve_raul(at(100.0, 0.1)).stable);
  CHECK(!solve_raul(at(600.0, 0.1)).stable);
  // unstable reports still carry the saturated operating point
  const SolverReport u = solve_raul(at(600.0, 0.1));
  CHECK(u.margin <= 0.0);
  CHECK(u.p_tx > 0.0);
}

TEST_CASE("solver: cold start converges to the same fixed point") {
  Options cold;
  cold.cold_start = true;
  for (double alpha : {50.0, 150.0}) {
    const SolverReport warm_r = solve_scul(at(alpha, 0.1));
    const SolverReport cold_r = solve_scul(at(alpha, 0.1), cold);
    REQUIRE(warm_r.converged);
    REQUIRE(cold_r.converged);
    CHECK(std::abs(warm_r.x0 - cold_r.x0) < 1e-6);
    CHECK((warm_r.phi - cold_r.phi).cwiseAbs().maxCoeff() < 1e-6);

    const SolverReport wr = solve_raul(at(alpha, 0.1));
    const SolverReport cr = solve_raul(at(alpha, 0.1), cold);
    CHECK(std::abs(wr.x0 - cr.x0) < 1e-6);
  }
}

TEST_CASE("solver: repeated runs are bitwise deterministic") {
  const SolverReport r1 = solve_scul(at(120.0, 0.12));
  const SolverReport r2 = solve_scul(at(120.0, 0.12));
  CHECK(r1.x0 == r2.x0);
  CHECK(r1.margin == r2.margin);
  CHECK((r1.phi - r2.phi).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(r1.metrics.has_value());
  REQUIRE(r2.metrics.has_value());
  CHECK(r1.metrics->wait_mean == r2.metrics->wait_mean);
}

TEST_CASE("sweep: matches direct calls, captures per-row errors") {
  SystemParams p = at(100.0, 0.1);
  const std::vector<double> alphas = {50.0, 100.0, 150.0};
  const auto rows = sweep(p, Scheme::ScUl, "alpha", alphas, {}, 2);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].error.empty());
    REQUIRE(rows[i].report.has_value());
    const SolverReport direct = solve_scul(at(alphas[i], 0.1));
    CHECK(rows[i].report->x0 == direct.x0);
    CHECK(rows[i].report->margin == direct.margin);
  }

  // invalid parameter values are captured per row, not thrown
  const auto bad = sweep(p, Scheme::ScUl, "eta", {4.0, 1.5}, {}, 1);
  REQUIRE(bad.size() == 2);
  CHECK(bad[0].error.empty());
  CHECK(!bad[1].error.empty());

  CHECK_THROWS_AS(sweep(p, Scheme::ScUl, "bogus", {1.0}), std::domain_error);
}

TEST_CASE("set_axis: alpha scales device intensity at fixed BS intensity") {
  SystemParams p;
  p.bs_intensity = 2.0;
  set_axis(p, "alpha", 80.0);
  CHECK(p.device_intensity == doctest::Approx(160.0));
  set_axis(p, "arrival", 0.2);
  CHECK(p.arrival == doctest::Approx(0.2));
  set_axis(p, "n_slots", 6.0);
  CHECK(p.n_slots == 6);
}

TEST_CASE("pareto_frontier: monotone boundary on a coarse grid") {
  SystemParams p;
  const auto pts = pareto_frontier(p, Scheme::RaUl, {50.0, 150.0, 260.0}, 5e-3);
  REQUIRE(pts.size() == 3);
  // denser networks cannot sustain higher per-device load
  CHECK(pts[0].a_star >= pts[1].a_star);
  CHECK(pts[1].a_star >= pts[2].a_star);
  CHECK(pts[0].a_star > 0.1);

  CHECK_THROWS_AS(pareto_frontier(p, Scheme::RaUl, {100.0, 50.0}, 1e-3),
                  std::domain_error);
  CHECK_THROWS_AS(pareto_frontier(p, Scheme::RaUl, {50.0}, 0.0), std::domain_error);
}
