#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "iotq/simulator.hpp"
#include "iotq/spatial.hpp"

using namespace iotq;
using namespace iotq::sim;

namespace {

SystemParams small_net() {
  SystemParams p;
  p.device_intensity = 40.0;  // alpha = 20: quick to simulate
  return p;
}

}  // namespace

TEST_CASE("realize_network: region too small for the guard ring") {
  CHECK_THROWS_AS(realize_network(small_net(), 3.0, 1), std::domain_error);
}

TEST_CASE("realize_network: association and power control invariants") {
  const SystemParams p = small_net();
  const NetworkRealization net = realize_network(p, 5.0, 7);
  REQUIRE(!net.bs_points.empty());
  REQUIRE(net.association.size() == net.device_points.size());
  REQUIRE(net.service_distance.size() == net.device_points.size());
  REQUIRE(net.tx_power.size() == net.device_points.size());
  for (std::size_t d = 0; d < net.device_points.size(); ++d) {
    const int b = net.association[d];
    REQUIRE(b >= 0);
    REQUIRE(b < static_cast<int>(net.bs_points.size()));
    const double dx = net.device_points[d][0] - net.bs_points[b][0];
    const double dy = net.device_points[d][1] - net.bs_points[b][1];
    const double r = std::hypot(dx, dy);
    CHECK(net.service_distance[d] == doctest::Approx(r).epsilon(1e-12));
    // nearest: no other BS strictly closer
    for (const auto& bs : net.bs_points) {
      const double r2 =
          std::hypot(net.device_points[d][0] - bs[0], net.device_points[d][1] - bs[1]);
      CHECK(r2 >= r - 1e-12);
    }
    // exact path-loss inversion: rho * r^eta
    CHECK(net.tx_power[d] ==
          doctest::Approx(p.rho * std::pow(r, p.eta)).epsilon(1e-12));
  }
}

TEST_CASE("realize_network: point counts match the PPP intensities") {
  const SystemParams p = small_net();
  const double hw = 5.0, area = 4.0 * hw * hw;
  double bs_sum = 0.0, dev_sum = 0.0;
  const int reps = 40;
  for (int s = 0; s < reps; ++s) {
    const NetworkRealization net = realize_network(p, hw, 1000 + s);
    bs_sum += static_cast<double>(net.bs_points.size());
    dev_sum += static_cast<double>(net.device_points.size());
  }
  const double bs_mean = bs_sum / reps, dev_mean = dev_sum / reps;
  // 3.5 sigma on the mean of `reps` Poisson counts
  CHECK(std::abs(bs_mean - p.bs_intensity * area) <
        3.5 * std::sqrt(p.bs_intensity * area / reps));
  CHECK(std::abs(dev_mean - p.device_intensity * area) <
        3.5 * std::sqrt(p.device_intensity * area / reps));
}

TEST_CASE("realize_network: per-cell count distribution matches the gamma fit") {
  SystemParams p;
  p.bs_intensity = 4.0;
  p.device_intensity = 64.0;  // load 16 per cell
  const double load = p.device_intensity / p.bs_intensity;
  std::vector<double> hist(256, 0.0);
  double total = 0.0;
  for (int s = 0; s < 200; ++s) {
    const NetworkRealization net = realize_network(p, 6.0, 555 + s);
    std::vector<int> members(net.bs_points.size(), 0);
    for (int b : net.association) ++members[b];
    // interior cells only, to dodge truncation at the region edge
    for (std::size_t b = 0; b < net.bs_points.size(); ++b) {
      if (std::hypot(net.bs_points[b][0], net.bs_points[b][1]) > 3.5) continue;
      hist[std::min<int>(members[b], 255)] += 1.0;
      total += 1.0;
    }
  }
  REQUIRE(total > 20000);
  const Pmf pmf = spatial::neighbor_pmf(load * p.bs_intensity, p.bs_intensity);
  double tv = 0.0;
  for (std::size_t n = 0; n < hist.size(); ++n) {
    const double q = n < pmf.probs.size() ? pmf.probs[n] : 0.0;
    tv += 0.5 * std::abs(hist[n] / total - q);
  }
  CHECK(tv < 0.03);
}

TEST_CASE("run_sim: zero arrivals means zero activity") {
  SystemParams p = small_net();
  p.arrival = 0.0;
  const NetworkRealization net = realize_network(p, 5.0, 11);
  for (auto scheme : {solver::Scheme::ScUl, solver::Scheme::RaUl}) {
    const SimStats st = run_sim(net, p, scheme, 400, 100, 12);
    CHECK(st.p_ra_hat.n == 0);
    CHECK(st.p_tx_hat.n == 0);
    CHECK(st.p_hat.n == 0);
    CHECK(st.overflow_count == 0);
    CHECK(st.mean_queue_hat.value == doctest::Approx(0.0));
    CHECK(st.slots_collected > 0);
  }
}

TEST_CASE("run_sim: identical seeds give identical statistics") {
  const SystemParams p = small_net();
  const NetworkRealization net = realize_network(p, 5.0, 21);
  for (auto scheme : {solver::Scheme::ScUl, solver::Scheme::RaUl}) {
    const SimStats s1 = run_sim(net, p, scheme, 600, 150, 77);
    const SimStats s2 = run_sim(net, p, scheme, 600, 150, 77);
    CHECK(s1.p_ra_hat.value == s2.p_ra_hat.value);
    CHECK(s1.p_tx_hat.value == s2.p_tx_hat.value);
    CHECK(s1.p_hat.value == s2.p_hat.value);
    CHECK(s1.mean_queue_hat.value == s2.mean_queue_hat.value);
    CHECK(s1.wait_mean_hat.value == s2.wait_mean_hat.value);
    CHECK(s1.slots_collected == s2.slots_collected);
    const SimStats s3 = run_sim(net, p, scheme, 600, 150, 78);
    CHECK((s1.p_hat.value != s3.p_hat.value ||
           s1.p_ra_hat.value != s3.p_ra_hat.value ||
           s1.mean_queue_hat.value != s3.mean_queue_hat.value));
  }
}

TEST_CASE("run_sim: estimates live in [0,1] and counters are consistent") {
  const SystemParams p = small_net();
  const NetworkRealization net = realize_network(p, 5.0, 31);
  for (auto scheme : {solver::Scheme::ScUl, solver::Scheme::RaUl}) {
    const SimStats st = run_sim(net, p, scheme, 1200, 200, 5);
    for (const Estimate* e : {&st.p_ra_hat, &st.p_tx_hat, &st.p_hat}) {
      if (e->n == 0) continue;
      CHECK(e->value >= 0.0);
      CHECK(e->value <= 1.0);
      CHECK(e->se >= 0.0);
    }
    CHECK(st.mean_queue_hat.value >= 0.0);
    CHECK(st.wait_mean_hat.value >= 0.0);
    CHECK(st.slots_collected > 0);
    CHECK(st.warmup_used >= 0);
    double mass = 0.0;
    for (double v : st.wait_pmf_hat.probs) {
      CHECK(v >= 0.0);
      mass += v;
    }
    if (st.wait_mean_hat.n > 0)
      CHECK(mass + st.wait_pmf_hat.tail_mass == doctest::Approx(1.0).epsilon(1e-9));
    if (scheme == solver::Scheme::ScUl) CHECK(st.p_hat.n == 0);
    if (scheme == solver::Scheme::RaUl) {
      CHECK(st.p_ra_hat.n == 0);
      CHECK(st.p_tx_hat.n == 0);
    }
  }
}

TEST_CASE("compare_to_analysis: gap bookkeeping") {
  solver::SolverReport rep;
  rep.scheme = solver::Scheme::ScUl;
  rep.p_ra = 0.7;
  rep.p_tx = 0.55;

  SimStats st;
  st.p_ra_hat = {0.71, 0.005, 1000};
  st.p_tx_hat = {0.54, 0.005, 1000};

  const Discrepancy ok = compare_to_analysis(st, rep);
  CHECK(ok.pass);
  REQUIRE(ok.gaps.size() == 2);
  for (const MetricGap& g : ok.gaps) {
    CHECK(g.gap == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(g.z == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g.pass);
    CHECK(!g.skipped);
  }

  // a mismatched metric fails; a zero-sample metric is skipped but passes
  st.p_tx_hat = {0.50, 0.005, 1000};
  st.p_ra_hat = {0.0, 0.0, 0};
  Tolerances tight;
  tight.p_tx = 0.01;
  const Discrepancy bad = compare_to_analysis(st, rep, tight);
  CHECK(!bad.pass);
  bool saw_skip = false, saw_fail = false;
  for (const MetricGap& g : bad.gaps) {
    if (g.skipped) {
      saw_skip = true;
      CHECK(g.pass);
    }
    if (!g.pass) saw_fail = true;
  }
  CHECK(saw_skip);
  CHECK(saw_fail);

  // RA-UL reports compare the single per-attempt probability
  solver::SolverReport rr;
  rr.scheme = solver::Scheme::RaUl;
  rr.p_tx = 0.6;
  SimStats rs;
  rs.p_hat = {0.59, 0.004, 2000};
  const Discrepancy rd = compare_to_analysis(rs, rr);
  CHECK(rd.pass);
  REQUIRE(rd.gaps.size() == 1);
  CHECK(rd.gaps[0].name == "p");
}
