#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "iotq/spatial.hpp"
#include "oracles.hpp"

using namespace iotq;
using namespace iotq::spatial;

TEST_CASE("neighbor_pmf: mass, mean, and the closed-form empty-cell prob") {
  const double c = 3.575;
  for (double load : {0.5, 5.0, 16.0, 50.0}) {
    const Pmf pmf = neighbor_pmf(load * 2.0, 2.0);
    double mass = 0.0, mean = 0.0;
    for (std::size_t n = 0; n < pmf.probs.size(); ++n) {
      CHECK(pmf.probs[n] >= 0.0);
      mass += pmf.probs[n];
      mean += n * pmf.probs[n];
    }
    CHECK(mass + pmf.tail_mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pmf.tail_mass < 1e-8);
    CHECK(mean == doctest::Approx(load).epsilon(1e-6));
    CHECK(pmf.mean() == doctest::Approx(mean).epsilon(1e-12));
    // P{N = 0} = (c / (c + load))^c from the gamma-mixed Poisson directly
    CHECK(pmf.probs[0] ==
          doctest::Approx(std::pow(c / (c + load), c)).epsilon(1e-10));
  }
}

TEST_CASE("neighbor_pmf: zero load is a point mass at zero") {
  const Pmf pmf = neighbor_pmf(0.0, 2.0);
  REQUIRE(!pmf.probs.empty());
  CHECK(pmf.probs[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pmf.tail_mass == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("neighbor_pmf: cdf is a nondecreasing map to [0,1]") {
  const Pmf pmf = neighbor_pmf(10.0, 2.0);
  double prev = -1.0;
  for (int n = 0; n < 40; ++n) {
    const double v = pmf.cdf(n);
    CHECK(v >= prev);
    CHECK(v <= 1.0 + 1e-12);
    prev = v;
  }
  CHECK(pmf.cdf(-1) == doctest::Approx(0.0));
}

TEST_CASE("laplace_intercell: closed form at eta=4 and limits") {
  // exp(-2 k theta H / (eta - 2)) with H the arctan kernel
  const double kt = 1.0;
  const double h = std::atan(std::sqrt(kt)) / std::sqrt(kt);
  CHECK(laplace_intercell(kt, 1.0, 4.0) ==
        doctest::Approx(std::exp(-2.0 * kt * h / 2.0)).epsilon(1e-12));
  CHECK(laplace_intercell(0.0, 1.0, 4.0) == doctest::Approx(1.0));
  CHECK(laplace_intercell(1.0, 0.0, 4.0) == doctest::Approx(1.0));
  // heavier load -> more interference -> smaller transform
  double prev = 2.0;
  for (double load : {0.1, 0.3, 0.6, 1.0}) {
    const double v = laplace_intercell(1.0, load, 4.0);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
}

TEST_CASE("laplace_intracell: exact small cases and quadrature oracle") {
  CHECK(laplace_intracell(1.0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(laplace_intracell(0.7, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(laplace_intracell(1.0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(laplace_intracell(1.0, 2) == doctest::Approx(0.625).epsilon(1e-8));
  for (int n : {1, 2, 3, 5, 8}) {
    for (double s : {0.2, 0.5, 1.0, 2.0}) {
      CHECK(laplace_intracell(s, n) ==
            doctest::Approx(oracles::intracell_quadrature(s, n)).epsilon(5e-4));
    }
  }
  // more contenders -> larger interferer -> smaller transform
  double prev = 2.0;
  for (int n : {0, 1, 2, 4, 8, 16}) {
    const double v = laplace_intracell(1.0, n);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
}

TEST_CASE("capture_success_prob: empty network reduces to the noise term") {
  // no contenders and no interference: success iff the fading beats noise
  const double theta = 0.5, noise = 0.3;
  const double v = capture_success_prob(theta, noise, 0.0, 2.0, 4.0);
  CHECK(v == doctest::Approx(std::exp(-theta * noise)).epsilon(1e-9));
}

TEST_CASE("capture_success_prob: against the shot-noise Monte Carlo oracle") {
  struct Case { double theta, m; };
  for (const Case& c : {Case{0.19952623149688797, 10.0},
                        Case{0.31622776601683794, 4.0}}) {
    const double ana = capture_success_prob(c.theta, 0.0, c.m, 2.0, 4.0);
    const double mc = oracles::mc_capture(c.theta, 0.0, c.m, 2.0, 4.0,
                                          400000, 20260824u);
    CHECK(std::abs(ana - mc) < 0.01);
  }
}

TEST_CASE("capture_success_prob: monotone decreasing in threshold and load") {
  double prev = 2.0;
  for (double theta : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    const double v = capture_success_prob(theta, 0.1, 5.0, 2.0, 4.0);
    CHECK(v < prev);
    prev = v;
  }
  prev = 2.0;
  for (double m : {1.0, 5.0, 20.0, 80.0}) {
    const double v = capture_success_prob(0.2, 0.1, m, 2.0, 4.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ra_sr_success / ra_ul_success share the capture engine") {
  SystemParams p;
  p.device_intensity = 100.0;
  const double phi_ra = 0.3;
  // RA-SR: contenders = alpha * phi_ra / n_zc per preamble
  const double m_sr = p.device_intensity * phi_ra / p.n_zc;
  CHECK(ra_sr_success(p, phi_ra) ==
        doctest::Approx(capture_success_prob(p.theta_sr, p.noise_ratio(), m_sr,
                                             p.bs_intensity, p.eta))
            .epsilon(1e-12));
  // RA-UL: contenders = alpha * busy / n_chan per channel
  const double busy = 0.4;
  const double m_ul = p.device_intensity * busy / p.n_chan;
  CHECK(ra_ul_success(p, busy) ==
        doctest::Approx(capture_success_prob(p.theta_ul, p.noise_ratio(), m_ul,
                                             p.bs_intensity, p.eta))
            .epsilon(1e-12));
}

TEST_CASE("ea_tx_success: closed form at eta=4 and alpha-independence") {
  SystemParams p;
  const double th = p.theta_tx;  // 0.31622776601683794
  const double expect = std::exp(-th * p.noise_ratio() -
                                 2.0 * th *
                                     (std::atan(std::sqrt(th)) / std::sqrt(th)) /
                                     (p.eta - 2.0));
  CHECK(ea_tx_success(p) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(ea_tx_success(p) == doctest::Approx(0.5465).epsilon(1e-3));

  SystemParams q = p;
  q.device_intensity = 5000.0;
  CHECK(ea_tx_success(q) == doctest::Approx(ea_tx_success(p)).epsilon(1e-14));
}

TEST_CASE("availability_prob: direct-sum oracle and limits") {
  SystemParams p;
  p.device_intensity = 10.0;  // load 5 per cell
  const std::vector<double> phi_tx = {0.2, 0.1, 0.05};
  // devices in the final grant slot release their blocks: only N-1 entries count
  const double mu = p.device_intensity * (phi_tx[0] + phi_tx[1]);
  const Pmf pmf = neighbor_pmf(mu, p.bs_intensity);
  double direct = 0.0;
  for (int n = 0; n <= p.q_blocks - 1 && n < static_cast<int>(pmf.probs.size()); ++n)
    direct += pmf.probs[n];
  CHECK(availability_prob(p, phi_tx) == doctest::Approx(direct).epsilon(1e-10));

  SystemParams single = p;
  single.n_slots = 1;
  CHECK(availability_prob(single, {0.9}) == doctest::Approx(1.0));
  CHECK(availability_prob(p, {0.0, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
  // heavier Tx occupancy cannot increase availability
  CHECK(availability_prob(p, {0.5, 0.5, 0.5}) <=
        availability_prob(p, {0.1, 0.1, 0.1}) + 1e-12);
}

TEST_CASE("SystemParams validation") {
  SystemParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.alpha() == doctest::Approx(p.device_intensity / p.bs_intensity));
  CHECK(p.noise_ratio() == doctest::Approx(1.0).epsilon(1e-12));

  SystemParams bad = p;
  bad.eta = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = p;
  bad.arrival = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = p;
  bad.n_slots = 0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}
