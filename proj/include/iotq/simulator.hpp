#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "iotq/solver.hpp"
#include "iotq/spatial.hpp"

namespace iotq::sim {

/// One spatial draw: PPP base stations and devices on a square region,
/// nearest-BS association, and exact path-loss-inversion transmit powers.
struct NetworkRealization {
  double half_width = 0.0;  // km; region is [-hw, hw]^2 centred at the origin
  std::vector<std::array<double, 2>> bs_points;      // km
  std::vector<std::array<double, 2>> device_points;  // km
  std::vector<int> association;       // device -> nearest BS index
  std::vector<double> service_distance;  // km
  std::vector<double> tx_power;          // watts, rho * r^eta
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;      // batch-means standard error
  std::int64_t n = 0;   // sample count
};

/// Empirical counterparts of the analytical metrics, gathered from devices
/// within 1 km of the origin after warmup.
struct SimStats {
  Estimate p_ra_hat;       // SC-UL: RA-SR capture probability per attempt
  Estimate p_tx_hat;       // SC-UL: EA-Tx success probability per transmission
  Estimate p_hat;          // RA-UL: per-attempt success probability
  Estimate mean_queue_hat;
  Estimate wait_mean_hat;
  Pmf wait_pmf_hat;
  double dispersion_hat = 0.0;
  std::int64_t overflow_count = 0;
  std::int64_t slots_collected = 0;
  int warmup_used = 0;
};

inline constexpr int kBufferCap = 10000;

NetworkRealization realize_network(const SystemParams& params,
                                   double region_half_width, std::uint64_t seed);

/// Slot-by-slot interacting-queue simulation over one realization.  `warmup`
/// is a floor: collection starts once a 200-slot sliding mean of the observed
/// queue length has stabilised within 5% (capped at 10x warmup).
SimStats run_sim(const NetworkRealization& net, const SystemParams& params,
                 solver::Scheme scheme, std::int64_t slots, std::int64_t warmup,
                 std::uint64_t seed);

struct MetricGap {
  std::string name;
  double sim = 0.0;
  double analysis = 0.0;
  double gap = 0.0;  // |sim - analysis|
  double z = 0.0;    // gap / standard error
  double tol = 0.0;
  bool pass = true;
  bool skipped = false;  // no samples on the simulation side
};

struct Tolerances {
  double p_tx = 0.03;
  double p = 0.03;
  double p_ra = 0.05;  // loosest: the ZC-collision approximation bites here
};

struct Discrepancy {
  std::vector<MetricGap> gaps;
  bool pass = true;
};

Discrepancy compare_to_analysis(const SimStats& stats,
                                const solver::SolverReport& report,
                                const Tolerances& tol = {});

}  // namespace iotq::sim
