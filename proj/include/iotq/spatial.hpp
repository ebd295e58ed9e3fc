#pragma once

#include <vector>

namespace iotq {

/// Full scenario description.  All radio quantities are linear (watts and
/// linear SINR ratios); dB/dBm conversion happens at config parse time.
struct SystemParams {
  double bs_intensity = 2.0;       // lambda, BS/km^2
  double device_intensity = 100.0; // mu, device/km^2
  double eta = 4.0;                // path-loss exponent, > 2
  double rho = 1e-12;              // power-control target, W
  double noise = 1e-12;            // sigma^2, W
  double arrival = 0.1;            // a, packet/slot
  double theta_sr = 0.19952623149688797;  // -7 dB
  double theta_tx = 0.31622776601683794;  // -5 dB
  double theta_ul = 0.31622776601683794;  // -5 dB
  int n_zc = 64;     // ZC codes per BS
  int n_chan = 55;   // RA-UL resource blocks
  int q_blocks = 50; // EA-Tx resource blocks
  int n_slots = 3;   // N, EA-Tx grant length
  double cell_const = 3.575;

  double alpha() const { return device_intensity / bs_intensity; }
  double noise_ratio() const { return noise / rho; }
  void validate() const;
};

/// Discrete distribution over {0,1,...}, truncated with residual tail mass.
struct Pmf {
  std::vector<double> probs;
  double tail_mass = 0.0;

  double mean() const;
  double cdf(int n) const;  // P{X <= n}
};

namespace spatial {

constexpr double kDefaultTailEps = 1e-9;

/// Distribution of the number of same-cell neighbors for a gamma-approximated
/// Voronoi cell area, given the effective interferer intensity m and the BS
/// intensity lambda.  Truncated when the remaining tail is below tail_eps.
Pmf neighbor_pmf(double effective_intensity, double bs_intensity,
                 double cell_const = 3.575, double tail_eps = kDefaultTailEps);

/// Laplace transform of the intercell interference at argument k*theta.
/// load_ratio is (effective interferer intensity) / lambda.
double laplace_intercell(double k_theta, double load_ratio, double eta);

/// Laplace transform of the fitted intracell interference given n same-cell
/// interferers.  Equals 1 for n = 0 (no intracell interferer).
double laplace_intracell(double k_theta, int n);

/// SINR capture success probability: highest-SINR decoding against intracell
/// contenders plus intercell interference and noise, averaged over the
/// neighbor count distribution.
double capture_success_prob(double theta, double noise_ratio,
                            double effective_intensity, double bs_intensity,
                            double eta, double cell_const = 3.575,
                            double tail_eps = kDefaultTailEps);

/// RA-SR success probability P_RA for the scheduled scheme, given the
/// probability phi_ra of a device being in the RA-SR phase.
double ra_sr_success(const SystemParams& params, double phi_ra);

/// RA-UL transmission success probability p, given the probability of a
/// non-empty buffer (1 - x0).
double ra_ul_success(const SystemParams& params, double busy_prob);

/// EA-Tx transmission success probability P_Tx.  Independent of the device
/// density: at most one scheduled device per BS per channel.
double ea_tx_success(const SystemParams& params);

/// Probability that a scheduled-grant resource block is available, given the
/// per-slot occupancy probabilities phi_tx (length N; the last slot's devices
/// release their blocks and are excluded).
double availability_prob(const SystemParams& params,
                         const std::vector<double>& phi_tx,
                         double tail_eps = kDefaultTailEps);

}  // namespace spatial
}  // namespace iotq
