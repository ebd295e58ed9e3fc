#include "iotq/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iotq/specfun.hpp"

namespace iotq {

void SystemParams::validate() const {
  if (!(bs_intensity > 0.0)) throw std::domain_error("bs_intensity must be positive");
  if (!(device_intensity > 0.0)) throw std::domain_error("device_intensity must be positive");
  if (!(eta > 2.0)) throw std::domain_error("eta must exceed 2");
  if (!(rho > 0.0)) throw std::domain_error("rho must be positive");
  if (!(noise >= 0.0)) throw std::domain_error("noise must be nonnegative");
  if (!(arrival >= 0.0 && arrival <= 1.0)) throw std::domain_error("arrival must be in [0,1]");
  if (!(theta_sr > 0.0 && theta_tx > 0.0 && theta_ul > 0.0))
    throw std::domain_error("SINR thresholds must be positive");
  if (n_zc < 1 || n_chan < 1 || q_blocks < 1 || n_slots < 1)
    throw std::domain_error("resource counts must be >= 1");
  if (!(cell_const > 0.0)) throw std::domain_error("cell_const must be positive");
}

double Pmf::mean() const {
  double m = 0.0;
  for (std::size_t n = 1; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
  return m;
}

double Pmf::cdf(int n) const {
  if (n < 0) return 0.0;
  double c = 0.0;
  const std::size_t top = std::min<std::size_t>(probs.size(), static_cast<std::size_t>(n) + 1);
  for (std::size_t i = 0; i < top; ++i) c += probs[i];
  return c;
}

namespace spatial {

Pmf neighbor_pmf(double effective_intensity, double bs_intensity,
                 double cell_const, double tail_eps) {
  if (!(effective_intensity >= 0.0))
    throw std::domain_error("neighbor_pmf: effective intensity must be nonnegative");
  if (!(bs_intensity > 0.0))
    throw std::domain_error("neighbor_pmf: bs intensity must be positive");

  Pmf pmf;
  if (effective_intensity == 0.0) {
    pmf.probs = {1.0};
    pmf.tail_mass = 0.0;
    return pmf;
  }

  const double m = effective_intensity;
  const double lc = bs_intensity * cell_const;
  const double ratio = m / (m + lc);
  // P{N=0} = (lc/(m+lc))^c, then
  // P{N=n+1} = P{N=n} * (n+c)/(n+1) * m/(m+lc).
  double pn = std::pow(lc / (m + lc), cell_const);
  double cum = pn;
  pmf.probs.push_back(pn);
  for (int n = 0; 1.0 - cum >= tail_eps; ++n) {
    pn *= (n + cell_const) / (n + 1.0) * ratio;
    cum += pn;
    pmf.probs.push_back(pn);
    if (pmf.probs.size() > 1000000)
      throw std::runtime_error("neighbor_pmf: truncation point not reached");
  }
  pmf.tail_mass = std::max(0.0, 1.0 - cum);
  return pmf;
}

double laplace_intercell(double k_theta, double load_ratio, double eta) {
  if (!(k_theta >= 0.0) || !(load_ratio >= 0.0))
    throw std::domain_error("laplace_intercell: arguments must be nonnegative");
  if (k_theta == 0.0 || load_ratio == 0.0) return 1.0;
  const double hyp = specfun::hyp2f1_interference({eta, k_theta});
  return std::exp(-2.0 * k_theta * load_ratio * hyp / (eta - 2.0));
}

double laplace_intracell(double k_theta, int n) {
  if (!(k_theta >= 0.0)) throw std::domain_error("laplace_intracell: negative argument");
  if (n < 0) throw std::domain_error("laplace_intracell: negative n");
  if (n == 0 || k_theta == 0.0) return 1.0;
  return (n + 1.0) / (1.0 + k_theta) *
         (1.0 / n - specfun::gamma_ratio(n, k_theta));
}

double capture_success_prob(double theta, double noise_ratio,
                            double effective_intensity, double bs_intensity,
                            double eta, double cell_const, double tail_eps) {
  if (!(theta >= 0.0) || !(noise_ratio >= 0.0))
    throw std::domain_error("capture_success_prob: negative threshold or noise ratio");
  const Pmf pmf = neighbor_pmf(effective_intensity, bs_intensity, cell_const, tail_eps);
  const double load_ratio = effective_intensity / bs_intensity;

  double result = 0.0;
  const int n_max = static_cast<int>(pmf.probs.size()) - 1;

  // exp(-k theta nr) * L_inter(k theta) reused across n for each k.
  std::vector<double> gk(n_max + 2);
  for (int k = 1; k <= n_max + 1; ++k) {
    gk[k] = std::exp(-k * theta * noise_ratio) *
            laplace_intercell(k * theta, load_ratio, eta);
  }

  for (int n = 0; n <= n_max; ++n) {
    // Alternating binomial sum, Kahan-compensated in extended precision.
    long double sum = 0.0L;
    long double comp = 0.0L;
    long double binom = 1.0L;  // C(n+1, k), starting at k=1 -> n+1
    for (int k = 1; k <= n + 1; ++k) {
      binom *= static_cast<long double>(n + 2 - k) / k;
      const long double sign = (k % 2 == 1) ? 1.0L : -1.0L;
      const long double term =
          sign * binom * gk[k] * laplace_intracell(k * theta, n);
      const long double y = term - comp;
      const long double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    const double inner = static_cast<double>(sum) / (n + 1);
    if (inner < -1e-6 || inner > 1.0 + 1e-6)
      throw std::runtime_error(
          "capture_success_prob: alternating sum lost precision");
    result += pmf.probs[n] * std::clamp(inner, 0.0, 1.0);
  }
  // The truncated tail contributes at most tail_eps.
  return std::clamp(result, 0.0, 1.0);
}

double ra_sr_success(const SystemParams& params, double phi_ra) {
  if (!(phi_ra >= 0.0 && phi_ra <= 1.0))
    throw std::domain_error("ra_sr_success: phi_ra must be in [0,1]");
  const double eff = phi_ra * params.device_intensity / params.n_zc;
  return capture_success_prob(params.theta_sr, params.noise_ratio(), eff,
                              params.bs_intensity, params.eta, params.cell_const);
}

double ra_ul_success(const SystemParams& params, double busy_prob) {
  if (!(busy_prob >= 0.0 && busy_prob <= 1.0))
    throw std::domain_error("ra_ul_success: busy_prob must be in [0,1]");
  const double eff = busy_prob * params.device_intensity / params.n_chan;
  return capture_success_prob(params.theta_ul, params.noise_ratio(), eff,
                              params.bs_intensity, params.eta, params.cell_const);
}

double ea_tx_success(const SystemParams& params) {
  const double theta = params.theta_tx;
  const double hyp = specfun::hyp2f1_interference({params.eta, theta});
  return std::exp(-params.noise_ratio() * theta -
                  2.0 * theta * hyp / (params.eta - 2.0));
}

double availability_prob(const SystemParams& params,
                         const std::vector<double>& phi_tx, double tail_eps) {
  for (double v : phi_tx)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::domain_error("availability_prob: phi_tx entries must be in [0,1]");
  if (params.n_slots == 1) return 1.0;

  // Devices in the final grant slot release their blocks, so only the first
  // N-1 occupancy probabilities count toward next-slot congestion.
  double phi_sum = 0.0;
  const std::size_t top =
      std::min<std::size_t>(phi_tx.size(), static_cast<std::size_t>(params.n_slots) - 1);
  for (std::size_t i = 0; i < top; ++i) phi_sum += phi_tx[i];

  const Pmf pmf = neighbor_pmf(params.device_intensity * phi_sum,
                               params.bs_intensity, params.cell_const, tail_eps);
  return std::clamp(pmf.cdf(params.q_blocks - 1), 0.0, 1.0);
}

}  // namespace spatial
}  // namespace iotq
