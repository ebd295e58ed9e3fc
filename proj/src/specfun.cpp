#include "iotq/specfun.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace iotq::specfun {

namespace {

constexpr double kTermTol = 1e-15;
constexpr int kMaxTerms = 100000;

// 2F1(1, b; b+1; -z) for b in (0,1), z in [0, 0.5]: term ratio is
// -(b+n)/(b+n+1) * z, terms alternate and shrink geometrically.
double kernel_series(double b, double z) {
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < kMaxTerms; ++n) {
    term *= -(b + n) / (b + n + 1.0) * z;
    sum += term;
    if (std::abs(term) < kTermTol * std::abs(sum)) return sum;
  }
  throw std::runtime_error("hyp2f1_interference: series did not converge");
}

// Pfaff transform: 2F1(1, b; b+1; -z) = (1+z)^(-b) 2F1(b, b; b+1; w),
// w = z/(1+z).  Used on the mid range where w <= 2/3.
double kernel_pfaff(double b, double z) {
  const double w = z / (1.0 + z);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < kMaxTerms; ++n) {
    term *= (b + n) * (b + n) / ((b + n + 1.0) * (n + 1.0)) * w;
    sum += term;
    if (term < kTermTol * sum) return std::pow(1.0 + z, -b) * sum;
  }
  throw std::runtime_error("hyp2f1_interference: Pfaff series did not converge");
}

// 2F1(1, b; b+1; -z) with b in (0,1).
double kernel(double b, double z) {
  if (z == 0.0) return 1.0;
  if (z <= 0.5) return kernel_series(b, z);
  if (z <= 2.0) return kernel_pfaff(b, z);
  // Large argument: connection formula maps z to 1/z < 0.5.
  //   2F1(1,b;b+1;-z) = pi*b/sin(pi*b) * z^(-b)
  //                     - b/(1-b) * z^(-1) * 2F1(1,1-b;2-b;-1/z)
  const double lead = std::numbers::pi * b / std::sin(std::numbers::pi * b) *
                      std::pow(z, -b);
  return lead - b / (1.0 - b) / z * kernel_series(1.0 - b, 1.0 / z);
}

}  // namespace

double hyp2f1_interference(const HypArgs& args) {
  if (!(args.eta > 2.0)) throw std::domain_error("hyp2f1_interference: eta must exceed 2");
  if (!(args.z >= 0.0)) throw std::domain_error("hyp2f1_interference: z must be nonnegative");
  return kernel(1.0 - 2.0 / args.eta, args.z);
}

double ln_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("ln_gamma: x must be positive");
  return std::lgamma(x);
}

double gamma_ratio(int n, double t) {
  if (n < 1) throw std::domain_error("gamma_ratio: n must be >= 1");
  if (!(t >= 0.0)) throw std::domain_error("gamma_ratio: t must be nonnegative");
  return std::exp(ln_gamma(n) + ln_gamma(2.0 + t) - ln_gamma(2.0 + n + t));
}

}  // namespace iotq::specfun
