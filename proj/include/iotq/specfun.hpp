#pragma once

namespace iotq::specfun {

/// Arguments of the interference hypergeometric kernel.
/// eta is the path-loss exponent (> 2), z the nonnegative argument.
struct HypArgs {
  double eta;
  double z;
};

/// Evaluates 2F1(1, 1-2/eta; 2-2/eta; -z) for eta > 2, z >= 0.
/// Continuous, decreasing in z, equal to 1 at z = 0.
/// At eta = 4 this reduces to atan(sqrt(z))/sqrt(z).
double hyp2f1_interference(const HypArgs& args);

/// log Gamma(x) for x > 0.
double ln_gamma(double x);

/// Gamma(n) * Gamma(2+t) / Gamma(2+n+t), computed in the log domain.
/// Always in (0, 1]; safe for n up to 1e4 and beyond.
double gamma_ratio(int n, double t);

}  // namespace iotq::specfun
