#ifndef KERNELCAST_STATS_HPP
#define KERNELCAST_STATS_HPP

namespace kcast {

double normal_cdf(double x);
double normal_quantile(double p);  // inverse of normal_cdf, p in (0,1)

// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double chi_squared_sf(double x, int dof);  // upper tail

// CDF of the studentized range with k groups and infinite degrees of
// freedom: k * Integral phi(z) [Phi(z) - Phi(z - q)]^(k-1) dz.
double studentized_range_cdf(double q, int k);

}  // namespace kcast

#endif
