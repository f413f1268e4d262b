#pragma once

namespace itseval::dist {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile. Rational approximation (Acklam's constants)
/// refined by one Halley step; absolute error well below 1e-9.
/// p must lie strictly in (0,1).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b), x in [0,1].
double incomplete_beta(double a, double b, double x);

/// Student-t CDF with nu degrees of freedom.
double t_cdf(double x, double nu);

/// Student-t quantile, p strictly in (0,1).
double t_quantile(double p, double nu);

/// Two-sided p-value for a t statistic with nu degrees of freedom.
double t_two_sided_p(double t, double nu);

/// Upper regularized incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Chi-square survival function P(X > x) with k degrees of freedom.
double chi2_sf(double x, double k);

}  // namespace itseval::dist
