#pragma once

// Self-contained special functions used by the density and moment formulas.
// Everything here is a pure function of its arguments; out-of-domain inputs
// throw std::domain_error rather than propagating NaN.

namespace flexmeta::specfun {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2Pi = 1.83787706640934548356;  // ln(2*pi)
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kSqrt2 = 1.41421356237309504880;

/// ln Gamma(x) for x > 0 (Lanczos series, relative error ~1e-14).
double log_gamma(double x);

/// ln B(a, b) for a, b > 0.
double log_beta(double a, double b);

/// Standard normal density and log-density.
double normal_pdf(double x);
double log_normal_pdf(double x);

/// Standard normal CDF, absolute error below 1e-14.
double normal_cdf(double x);

/// ln Phi(x), stable far into the lower tail (asymptotic series for x < -34).
double log_normal_cdf(double x);

/// Student t log-density with nu > 0 degrees of freedom (non-integer allowed).
double student_t_log_pdf(double x, double nu);

/// Student t CDF via the regularized incomplete beta function.
double student_t_cdf(double x, double nu);

/// Inverse of student_t_cdf in x for p in (0, 1).
double student_t_quantile(double p, double nu);

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
double reg_inc_beta(double a, double b, double x);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a).
double reg_gamma_q(double a, double x);

/// Survival function of the chi-square distribution with df > 0.
double chi_square_sf(double x, double df);

/// Modified Bessel function of the second kind K_order(x), x > 0.
/// Even in the order. Temme series for x <= 2, Steed continued fraction
/// otherwise, half-integer closed forms as a fast path.
double bessel_k(double order, double x);

/// ln K_order(x); remains finite for large orders where K itself overflows.
double log_bessel_k(double order, double x);

}  // namespace flexmeta::specfun
