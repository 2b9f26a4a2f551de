#include "flexmeta/distributions.hpp"

#include <cmath>
#include <stdexcept>

#include "flexmeta/specfun.hpp"

namespace flexmeta::dist {

namespace sf = flexmeta::specfun;

namespace {

double log_add_exp(double la, double lb) {
  if (la < lb) std::swap(la, lb);
  if (std::isinf(la) && la < 0.0) return la;
  return la + std::log1p(std::exp(lb - la));
}

// ln cosh(u), overflow-safe.
double log_cosh(double u) {
  u = std::fabs(u);
  return u + std::log1p(std::exp(-2.0 * u)) - sf::kLn2;
}

// ln |sinh(u)| for u != 0, exact down to tiny u.
double log_abs_sinh(double u) {
  u = std::fabs(u);
  return u + std::log(-std::expm1(-2.0 * u)) - sf::kLn2;
}

[[noreturn]] void invalid(const std::string& what) {
  throw std::domain_error("dist: " + what);
}

bool domain_ok(const FamilyParams& p) {
  if (!std::isfinite(p.xi) || !(p.omega > 0.0) || !std::isfinite(p.omega))
    return false;
  switch (p.family) {
    case Family::normal:
      return true;
    case Family::student_t:
      return p.nu > 0.0 && std::isfinite(p.nu);
    case Family::skew_normal:
      return std::isfinite(p.alpha);
    case Family::skew_t:
    case Family::as2:
      return p.nu > 0.0 && std::isfinite(p.nu) && std::isfinite(p.alpha);
    case Family::jones_faddy:
      return p.a > 0.0 && p.b > 0.0 && std::isfinite(p.a) && std::isfinite(p.b);
    case Family::sinh_arcsinh:
      return p.delta > 0.0 && std::isfinite(p.delta) &&
             std::isfinite(p.epsilon);
  }
  return false;
}

void require_domain(const FamilyParams& p) {
  if (!domain_ok(p)) invalid("invalid parameters for " +
                             std::string(family_name(p.family)));
}

// Subbotin skewing CDF F_s(t) = Phi(sgn(t) |t|^{nu/2} / sqrt(nu/2)),
// returned on the log scale.
double log_subbotin_cdf(double t, double nu) {
  if (t == 0.0) return -sf::kLn2;
  const double w = std::pow(std::fabs(t), 0.5 * nu) / std::sqrt(0.5 * nu);
  return sf::log_normal_cdf(t > 0.0 ? w : -w);
}

// ln of the Subbotin normalizer 2 nu^{1/nu} Gamma(1 + 1/nu).
double log_subbotin_norm(double nu) {
  return sf::kLn2 + std::log(nu) / nu + sf::log_gamma(1.0 + 1.0 / nu);
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// E and V of the standardized family (xi = 0, omega = 1).
struct StdMoments {
  double mean;
  double second_raw;  // E[Z^2]
};

double skew_delta(double alpha) { return alpha / std::sqrt(1.0 + alpha * alpha); }

double skew_t_bnu(double nu) {
  return std::exp(0.5 * std::log(nu) + sf::log_gamma(0.5 * (nu - 1.0)) -
                  0.5 * std::log(sf::kPi) - sf::log_gamma(0.5 * nu));
}

double as2_cnu(double nu) {
  return std::exp(std::log(nu) / nu + sf::log_gamma(2.0 / nu) -
                  sf::log_gamma(1.0 / nu));
}

double as2_qnu(double nu, double alpha) {
  const double arg = std::sqrt(4.0 * std::pow(std::fabs(alpha), nu) / nu);
  return 2.0 * sf::student_t_cdf(arg, 4.0 / nu) - 1.0;
}

double jf_eta(double a, double b) {
  if (a == b) return 0.0;
  return (a - b) * std::exp(0.5 * std::log(a + b) + sf::log_gamma(a - 0.5) +
                            sf::log_gamma(b - 0.5) - sf::kLn2 -
                            sf::log_gamma(a) - sf::log_gamma(b));
}

// sinh-arcsinh standardized mean zeta and raw second moment lambda, computed
// in log space so that extreme shape draws degrade to inf instead of NaN.
double sas_zeta(double epsilon, double delta) {
  if (epsilon == 0.0) return 0.0;
  const double lk = log_add_exp(sf::log_bessel_k((1.0 / delta + 1.0) / 2.0, 0.25),
                                sf::log_bessel_k((1.0 / delta - 1.0) / 2.0, 0.25));
  const double l = 0.25 - 0.5 * std::log(8.0 * sf::kPi) +
                   log_abs_sinh(epsilon / delta) + lk;
  return sgn(epsilon) * std::exp(l);
}

double sas_lambda(double epsilon, double delta) {
  const double lk = log_add_exp(sf::log_bessel_k((2.0 / delta + 1.0) / 2.0, 0.25),
                                sf::log_bessel_k((2.0 / delta - 1.0) / 2.0, 0.25));
  const double l = 0.25 - 0.5 * std::log(8.0 * sf::kPi) +
                   log_cosh(2.0 * epsilon / delta) + lk;
  return 0.5 * std::expm1(l);
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::normal: return "normal";
    case Family::student_t: return "t";
    case Family::skew_normal: return "skew-normal";
    case Family::skew_t: return "skew-t";
    case Family::as2: return "as2";
    case Family::jones_faddy: return "jones-faddy";
    case Family::sinh_arcsinh: return "sinh-arcsinh";
  }
  return "?";
}

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : all_families()) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families = {
      Family::normal,      Family::student_t,  Family::skew_normal,
      Family::skew_t,      Family::as2,        Family::jones_faddy,
      Family::sinh_arcsinh};
  return families;
}

FamilyParams FamilyParams::make_normal(double xi, double omega) {
  FamilyParams p;
  p.family = Family::normal;
  p.xi = xi;
  p.omega = omega;
  return p;
}

FamilyParams FamilyParams::make_student_t(double xi, double omega, double nu) {
  FamilyParams p;
  p.family = Family::student_t;
  p.xi = xi;
  p.omega = omega;
  p.nu = nu;
  return p;
}

FamilyParams FamilyParams::make_skew_normal(double xi, double omega,
                                            double alpha) {
  FamilyParams p;
  p.family = Family::skew_normal;
  p.xi = xi;
  p.omega = omega;
  p.alpha = alpha;
  return p;
}

FamilyParams FamilyParams::make_skew_t(double xi, double omega, double nu,
                                       double alpha) {
  FamilyParams p;
  p.family = Family::skew_t;
  p.xi = xi;
  p.omega = omega;
  p.nu = nu;
  p.alpha = alpha;
  return p;
}

FamilyParams FamilyParams::make_as2(double xi, double omega, double nu,
                                    double alpha) {
  FamilyParams p;
  p.family = Family::as2;
  p.xi = xi;
  p.omega = omega;
  p.nu = nu;
  p.alpha = alpha;
  return p;
}

FamilyParams FamilyParams::make_jones_faddy(double xi, double omega, double a,
                                            double b) {
  FamilyParams p;
  p.family = Family::jones_faddy;
  p.xi = xi;
  p.omega = omega;
  p.a = a;
  p.b = b;
  return p;
}

FamilyParams FamilyParams::make_sinh_arcsinh(double xi, double omega,
                                             double epsilon, double delta) {
  FamilyParams p;
  p.family = Family::sinh_arcsinh;
  p.xi = xi;
  p.omega = omega;
  p.epsilon = epsilon;
  p.delta = delta;
  return p;
}

std::size_t param_count(Family f) {
  switch (f) {
    case Family::normal: return 2;
    case Family::student_t:
    case Family::skew_normal: return 3;
    default: return 4;
  }
}

std::vector<std::string> validate(const FamilyParams& p) {
  std::vector<std::string> out;
  auto flag = [&out](const char* msg) { out.emplace_back(msg); };
  if (!std::isfinite(p.xi)) flag("xi must be finite");
  if (!(p.omega > 0.0) || !std::isfinite(p.omega)) flag("omega must be positive and finite");
  const bool has_nu = p.family == Family::student_t ||
                      p.family == Family::skew_t || p.family == Family::as2;
  if (has_nu) {
    if (!(p.nu > 0.0) || !std::isfinite(p.nu)) {
      flag("nu must be positive and finite");
    } else if (p.nu <= 2.5) {
      flag("mean/variance require nu above prior bound 2.5");
    }
  }
  if (p.family == Family::skew_normal || p.family == Family::skew_t ||
      p.family == Family::as2) {
    if (!std::isfinite(p.alpha)) flag("alpha must be finite");
  }
  if (p.family == Family::jones_faddy) {
    if (!(p.a > 0.0) || !std::isfinite(p.a)) flag("a must be positive and finite");
    if (!(p.b > 0.0) || !std::isfinite(p.b)) flag("b must be positive and finite");
    if (p.a > 0.0 && p.a <= 0.5) flag("mean requires a > 1/2");
    if (p.b > 0.0 && p.b <= 0.5) flag("mean requires b > 1/2");
    if (p.a > 0.5 && p.a <= 1.0) flag("variance requires a > 1");
    if (p.b > 0.5 && p.b <= 1.0) flag("variance requires b > 1");
  }
  if (p.family == Family::sinh_arcsinh) {
    if (!(p.delta > 0.0) || !std::isfinite(p.delta)) flag("delta must be positive and finite");
    if (!std::isfinite(p.epsilon)) flag("epsilon must be finite");
  }
  return out;
}

PreparedLogPdf::PreparedLogPdf(const FamilyParams& p) : p_(p) {
  require_domain(p);
  log_omega_ = std::log(p.omega);
  switch (p.family) {
    case Family::normal:
    case Family::skew_normal:
      break;
    case Family::student_t:
      c0_ = sf::log_gamma(0.5 * (p.nu + 1.0)) - sf::log_gamma(0.5 * p.nu) -
            0.5 * std::log(p.nu * sf::kPi);
      break;
    case Family::skew_t:
      c0_ = sf::log_gamma(0.5 * (p.nu + 1.0)) - sf::log_gamma(0.5 * p.nu) -
            0.5 * std::log(p.nu * sf::kPi);
      c1_ = p.nu + 1.0;
      break;
    case Family::as2:
      c0_ = -log_subbotin_norm(p.nu);
      break;
    case Family::jones_faddy:
      // ln C_{a,b} = (a+b-1) ln 2 + ln B(a,b) + ln(a+b)/2
      c0_ = (p.a + p.b - 1.0) * sf::kLn2 + sf::log_beta(p.a, p.b) +
            0.5 * std::log(p.a + p.b);
      break;
    case Family::sinh_arcsinh:
      c0_ = std::log(p.delta) - 0.5 * sf::kLn2Pi;
      break;
  }
}

double PreparedLogPdf::operator()(double theta) const {
  if (std::isnan(theta)) invalid("log_pdf of NaN");
  const double z = (theta - p_.xi) / p_.omega;
  switch (p_.family) {
    case Family::normal:
      return sf::log_normal_pdf(z) - log_omega_;
    case Family::student_t:
      return c0_ - 0.5 * (p_.nu + 1.0) * std::log1p(z * z / p_.nu) -
             log_omega_;
    case Family::skew_normal:
      return sf::kLn2 + sf::log_normal_pdf(z) +
             sf::log_normal_cdf(p_.alpha * z) - log_omega_;
    case Family::skew_t: {
      const double base =
          c0_ - 0.5 * (p_.nu + 1.0) * std::log1p(z * z / p_.nu);
      // z / sqrt(nu + z^2), kept finite when z^2 overflows
      const double t = std::fabs(z) < 1e150
                           ? z / std::sqrt(p_.nu + z * z)
                           : sgn(z);
      const double w = p_.alpha * std::sqrt(c1_) * t;
      return sf::kLn2 + base + std::log(sf::student_t_cdf(w, c1_)) -
             log_omega_;
    }
    case Family::as2: {
      const double kernel = -std::pow(std::fabs(z), p_.nu) / p_.nu;
      return sf::kLn2 + c0_ + kernel +
             log_subbotin_cdf(p_.alpha * z, p_.nu) - log_omega_;
    }
    case Family::jones_faddy: {
      const double az = std::fabs(z);
      double lp;
      if (az > 1e150) {
        // far tail: s ~ |z|, thin side collapses to (a+b)/(2 z^2)
        const double heavy = z >= 0.0 ? p_.a : p_.b;
        const double light = z >= 0.0 ? p_.b : p_.a;
        lp = (heavy + 0.5) * sf::kLn2 +
             (light + 0.5) *
                 (std::log(p_.a + p_.b) - sf::kLn2 - 2.0 * std::log(az));
      } else {
        const double s = std::sqrt(p_.a + p_.b + z * z);
        // 1 -/+ z/s rewritten against cancellation on the thin-tail side
        if (z >= 0.0) {
          lp = (p_.a + 0.5) * std::log1p(z / s) +
               (p_.b + 0.5) *
                   (std::log(p_.a + p_.b) - std::log(s) - std::log(s + z));
        } else {
          lp = (p_.b + 0.5) * std::log1p(-z / s) +
               (p_.a + 0.5) *
                   (std::log(p_.a + p_.b) - std::log(s) - std::log(s - z));
        }
      }
      return lp - c0_ - log_omega_;
    }
    case Family::sinh_arcsinh: {
      const double r = p_.delta * std::asinh(z) - p_.epsilon;
      const double s = std::sinh(r);
      return c0_ + log_cosh(r) - 0.5 * s * s - 0.5 * std::log1p(z * z) -
             log_omega_;
    }
  }
  invalid("unknown family");
}

double log_pdf(const FamilyParams& p, double theta) {
  return PreparedLogPdf(p)(theta);
}

double mean(const FamilyParams& p) {
  require_domain(p);
  switch (p.family) {
    case Family::normal:
      return p.xi;
    case Family::student_t:
      if (!(p.nu > 1.0)) invalid("t mean requires nu > 1");
      return p.xi;
    case Family::skew_normal:
      return p.xi + p.omega * std::sqrt(2.0 / sf::kPi) * skew_delta(p.alpha);
    case Family::skew_t:
      if (!(p.nu > 1.0)) invalid("skew-t mean requires nu > 1");
      return p.xi + p.omega * skew_t_bnu(p.nu) * skew_delta(p.alpha);
    case Family::as2:
      return p.xi + sgn(p.alpha) * p.omega * as2_cnu(p.nu) * as2_qnu(p.nu, p.alpha);
    case Family::jones_faddy:
      if (!(p.a > 0.5 && p.b > 0.5))
        invalid("jones-faddy mean requires a > 1/2 and b > 1/2");
      return p.xi + p.omega * jf_eta(p.a, p.b);
    case Family::sinh_arcsinh:
      return p.xi + p.omega * sas_zeta(p.epsilon, p.delta);
  }
  invalid("unknown family");
}

double variance(const FamilyParams& p) {
  require_domain(p);
  const double w2 = p.omega * p.omega;
  switch (p.family) {
    case Family::normal:
      return w2;
    case Family::student_t:
      if (!(p.nu > 2.0)) invalid("t variance requires nu > 2");
      return w2 * p.nu / (p.nu - 2.0);
    case Family::skew_normal: {
      const double bd = std::sqrt(2.0 / sf::kPi) * skew_delta(p.alpha);
      return w2 * (1.0 - bd * bd);
    }
    case Family::skew_t: {
      if (!(p.nu > 2.0)) invalid("skew-t variance requires nu > 2");
      const double bd = skew_t_bnu(p.nu) * skew_delta(p.alpha);
      return w2 * (p.nu / (p.nu - 2.0) - bd * bd);
    }
    case Family::as2: {
      const double second = std::exp(2.0 * std::log(p.nu) / p.nu +
                                     sf::log_gamma(3.0 / p.nu) -
                                     sf::log_gamma(1.0 / p.nu));
      const double m = as2_cnu(p.nu) * as2_qnu(p.nu, p.alpha);
      return w2 * (second - m * m);
    }
    case Family::jones_faddy: {
      if (!(p.a > 1.0 && p.b > 1.0))
        invalid("jones-faddy variance requires a > 1 and b > 1");
      const double eta = jf_eta(p.a, p.b);
      const double d = p.a - p.b, s = p.a + p.b;
      const double second = 0.25 * s * (d * d + s - 2.0) /
                            ((p.a - 1.0) * (p.b - 1.0));
      return w2 * (second - eta * eta);
    }
    case Family::sinh_arcsinh: {
      const double zeta = sas_zeta(p.epsilon, p.delta);
      return w2 * (sas_lambda(p.epsilon, p.delta) - zeta * zeta);
    }
  }
  invalid("unknown family");
}

double sample(const FamilyParams& p, Rng& rng) {
  require_domain(p);
  double z = 0.0;
  switch (p.family) {
    case Family::normal:
      z = rng.normal();
      break;
    case Family::student_t:
      z = rng.student_t(p.nu);
      break;
    case Family::skew_normal: {
      z = rng.normal();
      const double u = rng.uniform();
      if (u > sf::normal_cdf(p.alpha * z)) z = -z;
      break;
    }
    case Family::skew_t: {
      z = rng.student_t(p.nu);
      const double u = rng.uniform();
      const double t =
          std::fabs(z) < 1e150 ? z / std::sqrt(p.nu + z * z) : sgn(z);
      const double w = p.alpha * std::sqrt(p.nu + 1.0) * t;
      if (u > sf::student_t_cdf(w, p.nu + 1.0)) z = -z;
      break;
    }
    case Family::as2: {
      // |Z|^nu / nu ~ Gamma(1/nu) for the symmetric Subbotin base
      const double g = rng.gamma(1.0 / p.nu);
      const double mag = std::pow(p.nu * g, 1.0 / p.nu);
      z = rng.uniform() < 0.5 ? -mag : mag;
      const double u = rng.uniform();
      if (std::log(u) > log_subbotin_cdf(p.alpha * z, p.nu)) z = -z;
      break;
    }
    case Family::jones_faddy: {
      const double bt = rng.beta(p.a, p.b);
      z = std::sqrt(p.a + p.b) * (2.0 * bt - 1.0) /
          (2.0 * std::sqrt(bt * (1.0 - bt)));
      break;
    }
    case Family::sinh_arcsinh: {
      const double n = rng.normal();
      z = std::sinh((std::asinh(n) + p.epsilon) / p.delta);
      break;
    }
  }
  return p.xi + p.omega * z;
}

}  // namespace flexmeta::dist
