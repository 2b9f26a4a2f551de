#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flexmeta/rng.hpp"

namespace flexmeta::dist {

// The seven random-effects families. Location xi and scale omega are shared;
// each family adds its own shape parameters.
enum class Family {
  normal,
  student_t,
  skew_normal,
  skew_t,
  as2,
  jones_faddy,
  sinh_arcsinh,
};

/// Canonical command-line / report label ("normal", "t", "skew-normal", ...).
std::string_view family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);
const std::vector<Family>& all_families();

struct FamilyParams {
  Family family = Family::normal;
  double xi = 0.0;
  double omega = 1.0;
  double alpha = 0.0;    // skewness: skew_normal, skew_t, as2
  double nu = 0.0;       // degrees of freedom: student_t, skew_t, as2
  double a = 0.0;        // shape: jones_faddy
  double b = 0.0;        // shape: jones_faddy
  double epsilon = 0.0;  // skewness: sinh_arcsinh
  double delta = 1.0;    // kurtosis: sinh_arcsinh

  static FamilyParams make_normal(double xi, double omega);
  static FamilyParams make_student_t(double xi, double omega, double nu);
  static FamilyParams make_skew_normal(double xi, double omega, double alpha);
  static FamilyParams make_skew_t(double xi, double omega, double nu,
                                  double alpha);
  static FamilyParams make_as2(double xi, double omega, double nu,
                               double alpha);
  static FamilyParams make_jones_faddy(double xi, double omega, double a,
                                       double b);
  static FamilyParams make_sinh_arcsinh(double xi, double omega,
                                        double epsilon, double delta);
};

/// Number of hyperparameters including xi and omega (2, 3 or 4).
std::size_t param_count(Family f);

/// Every violated parameter-domain or moment-existence condition; empty
/// means the parameters are fully usable.
std::vector<std::string> validate(const FamilyParams& p);

/// Log-density at theta. Throws std::domain_error on invalid parameters
/// (nonpositive scale/shape, non-finite values). May return -inf where the
/// density genuinely underflows.
double log_pdf(const FamilyParams& p, double theta);

/// Closed-form mean; throws std::domain_error when the first moment does
/// not exist under p.
double mean(const FamilyParams& p);

/// Closed-form variance; throws std::domain_error when the second moment
/// does not exist under p.
double variance(const FamilyParams& p);

/// One exact draw. Skew-symmetric families use the sign-flip construction,
/// Jones-Faddy its Beta representation, sinh-arcsinh the inverse transform.
double sample(const FamilyParams& p, Rng& rng);

// Normalizing constants and shape-only terms hoisted out of the per-theta
// evaluation; the sampler evaluates one hyperparameter candidate against
// every latent effect, so this saves the repeated log-gamma work.
class PreparedLogPdf {
 public:
  explicit PreparedLogPdf(const FamilyParams& p);
  double operator()(double theta) const;

 private:
  FamilyParams p_;
  double log_omega_ = 0.0;
  double c0_ = 0.0, c1_ = 0.0, c2_ = 0.0;
};

}  // namespace flexmeta::dist
