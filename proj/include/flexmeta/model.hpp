#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexmeta/classic.hpp"
#include "flexmeta/distributions.hpp"

namespace flexmeta::model {

// Default prior scheme. All priors are proper; the uniform bounds and the
// nu truncation are enforced through the unconstrained parameterization, so
// every reachable state is inside the support.
struct PriorConfig {
  double xi_mean = 0.0;
  double xi_sd = 100.0;                  // xi ~ N(xi_mean, xi_sd^2)
  double omega_upper = 20.0;             // omega ~ U(0, omega_upper)
  std::optional<double> omega_fixed;     // point-mass override for omega
  double nu_rate = 0.1;                  // nu - nu_lower ~ Exp(nu_rate)
  double nu_lower = 2.5;
  double alpha_sd = 5.0;                 // alpha ~ N(0, alpha_sd^2)
  double jf_lower = 1.5;                 // a, b ~ U(jf_lower, jf_upper)
  double jf_upper = 200.0;
  double epsilon_sd = 100.0;             // epsilon ~ N(0, epsilon_sd^2)
  double delta_upper = 100.0;            // delta ~ U(0, delta_upper)

  /// Assign by key name ("xi_sd", "omega_fixed", ...); throws
  /// std::invalid_argument on unknown keys or out-of-range values.
  void set(const std::string& key, double value);
};

struct ModelSpec {
  std::vector<classic::StudyRecord> data;
  dist::Family family = dist::Family::normal;
  PriorConfig priors;

  std::size_t num_studies() const { return data.size(); }
};

struct LatentState {
  std::vector<double> theta;  // one latent true effect per study
  dist::FamilyParams hyper;
};

/// Number of free hyperparameter coordinates (omega_fixed removes one).
std::size_t hyper_dim(const ModelSpec& spec);

/// Total unconstrained dimension = hyper_dim + K. Hyperparameters occupy
/// the leading coordinates, in the order reported by hyper_names.
std::size_t dim(const ModelSpec& spec);

/// Constrained-scale names of the free hyperparameter coordinates.
std::vector<std::string> hyper_names(const ModelSpec& spec);

std::vector<double> to_unconstrained(const ModelSpec& spec,
                                     const LatentState& state);
LatentState from_unconstrained(const ModelSpec& spec,
                               std::span<const double> z);

/// Log prior density of the hyperparameters on the constrained scale.
double log_prior(const ModelSpec& spec, const dist::FamilyParams& hyper);

/// Log |d constrained / d z| summed over the constrained coordinates.
double log_jacobian(const ModelSpec& spec, std::span<const double> z);

/// Joint log posterior on the unconstrained scale:
/// Gaussian likelihood + random-effects density + priors + Jacobian.
/// Returns -inf (never NaN) when a component underflows; the sampler
/// treats non-finite values as rejections.
double log_posterior(const ModelSpec& spec, std::span<const double> z);

/// Change in log_posterior when coordinate j moves to zj_new, computed
/// from the affected terms only.
double log_posterior_coord_delta(const ModelSpec& spec,
                                 std::span<const double> z, std::size_t j,
                                 double zj_new);

/// Conditional deviance -2 log p(y | theta), the DIC building block.
double deviance(const ModelSpec& spec, std::span<const double> theta);

}  // namespace flexmeta::model
