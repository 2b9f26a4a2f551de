#pragma once

#include <span>
#include <string>
#include <vector>

#include "flexmeta/classic.hpp"
#include "flexmeta/sampler.hpp"

namespace flexmeta::inference {

// Posterior summary of the overall effect mu, one table row per family.
struct SummaryRow {
  std::string family;
  double mean = 0.0;
  double sd = 0.0;
  classic::Interval cri95;
  double prob_below_zero = 0.0;
  double dic = 0.0;
  double pd = 0.0;
  double dbar = 0.0;
  double dev_at_mean = 0.0;
};

struct PredictiveRow {
  std::string family;
  double mean = 0.0;
  double sd = 0.0;
  classic::Interval pi95;
  double prob_below_zero = 0.0;
};

struct DicResult {
  double dbar = 0.0;         // mean posterior deviance
  double dev_at_mean = 0.0;  // deviance at the per-study posterior mean
  double pd = 0.0;
  double dic = 0.0;
};

/// Quantile with linear interpolation between order statistics (the common
/// "type 7" rule); draws need not be sorted.
double quantile_type7(std::span<const double> draws, double p);

/// Posterior mean/SD/equal-tailed 95% interval/Pr(mu < 0) of the derived mu
/// column. DIC fields are NaN in this overload.
SummaryRow summarize_mu(const sampler::DrawsMatrix& draws);

/// Same, with the DIC block attached.
SummaryRow summarize_mu(const sampler::DrawsMatrix& draws,
                        const model::ModelSpec& spec);

/// One draw of theta_new per kept hyperparameter draw, in chain order.
std::vector<double> predictive_draws(const sampler::DrawsMatrix& draws,
                                     Rng& rng);

PredictiveRow summarize_predictive(const std::string& family,
                                   std::span<const double> theta_new);

/// pD and DIC from the two deviance summaries; dic() composes this with
/// the draws.
DicResult dic_from(double dbar, double dev_at_mean);

DicResult dic(const sampler::DrawsMatrix& draws, const model::ModelSpec& spec);

struct DensityGrid {
  std::vector<double> theta;
  std::vector<double> density;
};

/// Exact pdf evaluations of a fixed family on a uniform grid.
DensityGrid density_grid(const dist::FamilyParams& p, double lo, double hi,
                         std::size_t points);

/// Gaussian-kernel density (Silverman bandwidth) of a draw vector on a
/// uniform grid.
DensityGrid density_grid(std::span<const double> draws, double lo, double hi,
                         std::size_t points);

/// As above with an automatic range wide enough to hold the kernel mass.
DensityGrid density_grid(std::span<const double> draws,
                         std::size_t points = 512);

}  // namespace flexmeta::inference
