#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexmeta/model.hpp"
#include "flexmeta/rng.hpp"

namespace flexmeta::sampler {

struct SamplerConfig {
  std::size_t chains = 4;
  std::size_t warmup = 10000;   // adaptation sweeps per chain
  std::size_t keep = 250000;    // post-warmup draws, total across chains
  std::uint64_t seed = 0;
  double target_accept = 0.44;  // per-coordinate Robbins-Monro target
  std::size_t thin = 1;
  std::size_t max_threads = 1;  // chains run in parallel up to this many
  std::uint64_t stream_offset = 0;  // base RNG stream id (per-family slot)
};

// Target density interface for the component-wise sampler. coord_delta may
// be overridden with a cheaper local computation; the default performs two
// full evaluations.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual std::size_t dim() const = 0;
  virtual double log_density(std::span<const double> z) const = 0;
  virtual double coord_delta(std::span<const double> z, std::size_t j,
                             double zj_new) const;
  /// Starting point for one chain; draws from rng must be deterministic.
  virtual std::vector<double> initial_state(Rng& rng) const;
};

// Raw kept draws of one chain on the unconstrained scale plus the
// adaptation bookkeeping the tests inspect.
struct ChainRaw {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> z;  // row-major [n][dim]
  std::vector<double> scales_end_warmup;
  std::vector<double> scales_final;
  std::vector<double> accept_rate;  // per coordinate, post-warmup

  double at(std::size_t draw, std::size_t coord) const {
    return z[draw * dim + coord];
  }
};

/// One adaptive random-walk-Metropolis-within-Gibbs chain. Proposal scales
/// adapt toward target_accept during warmup only and are frozen afterward.
ChainRaw run_chain(const LogDensity& target, const SamplerConfig& cfg,
                   std::size_t chain_index, std::size_t n_keep);

struct ScalarDiagnostic {
  std::string name;
  double rhat = 0.0;
  double ess = 0.0;
};

struct Diagnostics {
  std::vector<ScalarDiagnostic> scalars;  // hyperparameters plus mu
  std::vector<double> accept_rate;        // per coordinate, chain-averaged
  bool converged = false;  // all rhat <= 1.01 and ess >= 400
  double max_rhat = 0.0;
  double min_ess = 0.0;
};

// Post-warmup draws mapped back to the constrained scale, with the derived
// per-draw mean of the random-effects distribution and the conditional
// deviance.
struct DrawsMatrix {
  dist::Family family = dist::Family::normal;
  std::size_t num_studies = 0;
  std::size_t num_hyper = 0;
  std::optional<double> fixed_omega;  // set when omega was a point mass
  std::vector<std::string> hyper_names;
  std::size_t draws_per_chain = 0;  // first keep%chains chains hold one more
  std::vector<std::vector<double>> hyper;     // [chain][draw * num_hyper + j]
  std::vector<std::vector<double>> theta;     // [chain][draw * K + i]
  std::vector<std::vector<double>> mu;        // [chain][draw]
  std::vector<std::vector<double>> deviance;  // [chain][draw]
  Diagnostics diag;

  std::size_t chain_count() const { return mu.size(); }
  std::size_t total_draws() const;
  /// mu draws concatenated in chain order.
  std::vector<double> all_mu() const;
  std::vector<double> all_deviance() const;
  dist::FamilyParams hyper_at(std::size_t chain, std::size_t draw) const;
};

/// Run the hierarchical model: chains are independent (and may execute in
/// parallel), the merge is keyed by chain index, and the result is
/// identical for any thread count. Convergence trouble sets
/// diag.converged = false; it is never silently dropped.
DrawsMatrix run(const model::ModelSpec& spec, const SamplerConfig& cfg);

/// Split-chain Gelman-Rubin R-hat. Throws std::invalid_argument for fewer
/// than 100 draws per chain or zero-variance (degenerate) input.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size via initial-positive-sequence autocorrelation
/// truncation on split chains. Same preconditions as split_rhat.
double ess(const std::vector<std::vector<double>>& chains);

}  // namespace flexmeta::sampler
