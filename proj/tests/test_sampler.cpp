#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "flexmeta/distributions.hpp"
#include "flexmeta/sampler.hpp"
#include "flexmeta/specfun.hpp"
#include "support/quad.hpp"

namespace sampler = flexmeta::sampler;
namespace model = flexmeta::model;
namespace dist = flexmeta::dist;
namespace sf = flexmeta::specfun;

namespace {

class StdNormalTarget : public sampler::LogDensity {
 public:
  std::size_t dim() const override { return 1; }
  double log_density(std::span<const double> z) const override {
    return -0.5 * z[0] * z[0];
  }
  double coord_delta(std::span<const double> z, std::size_t,
                     double znew) const override {
    return 0.5 * (z[0] * z[0] - znew * znew);
  }
};

// one-coordinate target with the skew-normal shape, used for the
// detailed-balance histogram check
class SkewTarget : public sampler::LogDensity {
 public:
  SkewTarget() : p_(dist::FamilyParams::make_skew_normal(0, 1, 2)) {}
  std::size_t dim() const override { return 1; }
  double log_density(std::span<const double> z) const override {
    return dist::log_pdf(p_, z[0]);
  }
  double coord_delta(std::span<const double> z, std::size_t,
                     double znew) const override {
    return dist::log_pdf(p_, znew) - dist::log_pdf(p_, z[0]);
  }
  const dist::FamilyParams& params() const { return p_; }

 private:
  dist::FamilyParams p_;
};

sampler::SamplerConfig quick_cfg(std::size_t warmup, std::size_t keep,
                                 std::uint64_t seed, std::size_t chains = 1) {
  sampler::SamplerConfig cfg;
  cfg.chains = chains;
  cfg.warmup = warmup;
  cfg.keep = keep;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> column(const sampler::ChainRaw& raw, std::size_t j) {
  std::vector<double> out(raw.n);
  for (std::size_t d = 0; d < raw.n; ++d) out[d] = raw.at(d, j);
  return out;
}

}  // namespace

TEST_CASE("standard normal target: moments recovered") {
  StdNormalTarget target;
  const auto cfg = quick_cfg(2000, 50000, 71);
  const auto raw = sampler::run_chain(target, cfg, 0, 50000);
  const auto xs = column(raw, 0);

  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / (n - 1.0);

  const double e = sampler::ess({xs});
  CHECK(std::fabs(mean) < 4.0 * std::sqrt(var / e));
  CHECK(var == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("identical seed and config give bit-identical draws") {
  StdNormalTarget target;
  const auto cfg = quick_cfg(500, 2000, 9);
  const auto a = sampler::run_chain(target, cfg, 0, 2000);
  const auto b = sampler::run_chain(target, cfg, 0, 2000);
  REQUIRE(a.z.size() == b.z.size());
  for (std::size_t i = 0; i < a.z.size(); ++i) CHECK(a.z[i] == b.z[i]);
}

TEST_CASE("adaptation freezes at the end of warmup") {
  StdNormalTarget target;
  const auto cfg = quick_cfg(1500, 20000, 33);
  const auto raw = sampler::run_chain(target, cfg, 0, 20000);
  REQUIRE(raw.scales_end_warmup.size() == raw.scales_final.size());
  for (std::size_t j = 0; j < raw.scales_final.size(); ++j)
    CHECK(raw.scales_end_warmup[j] == raw.scales_final[j]);
}

TEST_CASE("post-warmup acceptance lands in a healthy band") {
  StdNormalTarget target;
  const auto cfg = quick_cfg(3000, 30000, 13);
  const auto raw = sampler::run_chain(target, cfg, 0, 30000);
  for (double a : raw.accept_rate) {
    CHECK(a > 0.2);
    CHECK(a < 0.7);
  }
}

TEST_CASE("two chains on a unimodal target mix cleanly") {
  StdNormalTarget target;
  auto cfg = quick_cfg(2000, 50000, 27, 2);
  std::vector<std::vector<double>> chains;
  for (std::size_t c = 0; c < 2; ++c)
    chains.push_back(column(sampler::run_chain(target, cfg, c, 25000), 0));
  const double rhat = sampler::split_rhat(chains);
  CHECK(rhat >= 1.0 - 1e-12);
  CHECK(rhat <= 1.01);
}

TEST_CASE("detailed balance: histogram matches the target density") {
  SkewTarget target;
  sampler::SamplerConfig cfg;
  cfg.warmup = 3000;
  cfg.keep = 1000000;
  cfg.seed = 4242;
  cfg.thin = 25;  // decorrelate so the chi-square statistic is honest
  const auto raw = sampler::run_chain(target, cfg, 0, cfg.keep);
  const auto xs = column(raw, 0);

  // bin masses from quadrature of the target over [-4, 4.5] plus open tails
  const int kInner = 34;
  const double lo = -4.0, hi = 4.5;
  std::vector<double> edges;
  edges.push_back(-std::numeric_limits<double>::infinity());
  for (int i = 0; i <= kInner; ++i)
    edges.push_back(lo + (hi - lo) * i / kInner);
  edges.push_back(std::numeric_limits<double>::infinity());

  const oracle::NumericCdf cdf(
      [&](double t) { return dist::log_pdf(target.params(), t); }, 0.0, 1.0);
  std::vector<double> expected(edges.size() - 1);
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    const double fa = std::isinf(edges[b]) ? 0.0 : cdf(edges[b]);
    const double fb = std::isinf(edges[b + 1]) ? 1.0 : cdf(edges[b + 1]);
    expected[b] = (fb - fa) * static_cast<double>(xs.size());
  }
  std::vector<double> observed(expected.size(), 0.0);
  for (double x : xs) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    observed[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  double chi2 = 0.0;
  int df = -1;
  for (std::size_t b = 0; b < expected.size(); ++b) {
    if (expected[b] < 5.0) continue;  // merge-tiny convention: skip sparse tails
    chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) /
            expected[b];
    ++df;
  }
  const double p = sf::chi_square_sf(chi2, static_cast<double>(df));
  CHECK(p > 0.001);
}

TEST_CASE("split_rhat rejects degenerate input") {
  const std::vector<double> flat(500, 1.0);
  CHECK_THROWS_AS(sampler::split_rhat({flat, flat}), std::invalid_argument);
  const std::vector<double> tiny(50, 0.0);
  CHECK_THROWS_AS(sampler::split_rhat({tiny}), std::invalid_argument);
}

TEST_CASE("split_rhat near one for iid chains") {
  flexmeta::Rng rng(64, 0);
  std::vector<std::vector<double>> chains(2, std::vector<double>(10000));
  for (auto& c : chains)
    for (double& x : c) x = rng.normal();
  CHECK(sampler::split_rhat(chains) < 1.005);
}

TEST_CASE("ess of an iid sequence is close to n") {
  flexmeta::Rng rng(65, 0);
  std::vector<double> xs(10000);
  for (double& x : xs) x = rng.normal();
  const double e = sampler::ess({xs});
  CHECK(e > 0.8 * 10000);
  CHECK(e < 1.2 * 10000);
}

TEST_CASE("conjugate recovery with a fixed omega") {
  // Normal family, omega held at a point mass, near-flat xi prior: the
  // posterior of xi is Gaussian with known mean and variance.
  const double omega = 2.0;
  model::ModelSpec spec;
  spec.family = dist::Family::normal;
  spec.priors.omega_fixed = omega;
  spec.priors.xi_sd = 1e6;
  flexmeta::Rng gen(2024, 0);
  const double truth = -1.2;
  for (int i = 0; i < 10; ++i) {
    const double se = gen.uniform(0.4, 1.2);
    const double theta = truth + omega * gen.normal();
    spec.data.push_back({"S" + std::to_string(i + 1), theta + se * gen.normal(), se});
  }

  double precision = 1.0 / (1e6 * 1e6);
  double mean_num = 0.0;
  for (const auto& d : spec.data) {
    const double w = 1.0 / (d.se * d.se + omega * omega);
    precision += w;
    mean_num += w * d.y;
  }
  const double post_mean = mean_num / precision;
  const double post_sd = std::sqrt(1.0 / precision);

  sampler::SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup = 1000;
  cfg.keep = 20000;
  cfg.seed = 99;
  const auto draws = sampler::run(spec, cfg);

  REQUIRE(draws.hyper_names.size() == 1);
  REQUIRE(draws.hyper_names[0] == "xi");
  std::vector<double> xi;
  std::vector<std::vector<double>> xi_chains;
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    std::vector<double> col(draws.mu[c].size());
    for (std::size_t d = 0; d < col.size(); ++d) col[d] = draws.hyper[c][d];
    xi.insert(xi.end(), col.begin(), col.end());
    xi_chains.push_back(std::move(col));
  }
  const double n = static_cast<double>(xi.size());
  const double mean = std::accumulate(xi.begin(), xi.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xi) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double e = sampler::ess(xi_chains);

  CHECK(std::fabs(mean - post_mean) < 3.0 * post_sd / std::sqrt(e));
  CHECK(std::fabs(sd - post_sd) < 3.0 * post_sd / std::sqrt(2.0 * e));
  CHECK(sampler::split_rhat(xi_chains) <= 1.01);
  CHECK(e >= 400.0);
  CHECK(draws.diag.converged);

  // the mu column of a normal family is xi itself
  const auto mu = draws.all_mu();
  for (std::size_t i = 0; i < 50; ++i) CHECK(mu[i] == xi[i]);
}

TEST_CASE("run is deterministic and thread-count independent") {
  model::ModelSpec spec;
  spec.family = dist::Family::skew_normal;
  flexmeta::Rng gen(5, 0);
  for (int i = 0; i < 6; ++i)
    spec.data.push_back({"S" + std::to_string(i), gen.uniform(-3.0, 1.0),
                         gen.uniform(0.3, 0.8)});
  sampler::SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup = 300;
  cfg.keep = 2000;
  cfg.seed = 1234;
  cfg.max_threads = 1;
  const auto serial = sampler::run(spec, cfg);
  cfg.max_threads = 4;
  const auto parallel = sampler::run(spec, cfg);
  REQUIRE(serial.chain_count() == parallel.chain_count());
  for (std::size_t c = 0; c < serial.chain_count(); ++c) {
    REQUIRE(serial.mu[c].size() == parallel.mu[c].size());
    for (std::size_t d = 0; d < serial.mu[c].size(); ++d) {
      CHECK(serial.mu[c][d] == parallel.mu[c][d]);
      CHECK(serial.deviance[c][d] == parallel.deviance[c][d]);
    }
  }
}

TEST_CASE("mu column equals the closed-form mean of the stored draws") {
  model::ModelSpec spec;
  spec.family = dist::Family::sinh_arcsinh;
  flexmeta::Rng gen(6, 0);
  for (int i = 0; i < 5; ++i)
    spec.data.push_back({"S" + std::to_string(i), gen.uniform(-2.0, 2.0),
                         gen.uniform(0.3, 0.8)});
  sampler::SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 300;
  cfg.keep = 1000;
  cfg.seed = 7;
  const auto draws = sampler::run(spec, cfg);
  for (std::size_t c = 0; c < draws.chain_count(); ++c)
    for (std::size_t d = 0; d < draws.mu[c].size(); d += 97)
      CHECK(draws.mu[c][d] == dist::mean(draws.hyper_at(c, d)));
}

TEST_CASE("config validation") {
  model::ModelSpec spec;
  spec.family = dist::Family::normal;
  spec.data = {{"a", 0.0, 1.0}, {"b", 1.0, 1.0}};
  sampler::SamplerConfig cfg;
  cfg.chains = 4;
  cfg.keep = 2;  // fewer than chains
  cfg.seed = 1;
  CHECK_THROWS_AS(sampler::run(spec, cfg), std::invalid_argument);
  cfg.keep = 400;
  cfg.warmup = 10;  // below the minimum
  CHECK_THROWS_AS(sampler::run(spec, cfg), std::invalid_argument);
}
