#include "flexmeta/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flexmeta/specfun.hpp"

namespace flexmeta::inference {

namespace sf = flexmeta::specfun;

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double frac_below_zero = 0.0;
};

Moments moments_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("inference: empty draws");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  std::size_t below = 0;
  for (double x : xs) {
    mean += x;
    if (x < 0.0) ++below;
  }
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  Moments m;
  m.mean = mean;
  m.sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  m.frac_below_zero = below / n;
  return m;
}

double silverman_bandwidth(std::span<const double> draws) {
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const Moments m = moments_of(draws);
  const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
  double spread = std::min(m.sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = std::max(m.sd, 1e-3 * (1.0 + std::fabs(m.mean)));
  if (!(spread > 0.0)) spread = 1e-3;
  return 0.9 * spread * std::pow(static_cast<double>(draws.size()), -0.2);
}

}  // namespace

double quantile_type7(std::span<const double> draws, double p) {
  if (draws.empty()) throw std::invalid_argument("inference: empty draws");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("inference: quantile level out of [0,1]");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

SummaryRow summarize_mu(const sampler::DrawsMatrix& draws) {
  const std::vector<double> mu = draws.all_mu();
  if (mu.empty()) throw std::invalid_argument("inference: empty draws");
  const Moments m = moments_of(mu);
  SummaryRow row;
  row.family = std::string(dist::family_name(draws.family));
  row.mean = m.mean;
  row.sd = m.sd;
  row.cri95 = {quantile_type7(mu, 0.025), quantile_type7(mu, 0.975)};
  row.prob_below_zero = m.frac_below_zero;
  row.dic = row.pd = row.dbar = row.dev_at_mean =
      std::numeric_limits<double>::quiet_NaN();
  return row;
}

SummaryRow summarize_mu(const sampler::DrawsMatrix& draws,
                        const model::ModelSpec& spec) {
  SummaryRow row = summarize_mu(draws);
  const DicResult d = dic(draws, spec);
  row.dic = d.dic;
  row.pd = d.pd;
  row.dbar = d.dbar;
  row.dev_at_mean = d.dev_at_mean;
  return row;
}

std::vector<double> predictive_draws(const sampler::DrawsMatrix& draws,
                                     Rng& rng) {
  if (draws.total_draws() == 0)
    throw std::invalid_argument("inference: empty draws");
  std::vector<double> out;
  out.reserve(draws.total_draws());
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    const std::size_t n = draws.mu[c].size();
    for (std::size_t d = 0; d < n; ++d)
      out.push_back(dist::sample(draws.hyper_at(c, d), rng));
  }
  return out;
}

PredictiveRow summarize_predictive(const std::string& family,
                                   std::span<const double> theta_new) {
  const Moments m = moments_of(theta_new);
  PredictiveRow row;
  row.family = family;
  row.mean = m.mean;
  row.sd = m.sd;
  row.pi95 = {quantile_type7(theta_new, 0.025),
              quantile_type7(theta_new, 0.975)};
  row.prob_below_zero = m.frac_below_zero;
  return row;
}

DicResult dic_from(double dbar, double dev_at_mean) {
  DicResult r;
  r.dbar = dbar;
  r.dev_at_mean = dev_at_mean;
  r.pd = dbar - dev_at_mean;
  r.dic = dbar + r.pd;
  return r;
}

DicResult dic(const sampler::DrawsMatrix& draws,
              const model::ModelSpec& spec) {
  const std::vector<double> dev = draws.all_deviance();
  if (dev.empty()) throw std::invalid_argument("inference: empty draws");
  double dbar = 0.0;
  for (double d : dev) dbar += d;
  dbar /= static_cast<double>(dev.size());

  const std::size_t k = draws.num_studies;
  std::vector<double> theta_bar(k, 0.0);
  std::size_t total = 0;
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    const std::size_t n = draws.mu[c].size();
    total += n;
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t i = 0; i < k; ++i)
        theta_bar[i] += draws.theta[c][d * k + i];
  }
  for (double& t : theta_bar) t /= static_cast<double>(total);
  return dic_from(dbar, model::deviance(spec, theta_bar));
}

DensityGrid density_grid(const dist::FamilyParams& p, double lo, double hi,
                         std::size_t points) {
  if (points < 2) throw std::invalid_argument("inference: need >= 2 grid points");
  if (!(hi > lo)) throw std::invalid_argument("inference: degenerate range");
  DensityGrid g;
  g.theta.resize(points);
  g.density.resize(points);
  const dist::PreparedLogPdf pdf(p);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    g.theta[i] = lo + step * static_cast<double>(i);
    g.density[i] = std::exp(pdf(g.theta[i]));
  }
  return g;
}

DensityGrid density_grid(std::span<const double> draws, double lo, double hi,
                         std::size_t points) {
  if (points < 2) throw std::invalid_argument("inference: need >= 2 grid points");
  if (!(hi > lo)) throw std::invalid_argument("inference: degenerate range");
  if (draws.empty()) throw std::invalid_argument("inference: empty draws");
  const double bw = silverman_bandwidth(draws);

  // pre-bin the draws; the kernel is far wider than one bin
  constexpr std::size_t kBins = 8192;
  const double blo = std::min(lo, *std::min_element(draws.begin(), draws.end())) - bw;
  const double bhi = std::max(hi, *std::max_element(draws.begin(), draws.end())) + bw;
  const double bstep = (bhi - blo) / kBins;
  std::vector<double> weight(kBins, 0.0);
  for (double x : draws) {
    std::size_t bin = static_cast<std::size_t>((x - blo) / bstep);
    bin = std::min(bin, kBins - 1);
    weight[bin] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(draws.size()) * bw);

  DensityGrid g;
  g.theta.resize(points);
  g.density.assign(points, 0.0);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double cutoff = 8.0 * bw;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + step * static_cast<double>(i);
    g.theta[i] = t;
    const std::size_t first = static_cast<std::size_t>(std::max(
        0.0, std::floor((t - cutoff - blo) / bstep)));
    const std::size_t last = static_cast<std::size_t>(std::min(
        static_cast<double>(kBins - 1),
        std::ceil((t + cutoff - blo) / bstep)));
    double acc = 0.0;
    for (std::size_t b = first; b <= last; ++b) {
      if (weight[b] == 0.0) continue;
      const double center = blo + (static_cast<double>(b) + 0.5) * bstep;
      const double u = (t - center) / bw;
      acc += weight[b] * std::exp(-0.5 * u * u);
    }
    g.density[i] = acc * norm / std::sqrt(2.0 * sf::kPi);
  }
  return g;
}

DensityGrid density_grid(std::span<const double> draws, std::size_t points) {
  if (draws.empty()) throw std::invalid_argument("inference: empty draws");
  const double bw = silverman_bandwidth(draws);
  const double lo = *std::min_element(draws.begin(), draws.end()) - 6.0 * bw;
  const double hi = *std::max_element(draws.begin(), draws.end()) + 6.0 * bw;
  return density_grid(draws, lo, hi, points);
}

}  // namespace flexmeta::inference
