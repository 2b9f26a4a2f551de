#include "flexmeta/classic.hpp"

#include <cmath>
#include <stdexcept>

#include "flexmeta/specfun.hpp"

namespace flexmeta::classic {

namespace sf = flexmeta::specfun;

ClassicResult dersimonian_laird(std::span<const StudyRecord> data) {
  const std::size_t k = data.size();
  if (k < 2)
    throw std::invalid_argument("dersimonian_laird: needs at least 2 studies");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(data[i].se > 0.0) || !std::isfinite(data[i].se))
      throw std::invalid_argument("dersimonian_laird: study " + data[i].id +
                                  " has nonpositive standard error");
    if (!std::isfinite(data[i].y))
      throw std::invalid_argument("dersimonian_laird: study " + data[i].id +
                                  " has non-finite effect estimate");
  }

  double s1 = 0.0, s2 = 0.0, wy = 0.0;
  for (const auto& d : data) {
    const double w = 1.0 / (d.se * d.se);
    s1 += w;
    s2 += w * w;
    wy += w * d.y;
  }
  const double y_fixed = wy / s1;

  double q = 0.0;
  for (const auto& d : data) {
    const double w = 1.0 / (d.se * d.se);
    const double r = d.y - y_fixed;
    q += w * r * r;
  }

  const double df = static_cast<double>(k - 1);
  const double tau2 = std::max(0.0, (q - df) / (s1 - s2 / s1));

  double wsum = 0.0, wysum = 0.0;
  for (const auto& d : data) {
    const double w = 1.0 / (d.se * d.se + tau2);
    wsum += w;
    wysum += w * d.y;
  }

  ClassicResult res;
  res.k = k;
  res.mu_hat = wysum / wsum;
  const double se_mu = std::sqrt(1.0 / wsum);
  res.ci95 = {res.mu_hat - 1.96 * se_mu, res.mu_hat + 1.96 * se_mu};
  res.tau2 = tau2;
  res.q = q;
  res.i2 = q > 0.0 ? std::max(0.0, (q - df) / q) * 100.0 : 0.0;
  res.q_pvalue = sf::chi_square_sf(q, df);
  if (k >= 3) {
    const double t = sf::student_t_quantile(0.975, static_cast<double>(k - 2));
    const double half = t * std::sqrt(tau2 + 1.0 / wsum);
    res.hts_pi = Interval{res.mu_hat - half, res.mu_hat + half};
  }
  return res;
}

}  // namespace flexmeta::classic
