#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "flexmeta/classic.hpp"
#include "flexmeta/rng.hpp"
#include "flexmeta/specfun.hpp"

namespace classic = flexmeta::classic;
namespace sf = flexmeta::specfun;
using classic::StudyRecord;

namespace {

std::vector<StudyRecord> make(const std::vector<double>& y,
                              const std::vector<double>& se) {
  std::vector<StudyRecord> out;
  for (std::size_t i = 0; i < y.size(); ++i)
    out.push_back({"S" + std::to_string(i + 1), y[i], se[i]});
  return out;
}

}  // namespace

TEST_CASE("equal-weight instance with no heterogeneity") {
  // y = (0,1,2), unit SEs: Q = sum (y-1)^2 = 2 = K-1, so tau2 truncates to 0
  const auto r = classic::dersimonian_laird(make({0, 1, 2}, {1, 1, 1}));
  CHECK(r.q == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.tau2 == 0.0);
  CHECK(r.mu_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.i2 == 0.0);
  CHECK(r.ci95.lower == doctest::Approx(1.0 - 1.96 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(r.ci95.upper == doctest::Approx(1.0 + 1.96 / std::sqrt(3.0)).epsilon(1e-12));
  REQUIRE(r.hts_pi.has_value());
  const double t1 = sf::student_t_quantile(0.975, 1.0);
  CHECK(r.hts_pi->lower == doctest::Approx(1.0 - t1 / std::sqrt(3.0)).epsilon(1e-10));
}

TEST_CASE("hand-computed heterogeneous instance") {
  // y = (0,0,6): Q = 24, S1 = 3, S2 = 3, tau2 = (24-2)/2 = 11, I2 = 22/24
  const auto r = classic::dersimonian_laird(make({0, 0, 6}, {1, 1, 1}));
  CHECK(r.q == doctest::Approx(24.0).epsilon(1e-12));
  CHECK(r.tau2 == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(r.mu_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.i2 == doctest::Approx(100.0 * 22.0 / 24.0).epsilon(1e-12));
  // random-effects weights 1/12 each: Var(mu) = 4
  REQUIRE(r.hts_pi.has_value());
  const double t1 = sf::student_t_quantile(0.975, 1.0);
  CHECK(r.hts_pi->lower == doctest::Approx(2.0 - t1 * std::sqrt(15.0)).epsilon(1e-10));
  CHECK(r.hts_pi->upper == doctest::Approx(2.0 + t1 * std::sqrt(15.0)).epsilon(1e-10));
  CHECK(r.q_pvalue == doctest::Approx(sf::chi_square_sf(24.0, 2.0)).epsilon(1e-12));
}

TEST_CASE("identical effects collapse completely") {
  const auto r = classic::dersimonian_laird(make({3.2, 3.2, 3.2}, {0.5, 1.0, 2.0}));
  CHECK(r.q == 0.0);
  CHECK(r.tau2 == 0.0);
  CHECK(r.i2 == 0.0);
  CHECK(r.mu_hat == doctest::Approx(3.2).epsilon(1e-12));
}

TEST_CASE("shift and scale equivariance") {
  flexmeta::Rng rng(314, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 3 + static_cast<std::size_t>(rng.uniform(0.0, 8.0));
    std::vector<double> y(k), se(k);
    for (std::size_t i = 0; i < k; ++i) {
      y[i] = rng.uniform(-5.0, 5.0);
      se[i] = rng.uniform(0.2, 2.0);
    }
    const auto base = classic::dersimonian_laird(make(y, se));

    const double c = rng.uniform(-10.0, 10.0);
    std::vector<double> y_shift(k);
    for (std::size_t i = 0; i < k; ++i) y_shift[i] = y[i] + c;
    const auto shifted = classic::dersimonian_laird(make(y_shift, se));
    CHECK(shifted.mu_hat == doctest::Approx(base.mu_hat + c).epsilon(1e-9));
    CHECK(shifted.ci95.lower == doctest::Approx(base.ci95.lower + c).epsilon(1e-9));
    CHECK(shifted.hts_pi->upper == doctest::Approx(base.hts_pi->upper + c).epsilon(1e-9));
    CHECK(shifted.q == doctest::Approx(base.q).epsilon(1e-9));
    CHECK(shifted.tau2 == doctest::Approx(base.tau2).epsilon(1e-9));
    CHECK(shifted.i2 == doctest::Approx(base.i2).epsilon(1e-9));

    const double s = rng.uniform(0.1, 5.0);
    std::vector<double> y_scale(k), se_scale(k);
    for (std::size_t i = 0; i < k; ++i) {
      y_scale[i] = s * y[i];
      se_scale[i] = s * se[i];
    }
    const auto scaled = classic::dersimonian_laird(make(y_scale, se_scale));
    CHECK(scaled.mu_hat == doctest::Approx(s * base.mu_hat).epsilon(1e-9));
    CHECK(scaled.ci95.upper == doctest::Approx(s * base.ci95.upper).epsilon(1e-9));
    CHECK(scaled.hts_pi->lower == doctest::Approx(s * base.hts_pi->lower).epsilon(1e-9));
    CHECK(scaled.tau2 == doctest::Approx(s * s * base.tau2).epsilon(1e-9));
    CHECK(scaled.q == doctest::Approx(base.q).epsilon(1e-9));
    CHECK(scaled.i2 == doctest::Approx(base.i2).epsilon(1e-9));
    CHECK(scaled.q_pvalue == doctest::Approx(base.q_pvalue).epsilon(1e-9));

    // structural invariants
    CHECK(base.tau2 >= 0.0);
    CHECK(base.i2 >= 0.0);
    CHECK(base.i2 <= 100.0);
    CHECK(base.ci95.lower <= base.mu_hat);
    CHECK(base.ci95.upper >= base.mu_hat);
    CHECK(base.hts_pi->width() >= base.ci95.width());
    if (base.tau2 > 0.0) CHECK(base.hts_pi->width() > base.ci95.width());
    if (base.q <= static_cast<double>(k - 1)) CHECK(base.tau2 == 0.0);
  }
}

TEST_CASE("error paths") {
  CHECK_THROWS_AS(classic::dersimonian_laird(make({1.0}, {1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(classic::dersimonian_laird(make({1.0, 2.0}, {1.0, 0.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(classic::dersimonian_laird(make({1.0, 2.0}, {1.0, -0.5})),
                  std::invalid_argument);
}

TEST_CASE("two studies have no prediction interval") {
  const auto r = classic::dersimonian_laird(make({0.0, 1.0}, {1.0, 1.0}));
  CHECK_FALSE(r.hts_pi.has_value());
  CHECK(r.k == 2);
}
