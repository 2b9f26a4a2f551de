#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "flexmeta/model.hpp"
#include "flexmeta/rng.hpp"
#include "flexmeta/specfun.hpp"

namespace model = flexmeta::model;
namespace dist = flexmeta::dist;
namespace sf = flexmeta::specfun;
using flexmeta::classic::StudyRecord;
using model::LatentState;
using model::ModelSpec;

namespace {

ModelSpec single_study_normal() {
  ModelSpec spec;
  spec.data = {{"S1", 0.0, 1.0}};
  spec.family = dist::Family::normal;
  return spec;
}

ModelSpec spec_for(dist::Family f, std::size_t k = 5) {
  ModelSpec spec;
  flexmeta::Rng rng(17, static_cast<std::uint64_t>(f));
  for (std::size_t i = 0; i < k; ++i)
    spec.data.push_back({"S" + std::to_string(i + 1), rng.uniform(-4.0, 4.0),
                         rng.uniform(0.3, 1.5)});
  spec.family = f;
  return spec;
}

// States with non-negligible posterior mass: latent effects inside the bulk
// of the random-effects distribution, shapes away from the regime where a
// single log-density term exceeds ~1e6 and double arithmetic stops resolving
// coordinate-local changes (the sampler rejects such states through the
// local delta long before the totals matter).
LatentState random_state(const ModelSpec& spec, flexmeta::Rng& rng) {
  LatentState st;
  st.hyper.family = spec.family;
  st.hyper.xi = rng.uniform(-5.0, 5.0);
  st.hyper.omega = rng.uniform(0.5, 19.0);
  st.hyper.nu = 2.6 + rng.uniform(0.0, 9.0);
  st.hyper.alpha = rng.uniform(-6.0, 6.0);
  st.hyper.a = rng.uniform(1.6, 150.0);
  st.hyper.b = rng.uniform(1.6, 150.0);
  st.hyper.epsilon = rng.uniform(-2.0, 2.0);
  st.hyper.delta = rng.uniform(0.3, 2.5);
  st.theta.resize(spec.num_studies());
  for (double& t : st.theta)
    t = st.hyper.xi + st.hyper.omega * rng.uniform(-2.5, 2.5);
  return st;
}

}  // namespace

TEST_CASE("log_posterior matches an explicit hand summation") {
  ModelSpec spec = single_study_normal();
  LatentState st;
  st.hyper = dist::FamilyParams::make_normal(0.0, 1.0);
  st.theta = {0.0};
  const auto z = model::to_unconstrained(spec, st);

  const double loglik = -0.5 * sf::kLn2Pi;               // phi(0), se = 1
  const double logre = -0.5 * sf::kLn2Pi;                // pdf_F(0 | xi=0, omega=1)
  const double prior_xi = -std::log(100.0) - 0.5 * sf::kLn2Pi;
  const double prior_omega = -std::log(20.0);
  const double jac_omega = std::log(1.0 * 19.0 / 20.0);  // omega(U-omega)/U
  const double expected = loglik + logre + prior_xi + prior_omega + jac_omega;
  CHECK(model::log_posterior(spec, z) == doctest::Approx(expected).epsilon(1e-12));

  // decomposition helpers agree with the total
  const double parts = loglik + logre + model::log_prior(spec, st.hyper) +
                       model::log_jacobian(spec, z);
  CHECK(model::log_posterior(spec, z) == doctest::Approx(parts).epsilon(1e-12));
}

TEST_CASE("moving one latent effect by one changes two quadratic terms") {
  ModelSpec spec = single_study_normal();
  LatentState st;
  st.hyper = dist::FamilyParams::make_normal(0.0, 1.0);
  st.theta = {0.0};
  auto z0 = model::to_unconstrained(spec, st);
  auto z1 = z0;
  z1.back() = 1.0;
  CHECK(model::log_posterior(spec, z1) - model::log_posterior(spec, z0) ==
        doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("transform round trip is the identity") {
  flexmeta::Rng rng(5, 0);
  for (dist::Family f : dist::all_families()) {
    ModelSpec spec = spec_for(f);
    for (int rep = 0; rep < 100; ++rep) {
      const LatentState st = random_state(spec, rng);
      const auto z = model::to_unconstrained(spec, st);
      const LatentState back = model::from_unconstrained(spec, z);
      CHECK(back.hyper.xi == doctest::Approx(st.hyper.xi).epsilon(1e-12));
      CHECK(back.hyper.omega == doctest::Approx(st.hyper.omega).epsilon(1e-12));
      if (f == dist::Family::student_t || f == dist::Family::skew_t ||
          f == dist::Family::as2)
        CHECK(back.hyper.nu == doctest::Approx(st.hyper.nu).epsilon(1e-12));
      if (f == dist::Family::skew_normal || f == dist::Family::skew_t ||
          f == dist::Family::as2)
        CHECK(back.hyper.alpha == doctest::Approx(st.hyper.alpha).epsilon(1e-12));
      if (f == dist::Family::jones_faddy) {
        CHECK(back.hyper.a == doctest::Approx(st.hyper.a).epsilon(1e-12));
        CHECK(back.hyper.b == doctest::Approx(st.hyper.b).epsilon(1e-12));
      }
      if (f == dist::Family::sinh_arcsinh) {
        CHECK(back.hyper.epsilon == doctest::Approx(st.hyper.epsilon).epsilon(1e-12));
        CHECK(back.hyper.delta == doctest::Approx(st.hyper.delta).epsilon(1e-12));
      }
      for (std::size_t i = 0; i < st.theta.size(); ++i)
        CHECK(back.theta[i] == st.theta[i]);
    }
  }
}

TEST_CASE("nu stays above its bound and omega maps through the midpoint") {
  ModelSpec spec = spec_for(dist::Family::student_t);
  const std::size_t nh = model::hyper_dim(spec);
  REQUIRE(nh == 3);  // xi, omega, nu
  std::vector<double> z(model::dim(spec), 0.0);
  for (double znu = -25.0; znu <= 25.0; znu += 0.5) {
    z[2] = znu;
    const auto st = model::from_unconstrained(spec, z);
    CHECK(st.hyper.nu > 2.5);
  }
  // omega = 10 is the scaled-logit midpoint of U(0, 20)
  LatentState st;
  st.hyper = dist::FamilyParams::make_student_t(0.0, 10.0, 4.0);
  st.theta.assign(spec.num_studies(), 0.0);
  const auto z2 = model::to_unconstrained(spec, st);
  CHECK(z2[1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("analytic Jacobian matches numerical derivatives of the map") {
  flexmeta::Rng rng(23, 0);
  for (dist::Family f : dist::all_families()) {
    ModelSpec spec = spec_for(f);
    const auto names = model::hyper_names(spec);
    const LatentState st = random_state(spec, rng);
    const auto z = model::to_unconstrained(spec, st);
    const double h = 1e-6;

    auto constrained = [&](std::size_t j, double zj) {
      auto zz = z;
      zz[j] = zj;
      const LatentState s = model::from_unconstrained(spec, zz);
      if (names[j] == "xi") return s.hyper.xi;
      if (names[j] == "omega") return s.hyper.omega;
      if (names[j] == "nu") return s.hyper.nu;
      if (names[j] == "alpha") return s.hyper.alpha;
      if (names[j] == "a") return s.hyper.a;
      if (names[j] == "b") return s.hyper.b;
      if (names[j] == "epsilon") return s.hyper.epsilon;
      return s.hyper.delta;
    };

    // the total: sum over coordinates of ln |d forward_j / d z_j|
    double numeric_total = 0.0;
    for (std::size_t j = 0; j < names.size(); ++j) {
      const double deriv =
          (constrained(j, z[j] + h) - constrained(j, z[j] - h)) / (2.0 * h);
      numeric_total += std::log(std::fabs(deriv));
    }
    CHECK(model::log_jacobian(spec, z) ==
          doctest::Approx(numeric_total).epsilon(1e-6));

    // per coordinate: shifting z_j moves the analytic total by exactly the
    // change in ln |d forward_j / d z_j|
    for (std::size_t j = 0; j < names.size(); ++j) {
      const double deriv0 =
          (constrained(j, z[j] + h) - constrained(j, z[j] - h)) / (2.0 * h);
      const double zj1 = z[j] + 0.31;
      const double deriv1 =
          (constrained(j, zj1 + h) - constrained(j, zj1 - h)) / (2.0 * h);
      auto zz = z;
      zz[j] = zj1;
      const double analytic_delta =
          model::log_jacobian(spec, zz) - model::log_jacobian(spec, z);
      const double numeric_delta =
          std::log(std::fabs(deriv1)) - std::log(std::fabs(deriv0));
      CHECK(analytic_delta == doctest::Approx(numeric_delta).epsilon(1e-5));
    }
  }
}

TEST_CASE("log_posterior is invariant to study permutations") {
  flexmeta::Rng rng(31, 0);
  ModelSpec spec = spec_for(dist::Family::skew_t, 6);
  const LatentState st = random_state(spec, rng);
  const auto z = model::to_unconstrained(spec, st);
  const double lp = model::log_posterior(spec, z);

  ModelSpec permuted = spec;
  std::vector<std::size_t> order = {3, 0, 5, 1, 4, 2};
  LatentState st2 = st;
  for (std::size_t i = 0; i < order.size(); ++i) {
    permuted.data[i] = spec.data[order[i]];
    st2.theta[i] = st.theta[order[i]];
  }
  const auto z2 = model::to_unconstrained(permuted, st2);
  CHECK(model::log_posterior(permuted, z2) == doctest::Approx(lp).epsilon(1e-10));
}

TEST_CASE("conditional log posterior in xi is quadratic with the right curvature") {
  ModelSpec spec = spec_for(dist::Family::normal, 8);
  spec.priors.xi_sd = 1e6;  // near-flat
  LatentState st;
  st.hyper = dist::FamilyParams::make_normal(0.4, 2.0);
  st.theta.assign(8, 0.0);
  flexmeta::Rng rng(3, 1);
  for (double& t : st.theta) t = rng.uniform(-3.0, 3.0);
  auto z = model::to_unconstrained(spec, st);

  auto lp_at_xi = [&](double xi) {
    auto zz = z;
    zz[0] = xi;
    return model::log_posterior(spec, zz);
  };
  const double h = 1e-3;
  const double second =
      (lp_at_xi(0.4 + h) - 2.0 * lp_at_xi(0.4) + lp_at_xi(0.4 - h)) / (h * h);
  const double expected = -(8.0 / (2.0 * 2.0) + 1.0 / (1e6 * 1e6));
  CHECK(second == doctest::Approx(expected).epsilon(1e-5));
  // third difference vanishes for a quadratic
  const double third = (lp_at_xi(0.4 + 2 * h) - 2.0 * lp_at_xi(0.4 + h) +
                        2.0 * lp_at_xi(0.4 - h) - lp_at_xi(0.4 - 2 * h)) /
                       (2.0 * h * h * h);
  CHECK(std::fabs(third) < 1e-4);
}

TEST_CASE("coordinate delta equals the full difference") {
  flexmeta::Rng rng(77, 0);
  for (dist::Family f : dist::all_families()) {
    ModelSpec spec = spec_for(f);
    const LatentState st = random_state(spec, rng);
    auto z = model::to_unconstrained(spec, st);
    const double lp = model::log_posterior(spec, z);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double znew = z[j] + rng.uniform(-0.7, 0.7);
      const double delta = model::log_posterior_coord_delta(spec, z, j, znew);
      auto zz = z;
      zz[j] = znew;
      CHECK(delta == doctest::Approx(model::log_posterior(spec, zz) - lp).epsilon(1e-9));
    }
  }
}

TEST_CASE("deviance formulas") {
  ModelSpec spec = single_study_normal();
  CHECK(model::deviance(spec, std::vector<double>{0.0}) ==
        doctest::Approx(sf::kLn2Pi).epsilon(1e-12));

  // residual algebra: D(theta') - D(theta) = sum ((y-theta')^2 - (y-theta)^2)
  ModelSpec spec2 = spec_for(dist::Family::normal, 6);
  flexmeta::Rng rng(9, 0);
  std::vector<double> t1(6), t2(6);
  for (std::size_t i = 0; i < 6; ++i) {
    t1[i] = rng.uniform(-2.0, 2.0);
    t2[i] = rng.uniform(-2.0, 2.0);
  }
  double expect = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double se2 = spec2.data[i].se * spec2.data[i].se;
    const double r2 = (spec2.data[i].y - t2[i]) * (spec2.data[i].y - t2[i]);
    const double r1 = (spec2.data[i].y - t1[i]) * (spec2.data[i].y - t1[i]);
    expect += (r2 - r1) / se2;
  }
  CHECK(model::deviance(spec2, t2) - model::deviance(spec2, t1) ==
        doctest::Approx(expect).epsilon(1e-10));

  // independent long-double re-summation
  long double acc = 0.0L;
  for (std::size_t i = 0; i < 6; ++i) {
    const long double r =
        (static_cast<long double>(spec2.data[i].y) - t1[i]) / spec2.data[i].se;
    acc += r * r + 2.0L * std::log(static_cast<long double>(spec2.data[i].se)) +
           static_cast<long double>(sf::kLn2Pi);
  }
  CHECK(model::deviance(spec2, t1) ==
        doctest::Approx(static_cast<double>(acc)).epsilon(1e-9));
}

TEST_CASE("prior override keys") {
  model::PriorConfig pr;
  pr.set("xi_sd", 7.0);
  CHECK(pr.xi_sd == 7.0);
  pr.set("omega_fixed", 2.5);
  REQUIRE(pr.omega_fixed.has_value());
  CHECK(*pr.omega_fixed == 2.5);
  CHECK_THROWS_AS(pr.set("bogus", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(pr.set("omega_upper", -3.0), std::invalid_argument);
}

TEST_CASE("omega point mass removes the coordinate") {
  ModelSpec spec = spec_for(dist::Family::normal);
  spec.priors.omega_fixed = 2.0;
  CHECK(model::hyper_dim(spec) == 1);
  const auto names = model::hyper_names(spec);
  REQUIRE(names.size() == 1);
  CHECK(names[0] == "xi");
  std::vector<double> z(model::dim(spec), 0.0);
  const auto st = model::from_unconstrained(spec, z);
  CHECK(st.hyper.omega == 2.0);
}
