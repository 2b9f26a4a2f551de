#include "flexmeta/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "flexmeta/specfun.hpp"

namespace flexmeta::model {

namespace sf = flexmeta::specfun;
using dist::Family;
using dist::FamilyParams;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Transform kinds for one constrained coordinate.
enum class Map { identity, shifted_log, scaled_logit };

struct Coord {
  const char* name;
  Map map;
  double lo = 0.0, hi = 0.0;  // bounds for shifted_log / scaled_logit
};

// Free hyperparameter coordinates for a spec, in sampling order.
std::vector<Coord> coords(const ModelSpec& spec) {
  const PriorConfig& pr = spec.priors;
  std::vector<Coord> cs;
  cs.push_back({"xi", Map::identity});
  if (!pr.omega_fixed)
    cs.push_back({"omega", Map::scaled_logit, 0.0, pr.omega_upper});
  switch (spec.family) {
    case Family::normal:
      break;
    case Family::student_t:
      cs.push_back({"nu", Map::shifted_log, pr.nu_lower, 0.0});
      break;
    case Family::skew_normal:
      cs.push_back({"alpha", Map::identity});
      break;
    case Family::skew_t:
    case Family::as2:
      cs.push_back({"nu", Map::shifted_log, pr.nu_lower, 0.0});
      cs.push_back({"alpha", Map::identity});
      break;
    case Family::jones_faddy:
      cs.push_back({"a", Map::scaled_logit, pr.jf_lower, pr.jf_upper});
      cs.push_back({"b", Map::scaled_logit, pr.jf_lower, pr.jf_upper});
      break;
    case Family::sinh_arcsinh:
      cs.push_back({"epsilon", Map::identity});
      cs.push_back({"delta", Map::scaled_logit, 0.0, pr.delta_upper});
      break;
  }
  return cs;
}

// Saturating logistic keeps extreme proposals representable; the Jacobian
// term and the likelihood reject them, so clamping never changes which
// states the chain can actually occupy.
double logistic(double z) {
  const double u = 1.0 / (1.0 + std::exp(-z));
  return std::min(std::max(u, 1e-300), 1.0 - 1e-16);
}

double forward(const Coord& c, double z) {
  switch (c.map) {
    case Map::identity:
      return z;
    case Map::shifted_log:
      return c.lo + std::min(std::exp(z), 1e300);
    case Map::scaled_logit:
      return c.lo + (c.hi - c.lo) * logistic(z);
  }
  return z;
}

double inverse(const Coord& c, double v) {
  switch (c.map) {
    case Map::identity:
      if (!std::isfinite(v)) throw std::domain_error("model: non-finite state");
      return v;
    case Map::shifted_log:
      if (!(v > c.lo))
        throw std::domain_error(std::string("model: ") + c.name +
                                " out of support");
      return std::log(v - c.lo);
    case Map::scaled_logit: {
      if (!(v > c.lo && v < c.hi))
        throw std::domain_error(std::string("model: ") + c.name +
                                " out of support");
      return std::log(v - c.lo) - std::log(c.hi - v);
    }
  }
  return v;
}

// Analytic in z (not the clamped value), so the implied density over z
// stays proper in both tails.
double log_jac_coord(const Coord& c, double z) {
  switch (c.map) {
    case Map::identity:
      return 0.0;
    case Map::shifted_log:
      return z;
    case Map::scaled_logit: {
      // ln[(hi-lo) sigma(z) (1 - sigma(z))]
      const double az = std::fabs(z);
      return std::log(c.hi - c.lo) - az - 2.0 * std::log1p(std::exp(-az));
    }
  }
  return 0.0;
}

double get_param(const FamilyParams& h, const char* name) {
  switch (name[0]) {
    case 'x': return h.xi;
    case 'o': return h.omega;
    case 'n': return h.nu;
    case 'b': return h.b;
    case 'e': return h.epsilon;
    case 'd': return h.delta;
    case 'a': return name[1] == 'l' ? h.alpha : h.a;
  }
  throw std::logic_error("model: unknown coordinate name");
}

void set_param(FamilyParams& h, const char* name, double v) {
  switch (name[0]) {
    case 'x': h.xi = v; return;
    case 'o': h.omega = v; return;
    case 'n': h.nu = v; return;
    case 'b': h.b = v; return;
    case 'e': h.epsilon = v; return;
    case 'd': h.delta = v; return;
    case 'a':
      if (name[1] == 'l') h.alpha = v; else h.a = v;
      return;
  }
  throw std::logic_error("model: unknown coordinate name");
}

FamilyParams hyper_from_z(const ModelSpec& spec, std::span<const double> z) {
  FamilyParams h;
  h.family = spec.family;
  if (spec.priors.omega_fixed) h.omega = *spec.priors.omega_fixed;
  const auto cs = coords(spec);
  for (std::size_t j = 0; j < cs.size(); ++j)
    set_param(h, cs[j].name, forward(cs[j], z[j]));
  return h;
}

double log_normal_density(double x, double m, double sd) {
  const double r = (x - m) / sd;
  return -0.5 * r * r - std::log(sd) - 0.5 * sf::kLn2Pi;
}

// Prior log density for one named hyperparameter.
double log_prior_coord(const PriorConfig& pr, const char* name, double v) {
  switch (name[0]) {
    case 'x': return log_normal_density(v, pr.xi_mean, pr.xi_sd);
    case 'o': return -std::log(pr.omega_upper);
    case 'n': return std::log(pr.nu_rate) - pr.nu_rate * (v - pr.nu_lower);
    case 'b': return -std::log(pr.jf_upper - pr.jf_lower);
    case 'e': return log_normal_density(v, 0.0, pr.epsilon_sd);
    case 'd': return -std::log(pr.delta_upper);
    case 'a':
      if (name[1] == 'l') return log_normal_density(v, 0.0, pr.alpha_sd);
      return -std::log(pr.jf_upper - pr.jf_lower);
  }
  throw std::logic_error("model: unknown coordinate name");
}

double study_log_lik(const classic::StudyRecord& d, double theta) {
  const double r = (d.y - theta) / d.se;
  return -0.5 * r * r - std::log(d.se) - 0.5 * sf::kLn2Pi;
}

void check_spec(const ModelSpec& spec) {
  if (spec.data.empty())
    throw std::invalid_argument("model: empty dataset");
  if (spec.priors.omega_fixed && !(*spec.priors.omega_fixed > 0.0))
    throw std::invalid_argument("model: omega_fixed must be positive");
}

}  // namespace

void PriorConfig::set(const std::string& key, double value) {
  auto positive = [&](double v) {
    if (!(v > 0.0))
      throw std::invalid_argument("prior override " + key +
                                  " must be positive");
    return v;
  };
  if (key == "xi_mean") xi_mean = value;
  else if (key == "xi_sd") xi_sd = positive(value);
  else if (key == "omega_upper") omega_upper = positive(value);
  else if (key == "omega_fixed") omega_fixed = positive(value);
  else if (key == "nu_rate") nu_rate = positive(value);
  else if (key == "nu_lower") nu_lower = positive(value);
  else if (key == "alpha_sd") alpha_sd = positive(value);
  else if (key == "jf_lower") jf_lower = positive(value);
  else if (key == "jf_upper") jf_upper = positive(value);
  else if (key == "epsilon_sd") epsilon_sd = positive(value);
  else if (key == "delta_upper") delta_upper = positive(value);
  else
    throw std::invalid_argument("unknown prior override key: " + key);
}

std::size_t hyper_dim(const ModelSpec& spec) { return coords(spec).size(); }

std::size_t dim(const ModelSpec& spec) {
  return hyper_dim(spec) + spec.num_studies();
}

std::vector<std::string> hyper_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  for (const auto& c : coords(spec)) names.emplace_back(c.name);
  return names;
}

std::vector<double> to_unconstrained(const ModelSpec& spec,
                                     const LatentState& state) {
  check_spec(spec);
  if (state.theta.size() != spec.num_studies())
    throw std::invalid_argument("model: theta length mismatch");
  const auto cs = coords(spec);
  std::vector<double> z(cs.size() + state.theta.size());
  for (std::size_t j = 0; j < cs.size(); ++j)
    z[j] = inverse(cs[j], get_param(state.hyper, cs[j].name));
  for (std::size_t i = 0; i < state.theta.size(); ++i) {
    if (!std::isfinite(state.theta[i]))
      throw std::domain_error("model: non-finite theta");
    z[cs.size() + i] = state.theta[i];
  }
  return z;
}

LatentState from_unconstrained(const ModelSpec& spec,
                               std::span<const double> z) {
  check_spec(spec);
  if (z.size() != dim(spec))
    throw std::invalid_argument("model: unconstrained vector length mismatch");
  LatentState state;
  state.hyper = hyper_from_z(spec, z);
  const std::size_t nh = hyper_dim(spec);
  state.theta.assign(z.begin() + nh, z.end());
  return state;
}

double log_prior(const ModelSpec& spec, const FamilyParams& hyper) {
  double lp = 0.0;
  for (const auto& c : coords(spec))
    lp += log_prior_coord(spec.priors, c.name, get_param(hyper, c.name));
  return lp;
}

double log_jacobian(const ModelSpec& spec, std::span<const double> z) {
  const auto cs = coords(spec);
  double lj = 0.0;
  for (std::size_t j = 0; j < cs.size(); ++j) lj += log_jac_coord(cs[j], z[j]);
  return lj;
}

double log_posterior(const ModelSpec& spec, std::span<const double> z) {
  check_spec(spec);
  if (z.size() != dim(spec))
    throw std::invalid_argument("model: unconstrained vector length mismatch");
  const std::size_t nh = hyper_dim(spec);
  const FamilyParams hyper = hyper_from_z(spec, z);
  const dist::PreparedLogPdf pdf(hyper);
  double lp = 0.0;
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    const double theta = z[nh + i];
    lp += study_log_lik(spec.data[i], theta);
    lp += pdf(theta);
  }
  lp += log_prior(spec, hyper);
  lp += log_jacobian(spec, z);
  return std::isnan(lp) ? kNegInf : lp;
}

double log_posterior_coord_delta(const ModelSpec& spec,
                                 std::span<const double> z, std::size_t j,
                                 double zj_new) {
  const std::size_t nh = hyper_dim(spec);
  double delta;
  if (j < nh) {
    const auto cs = coords(spec);
    const FamilyParams hyper_old = hyper_from_z(spec, z);
    FamilyParams hyper_new = hyper_old;
    const double v_new = forward(cs[j], zj_new);
    set_param(hyper_new, cs[j].name, v_new);
    const dist::PreparedLogPdf pdf_old(hyper_old);
    const dist::PreparedLogPdf pdf_new(hyper_new);
    delta = 0.0;
    for (std::size_t i = 0; i < spec.data.size(); ++i) {
      const double theta = z[nh + i];
      delta += pdf_new(theta) - pdf_old(theta);
    }
    const double v_old = get_param(hyper_old, cs[j].name);
    delta += log_prior_coord(spec.priors, cs[j].name, v_new) -
             log_prior_coord(spec.priors, cs[j].name, v_old);
    delta += log_jac_coord(cs[j], zj_new) - log_jac_coord(cs[j], z[j]);
  } else {
    const std::size_t i = j - nh;
    const FamilyParams hyper = hyper_from_z(spec, z);
    const dist::PreparedLogPdf pdf(hyper);
    const double theta_old = z[j];
    delta = study_log_lik(spec.data[i], zj_new) -
            study_log_lik(spec.data[i], theta_old) + pdf(zj_new) -
            pdf(theta_old);
  }
  return std::isnan(delta) ? kNegInf : delta;
}

double deviance(const ModelSpec& spec, std::span<const double> theta) {
  if (theta.size() != spec.num_studies())
    throw std::invalid_argument("model: theta length mismatch");
  double dev = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i)
    dev += study_log_lik(spec.data[i], theta[i]);
  return -2.0 * dev;
}

}  // namespace flexmeta::model
