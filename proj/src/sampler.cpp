#include "flexmeta/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace flexmeta::sampler {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_exp(double x) { return x >= 0.0 ? 1.0 : std::exp(std::max(x, -745.0)); }

// Model target with O(local) coordinate updates and data-informed starts.
class ModelTarget : public LogDensity {
 public:
  explicit ModelTarget(const model::ModelSpec& spec) : spec_(spec) {}

  std::size_t dim() const override { return model::dim(spec_); }

  double log_density(std::span<const double> z) const override {
    return model::log_posterior(spec_, z);
  }

  double coord_delta(std::span<const double> z, std::size_t j,
                     double zj_new) const override {
    return model::log_posterior_coord_delta(spec_, z, j, zj_new);
  }

  std::vector<double> initial_state(Rng& rng) const override {
    const std::size_t k = spec_.num_studies();
    double mean_y = 0.0;
    for (const auto& d : spec_.data) mean_y += d.y;
    mean_y /= static_cast<double>(k);
    double var_y = 0.0;
    for (const auto& d : spec_.data) var_y += (d.y - mean_y) * (d.y - mean_y);
    var_y /= std::max<std::size_t>(k - 1, 1);
    const double sd_y = std::sqrt(std::max(var_y, 1e-6));

    model::LatentState state;
    state.hyper.family = spec_.family;
    const model::PriorConfig& pr = spec_.priors;
    state.hyper.xi = mean_y + 0.3 * sd_y * rng.normal();
    state.hyper.omega =
        pr.omega_fixed
            ? *pr.omega_fixed
            : std::clamp(sd_y * std::exp(0.3 * rng.normal()),
                         0.02 * pr.omega_upper, 0.8 * pr.omega_upper);
    switch (spec_.family) {
      case dist::Family::student_t:
        state.hyper.nu = pr.nu_lower + 7.5 * std::exp(0.3 * rng.normal());
        break;
      case dist::Family::skew_normal:
        state.hyper.alpha = 0.5 * rng.normal();
        break;
      case dist::Family::skew_t:
      case dist::Family::as2:
        state.hyper.nu = pr.nu_lower + 7.5 * std::exp(0.3 * rng.normal());
        state.hyper.alpha = 0.5 * rng.normal();
        break;
      case dist::Family::jones_faddy: {
        const double mid = pr.jf_lower + 0.02 * (pr.jf_upper - pr.jf_lower);
        state.hyper.a = mid * std::exp(0.2 * rng.normal());
        state.hyper.b = mid * std::exp(0.2 * rng.normal());
        break;
      }
      case dist::Family::sinh_arcsinh:
        state.hyper.epsilon = 0.5 * rng.normal();
        state.hyper.delta = std::exp(0.3 * rng.normal());
        break;
      default:
        break;
    }
    state.theta.resize(k);
    for (std::size_t i = 0; i < k; ++i)
      state.theta[i] = spec_.data[i].y + 0.3 * spec_.data[i].se * rng.normal();
    return model::to_unconstrained(spec_, state);
  }

 private:
  const model::ModelSpec& spec_;
};

void chain_series(const DrawsMatrix& draws,
                  const std::function<double(std::size_t, std::size_t)>& get,
                  std::vector<std::vector<double>>& out) {
  out.clear();
  out.resize(draws.chain_count());
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    const std::size_t n = draws.mu[c].size();
    out[c].resize(n);
    for (std::size_t d = 0; d < n; ++d) out[c][d] = get(c, d);
  }
}

struct SplitStats {
  double w = 0.0;      // mean within-sequence variance
  double var_plus = 0.0;
  std::vector<std::vector<double>> seqs;
};

SplitStats split_stats(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("diagnostics: no chains");
  for (const auto& c : chains)
    if (c.size() < 100)
      throw std::invalid_argument(
          "diagnostics: need at least 100 draws per chain");
  // split each chain into halves, truncated to a common length
  std::size_t h = chains.front().size() / 2;
  for (const auto& c : chains) h = std::min(h, c.size() / 2);
  std::vector<std::vector<double>> seqs;
  for (const auto& c : chains) {
    seqs.emplace_back(c.begin(), c.begin() + h);
    seqs.emplace_back(c.end() - h, c.end());
  }
  const std::size_t m = seqs.size();
  const std::size_t n = h;

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mu = std::accumulate(seqs[j].begin(), seqs[j].end(), 0.0) / n;
    double v = 0.0;
    for (double x : seqs[j]) v += (x - mu) * (x - mu);
    means[j] = mu;
    vars[j] = v / (n - 1);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / (m - 1);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (!(w > 0.0))
    throw std::invalid_argument("diagnostics: zero within-sequence variance");
  SplitStats st;
  st.w = w;
  st.var_plus = (static_cast<double>(n - 1) / n) * w + b / n;
  st.seqs = std::move(seqs);
  return st;
}

}  // namespace

double LogDensity::coord_delta(std::span<const double> z, std::size_t j,
                               double zj_new) const {
  std::vector<double> znew(z.begin(), z.end());
  znew[j] = zj_new;
  const double delta = log_density(znew) - log_density(z);
  return std::isnan(delta) ? kNegInf : delta;
}

std::vector<double> LogDensity::initial_state(Rng& rng) const {
  std::vector<double> z(dim());
  for (auto& v : z) v = 0.5 * rng.normal();
  return z;
}

ChainRaw run_chain(const LogDensity& target, const SamplerConfig& cfg,
                   std::size_t chain_index, std::size_t n_keep) {
  if (cfg.warmup < 100)
    throw std::invalid_argument("sampler: warmup must be at least 100");
  if (cfg.thin < 1) throw std::invalid_argument("sampler: thin must be >= 1");
  const std::size_t d = target.dim();
  Rng rng(cfg.seed, cfg.stream_offset + chain_index);
  std::vector<double> z = target.initial_state(rng);
  if (z.size() != d)
    throw std::invalid_argument("sampler: initial state has wrong dimension");
  if (!std::isfinite(target.log_density(z)))
    throw std::runtime_error(
        "sampler: initial state has non-finite log density");

  std::vector<double> log_scale(d, 0.0);
  std::vector<std::size_t> accepts(d, 0);

  ChainRaw out;
  out.n = n_keep;
  out.dim = d;
  out.z.reserve(n_keep * d);

  const std::size_t total = cfg.warmup + n_keep * cfg.thin;
  for (std::size_t sweep = 1; sweep <= total; ++sweep) {
    const bool adapting = sweep <= cfg.warmup;
    const double gamma = adapting ? std::pow(static_cast<double>(sweep), -0.6) : 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double step = std::exp(log_scale[j]) * rng.normal();
      const double u = rng.uniform();
      const double zj_new = z[j] + step;
      double delta = target.coord_delta(z, j, zj_new);
      if (std::isnan(delta)) delta = kNegInf;
      const bool accept = delta >= 0.0 || std::log(u) < delta;
      if (accept) z[j] = zj_new;
      if (adapting) {
        log_scale[j] += gamma * (safe_exp(delta) - cfg.target_accept);
        log_scale[j] = std::clamp(log_scale[j], -15.0, 15.0);
      } else if (accept) {
        ++accepts[j];
      }
    }
    if (sweep == cfg.warmup) {
      out.scales_end_warmup.resize(d);
      for (std::size_t j = 0; j < d; ++j)
        out.scales_end_warmup[j] = std::exp(log_scale[j]);
    }
    if (!adapting && (sweep - cfg.warmup) % cfg.thin == 0)
      out.z.insert(out.z.end(), z.begin(), z.end());
  }

  out.scales_final.resize(d);
  for (std::size_t j = 0; j < d; ++j)
    out.scales_final[j] = std::exp(log_scale[j]);
  out.accept_rate.resize(d);
  const double post = static_cast<double>(n_keep * cfg.thin);
  for (std::size_t j = 0; j < d; ++j)
    out.accept_rate[j] = post > 0.0 ? accepts[j] / post : 0.0;
  return out;
}

std::size_t DrawsMatrix::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : mu) n += c.size();
  return n;
}

std::vector<double> DrawsMatrix::all_mu() const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : mu) out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::vector<double> DrawsMatrix::all_deviance() const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : deviance) out.insert(out.end(), c.begin(), c.end());
  return out;
}

dist::FamilyParams DrawsMatrix::hyper_at(std::size_t chain,
                                         std::size_t draw) const {
  dist::FamilyParams h;
  h.family = family;
  if (fixed_omega) h.omega = *fixed_omega;
  for (std::size_t j = 0; j < num_hyper; ++j) {
    const double v = hyper[chain][draw * num_hyper + j];
    const std::string& nm = hyper_names[j];
    if (nm == "xi") h.xi = v;
    else if (nm == "omega") h.omega = v;
    else if (nm == "nu") h.nu = v;
    else if (nm == "alpha") h.alpha = v;
    else if (nm == "a") h.a = v;
    else if (nm == "b") h.b = v;
    else if (nm == "epsilon") h.epsilon = v;
    else if (nm == "delta") h.delta = v;
  }
  return h;
}

DrawsMatrix run(const model::ModelSpec& spec, const SamplerConfig& cfg) {
  if (cfg.chains < 1)
    throw std::invalid_argument("sampler: need at least one chain");
  if (cfg.keep < cfg.chains)
    throw std::invalid_argument("sampler: keep must be >= chains");

  const ModelTarget target(spec);
  const std::size_t nh = model::hyper_dim(spec);
  const std::size_t k = spec.num_studies();

  std::vector<std::size_t> keep_per(cfg.chains, cfg.keep / cfg.chains);
  for (std::size_t c = 0; c < cfg.keep % cfg.chains; ++c) ++keep_per[c];

  std::vector<ChainRaw> raw(cfg.chains);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t threads =
      std::max<std::size_t>(1, std::min(cfg.max_threads, cfg.chains));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= cfg.chains) return;
      try {
        raw[c] = run_chain(target, cfg, c, keep_per[c]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  DrawsMatrix out;
  out.family = spec.family;
  out.num_studies = k;
  out.num_hyper = nh;
  out.fixed_omega = spec.priors.omega_fixed;
  out.hyper_names = model::hyper_names(spec);
  out.draws_per_chain = cfg.keep / cfg.chains;
  out.hyper.resize(cfg.chains);
  out.theta.resize(cfg.chains);
  out.mu.resize(cfg.chains);
  out.deviance.resize(cfg.chains);
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    const std::size_t n = raw[c].n;
    out.hyper[c].resize(n * nh);
    out.theta[c].resize(n * k);
    out.mu[c].resize(n);
    out.deviance[c].resize(n);
    for (std::size_t drw = 0; drw < n; ++drw) {
      const std::span<const double> zrow(raw[c].z.data() + drw * raw[c].dim,
                                         raw[c].dim);
      const model::LatentState state = model::from_unconstrained(spec, zrow);
      const auto& hv = state.hyper;
      for (std::size_t j = 0; j < nh; ++j) {
        const std::string& nm = out.hyper_names[j];
        double v = 0.0;
        if (nm == "xi") v = hv.xi;
        else if (nm == "omega") v = hv.omega;
        else if (nm == "nu") v = hv.nu;
        else if (nm == "alpha") v = hv.alpha;
        else if (nm == "a") v = hv.a;
        else if (nm == "b") v = hv.b;
        else if (nm == "epsilon") v = hv.epsilon;
        else if (nm == "delta") v = hv.delta;
        out.hyper[c][drw * nh + j] = v;
      }
      for (std::size_t i = 0; i < k; ++i)
        out.theta[c][drw * k + i] = state.theta[i];
      out.mu[c][drw] = dist::mean(hv);
      out.deviance[c][drw] = model::deviance(spec, state.theta);
    }
  }

  // chain-averaged per-coordinate acceptance
  out.diag.accept_rate.assign(raw.front().accept_rate.size(), 0.0);
  for (const auto& r : raw)
    for (std::size_t j = 0; j < r.accept_rate.size(); ++j)
      out.diag.accept_rate[j] += r.accept_rate[j] / cfg.chains;

  // R-hat / ESS over each hyperparameter and the derived mu
  const bool enough = out.draws_per_chain >= 100 && cfg.chains >= 1;
  double max_rhat = 0.0;
  double min_ess = std::numeric_limits<double>::infinity();
  bool healthy = enough;
  std::vector<std::vector<double>> series;
  for (std::size_t j = 0; j <= nh; ++j) {
    ScalarDiagnostic sd;
    sd.name = j < nh ? out.hyper_names[j] : "mu";
    if (enough) {
      chain_series(
          out,
          [&](std::size_t c, std::size_t drw) {
            return j < nh ? out.hyper[c][drw * nh + j] : out.mu[c][drw];
          },
          series);
      try {
        sd.rhat = split_rhat(series);
        sd.ess = ess(series);
      } catch (const std::invalid_argument&) {
        sd.rhat = std::numeric_limits<double>::infinity();
        sd.ess = 0.0;
      }
      max_rhat = std::max(max_rhat, sd.rhat);
      min_ess = std::min(min_ess, sd.ess);
      if (!(sd.rhat <= 1.01) || !(sd.ess >= 400.0)) healthy = false;
    } else {
      sd.rhat = std::numeric_limits<double>::quiet_NaN();
      sd.ess = std::numeric_limits<double>::quiet_NaN();
    }
    out.diag.scalars.push_back(std::move(sd));
  }
  out.diag.converged = healthy;
  out.diag.max_rhat = max_rhat;
  out.diag.min_ess = enough ? min_ess : 0.0;
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const SplitStats st = split_stats(chains);
  return std::sqrt(st.var_plus / st.w);
}

double ess(const std::vector<std::vector<double>>& chains) {
  const SplitStats st = split_stats(chains);
  const std::size_t m = st.seqs.size();
  const std::size_t n = st.seqs.front().size();

  std::vector<double> means(m);
  for (std::size_t j = 0; j < m; ++j)
    means[j] = std::accumulate(st.seqs[j].begin(), st.seqs[j].end(), 0.0) / n;

  // lag-t autocovariance averaged over sequences, computed on demand
  auto acov = [&](std::size_t t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& s = st.seqs[j];
      double c = 0.0;
      for (std::size_t i = 0; i + t < n; ++i)
        c += (s[i] - means[j]) * (s[i + t] - means[j]);
      acc += c / n;
    }
    return acc / m;
  };

  // Geyer initial positive monotone sequence on paired correlations
  const double var_plus = st.var_plus;
  const double rho1 = 1.0 - (st.w - acov(1)) / var_plus;
  double prev_pair = 1.0 + rho1;  // rho_0 + rho_1 with rho_0 = 1
  double sum_pairs = prev_pair;
  for (std::size_t t = 2; t + 1 < n; t += 2) {
    const double rho_even = 1.0 - (st.w - acov(t)) / var_plus;
    const double rho_odd = 1.0 - (st.w - acov(t + 1)) / var_plus;
    double pair = rho_even + rho_odd;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    sum_pairs += pair;
    prev_pair = pair;
  }
  const double tau = std::max(2.0 * sum_pairs - 1.0, 1e-12);
  const double total = static_cast<double>(m) * n;
  return total / tau;
}

}  // namespace flexmeta::sampler
