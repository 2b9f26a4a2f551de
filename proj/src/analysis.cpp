#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "flexmeta/analysis.hpp"

namespace flexmeta::cli {

namespace {

using nlohmann::json;

std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json interval_json(const classic::Interval& iv) {
  return json::array({iv.lower, iv.upper});
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json config_json(const RunConfig& cfg) {
  json fams = json::array();
  for (dist::Family f : cfg.effective_families())
    fams.push_back(std::string(dist::family_name(f)));
  json priors = {
      {"xi_mean", cfg.priors.xi_mean},
      {"xi_sd", cfg.priors.xi_sd},
      {"omega_upper", cfg.priors.omega_upper},
      {"nu_rate", cfg.priors.nu_rate},
      {"nu_lower", cfg.priors.nu_lower},
      {"alpha_sd", cfg.priors.alpha_sd},
      {"jf_lower", cfg.priors.jf_lower},
      {"jf_upper", cfg.priors.jf_upper},
      {"epsilon_sd", cfg.priors.epsilon_sd},
      {"delta_upper", cfg.priors.delta_upper},
  };
  if (cfg.priors.omega_fixed) priors["omega_fixed"] = *cfg.priors.omega_fixed;
  return json{{"data", cfg.data_path},
              {"families", fams},
              {"chains", cfg.sampler.chains},
              {"warmup", cfg.sampler.warmup},
              {"keep", cfg.sampler.keep},
              {"thin", cfg.sampler.thin},
              {"seed", cfg.sampler.seed},
              {"priors", priors}};
}

}  // namespace

const std::vector<dist::Family>& RunConfig::effective_families() const {
  return families.empty() ? dist::all_families() : families;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string s = config_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

AnalysisReport run_analysis(const RunConfig& cfg) {
  const std::vector<classic::StudyRecord> data = ingest(cfg.data_path);
  if (data.size() < 3)
    throw std::runtime_error("run_analysis: need at least 3 studies");

  AnalysisReport report;
  report.num_studies = data.size();
  report.seed = cfg.sampler.seed;
  report.config_hash = config_hash(cfg);
  report.classic_result = classic::dersimonian_laird(data);

  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);

  for (dist::Family family : cfg.effective_families()) {
    model::ModelSpec spec;
    spec.data = data;
    spec.family = family;
    spec.priors = cfg.priors;

    sampler::SamplerConfig scfg = cfg.sampler;
    // one disjoint stream block per family so subsets stay reproducible
    scfg.stream_offset = 256 * (1 + static_cast<std::uint64_t>(family));
    const sampler::DrawsMatrix draws = sampler::run(spec, scfg);

    FamilyResult fr;
    fr.family = std::string(dist::family_name(family));
    fr.posterior = inference::summarize_mu(draws, spec);

    Rng pred_rng(cfg.sampler.seed,
                 scfg.stream_offset + 0xD1CEULL);
    const std::vector<double> theta_new =
        inference::predictive_draws(draws, pred_rng);
    fr.predictive = inference::summarize_predictive(fr.family, theta_new);

    fr.diagnostics.max_rhat = draws.diag.max_rhat;
    fr.diagnostics.min_ess = draws.diag.min_ess;
    fr.diagnostics.converged = draws.diag.converged;
    fr.diagnostics.scalars = draws.diag.scalars;
    double acc = 0.0;
    for (double a : draws.diag.accept_rate) acc += a;
    fr.diagnostics.mean_accept =
        draws.diag.accept_rate.empty()
            ? 0.0
            : acc / static_cast<double>(draws.diag.accept_rate.size());
    if (!fr.diagnostics.converged) report.any_convergence_warning = true;

    const std::string name = fr.family;
    write_file(out_dir / ("density_" + name + "_mu.csv"),
               density_csv(inference::density_grid(draws.all_mu())));
    write_file(out_dir / ("density_" + name + "_pred.csv"),
               density_csv(inference::density_grid(theta_new)));

    report.families.push_back(std::move(fr));
  }

  write_file(out_dir / "report.json", report_json(report, cfg, true));
  write_file(out_dir / "classic.csv", classic_csv(report.classic_result));
  write_file(out_dir / "posterior.csv", posterior_csv(report));
  write_file(out_dir / "predictive.csv", predictive_csv(report));
  return report;
}

std::string report_json(const AnalysisReport& report, const RunConfig& cfg,
                        bool with_timestamp) {
  json root;
  root["version"] = report.version;
  root["seed"] = report.seed;
  root["config"] = config_json(cfg);
  root["config_hash"] = report.config_hash;
  root["num_studies"] = report.num_studies;
  if (with_timestamp) root["generated_at"] = iso_timestamp();

  const classic::ClassicResult& c = report.classic_result;
  json cj = {{"mu_hat", c.mu_hat},     {"ci95", interval_json(c.ci95)},
             {"tau2", c.tau2},         {"q", c.q},
             {"i2", c.i2},             {"q_pvalue", c.q_pvalue},
             {"k", c.k}};
  if (c.hts_pi) cj["hts_pi"] = interval_json(*c.hts_pi);
  root["classic"] = cj;

  json fams = json::array();
  for (const FamilyResult& fr : report.families) {
    json scalars = json::object();
    for (const auto& s : fr.diagnostics.scalars) {
      scalars[s.name] = {{"rhat", s.rhat}, {"ess", s.ess}};
    }
    fams.push_back(json{
        {"family", fr.family},
        {"posterior",
         {{"mean", fr.posterior.mean},
          {"sd", fr.posterior.sd},
          {"cri95", interval_json(fr.posterior.cri95)},
          {"prob_below_zero", fr.posterior.prob_below_zero},
          {"dic", fr.posterior.dic},
          {"pd", fr.posterior.pd},
          {"dbar", fr.posterior.dbar}}},
        {"predictive",
         {{"mean", fr.predictive.mean},
          {"sd", fr.predictive.sd},
          {"pi95", interval_json(fr.predictive.pi95)},
          {"prob_below_zero", fr.predictive.prob_below_zero}}},
        {"diagnostics",
         {{"max_rhat", fr.diagnostics.max_rhat},
          {"min_ess", fr.diagnostics.min_ess},
          {"mean_accept", fr.diagnostics.mean_accept},
          {"converged", fr.diagnostics.converged},
          {"scalars", scalars}}}});
  }
  root["families"] = fams;
  root["convergence_warning"] = report.any_convergence_warning;
  return root.dump(2) + "\n";
}

std::string classic_csv(const classic::ClassicResult& r) {
  std::string out =
      "k,mu_hat,ci_lower,ci_upper,tau2,q,i2,q_pvalue,pi_lower,pi_upper\n";
  out += std::to_string(r.k) + "," + fmt_full(r.mu_hat) + "," +
         fmt_full(r.ci95.lower) + "," + fmt_full(r.ci95.upper) + "," +
         fmt_full(r.tau2) + "," + fmt_full(r.q) + "," + fmt_full(r.i2) + "," +
         fmt_full(r.q_pvalue) + ",";
  if (r.hts_pi)
    out += fmt_full(r.hts_pi->lower) + "," + fmt_full(r.hts_pi->upper);
  else
    out += ",";
  out += "\n";
  return out;
}

std::string posterior_csv(const AnalysisReport& report) {
  std::string out =
      "family,mean,sd,cri_lower,cri_upper,prob_below_zero,dic,pd,max_rhat,"
      "min_ess,converged\n";
  for (const FamilyResult& fr : report.families) {
    out += fr.family + "," + fmt_full(fr.posterior.mean) + "," +
           fmt_full(fr.posterior.sd) + "," +
           fmt_full(fr.posterior.cri95.lower) + "," +
           fmt_full(fr.posterior.cri95.upper) + "," +
           fmt_full(fr.posterior.prob_below_zero) + "," +
           fmt_full(fr.posterior.dic) + "," + fmt_full(fr.posterior.pd) + "," +
           fmt_full(fr.diagnostics.max_rhat) + "," +
           fmt_full(fr.diagnostics.min_ess) + "," +
           (fr.diagnostics.converged ? "1" : "0") + "\n";
  }
  return out;
}

std::string predictive_csv(const AnalysisReport& report) {
  std::string out = "family,mean,sd,pi_lower,pi_upper,prob_below_zero\n";
  for (const FamilyResult& fr : report.families) {
    out += fr.family + "," + fmt_full(fr.predictive.mean) + "," +
           fmt_full(fr.predictive.sd) + "," +
           fmt_full(fr.predictive.pi95.lower) + "," +
           fmt_full(fr.predictive.pi95.upper) + "," +
           fmt_full(fr.predictive.prob_below_zero) + "\n";
  }
  return out;
}

std::string density_csv(const inference::DensityGrid& grid) {
  std::string out = "theta,density\n";
  for (std::size_t i = 0; i < grid.theta.size(); ++i)
    out += fmt_full(grid.theta[i]) + "," + fmt_full(grid.density[i]) + "\n";
  return out;
}

std::string plain_tables(const AnalysisReport& report) {
  char buf[256];
  std::string out;
  const classic::ClassicResult& c = report.classic_result;
  out += "Classical random-effects analysis (DerSimonian-Laird)\n";
  std::snprintf(buf, sizeof(buf),
                "  K = %zu   mu = %.2f  95%% CI (%.2f, %.2f)\n", c.k, c.mu_hat,
                c.ci95.lower, c.ci95.upper);
  out += buf;
  std::string pstr;
  if (c.q_pvalue < 0.01) {
    pstr = "<0.01";
  } else {
    std::snprintf(buf, sizeof(buf), "%.4f", c.q_pvalue);
    pstr = buf;
  }
  std::snprintf(buf, sizeof(buf),
                "  Q = %.2f (P %s)   I2 = %.0f%%   tau2 = %.2f\n", c.q,
                pstr.c_str(), c.i2, c.tau2);
  out += buf;
  if (c.hts_pi) {
    std::snprintf(buf, sizeof(buf), "  95%% HTS prediction interval (%.2f, %.2f)\n",
                  c.hts_pi->lower, c.hts_pi->upper);
    out += buf;
  }
  out += "\nPosterior of the overall effect mu\n";
  std::snprintf(buf, sizeof(buf), "  %-14s %8s %8s %18s %10s %10s\n", "family",
                "mean", "sd", "95% CrI", "Pr(mu<0)", "DIC");
  out += buf;
  for (const FamilyResult& fr : report.families) {
    char iv[32];
    std::snprintf(iv, sizeof(iv), "(%.2f, %.2f)", fr.posterior.cri95.lower,
                  fr.posterior.cri95.upper);
    std::snprintf(buf, sizeof(buf), "  %-14s %8.2f %8.2f %18s %10.2f %10.2f%s\n",
                  fr.family.c_str(), fr.posterior.mean, fr.posterior.sd, iv,
                  fr.posterior.prob_below_zero, fr.posterior.dic,
                  fr.diagnostics.converged ? "" : "  [convergence warning]");
    out += buf;
  }
  out += "\nPredictive distribution of a new study effect\n";
  std::snprintf(buf, sizeof(buf), "  %-14s %8s %8s %18s %12s\n", "family",
                "mean", "sd", "95% PI", "Pr(new<0)");
  out += buf;
  for (const FamilyResult& fr : report.families) {
    char iv[32];
    std::snprintf(iv, sizeof(iv), "(%.2f, %.2f)", fr.predictive.pi95.lower,
                  fr.predictive.pi95.upper);
    std::snprintf(buf, sizeof(buf), "  %-14s %8.2f %8.2f %18s %12.2f\n",
                  fr.family.c_str(), fr.predictive.mean, fr.predictive.sd, iv,
                  fr.predictive.prob_below_zero);
    out += buf;
  }
  return out;
}

int exit_code(const AnalysisReport& report) {
  return report.any_convergence_warning ? 2 : 0;
}

}  // namespace flexmeta::cli
