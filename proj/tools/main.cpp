#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexmeta/analysis.hpp"

namespace {

std::size_t threads_from_env() {
  const char* env = std::getenv("FLEXMETA_THREADS");
  if (!env) return 0;
  const long v = std::strtol(env, nullptr, 10);
  return v > 0 ? static_cast<std::size_t>(v) : 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace flexmeta;

  CLI::App app{
      "Random-effects meta-analysis with flexible random-effects "
      "distributions (normal, t, skew normal, skew t, asymmetric Subbotin "
      "II, Jones-Faddy, sinh-arcsinh)."};
  app.set_version_flag("--version", std::string("flexmeta ") + cli::kVersion);

  std::string data_path;
  std::vector<std::string> family_names;
  std::vector<std::string> prior_overrides;
  std::string out_dir = "flexmeta_out";
  std::string format = "plain";
  cli::RunConfig cfg;
  bool fast = false;

  app.add_option("--data", data_path, "Study CSV with columns study,y,se (or study,y,var)")
      ->required();
  app.add_option("--families", family_names,
                 "Comma-separated subset of: normal,t,skew-normal,skew-t,"
                 "as2,jones-faddy,sinh-arcsinh (default: all)")
      ->delimiter(',');
  auto* chains_opt = app.add_option("--chains", cfg.sampler.chains, "Number of chains (default 4)");
  auto* warmup_opt = app.add_option("--warmup", cfg.sampler.warmup, "Warmup sweeps per chain (default 10000)");
  auto* keep_opt = app.add_option("--keep", cfg.sampler.keep, "Total post-warmup draws across chains (default 250000)");
  auto* seed_opt = app.add_option("--seed", cfg.sampler.seed, "RNG seed; set it for archival runs");
  app.add_option("--thin", cfg.sampler.thin, "Thinning interval (default 1)");
  app.add_flag("--fast", fast, "Desk-scale preset: warmup 1000, keep 20000");
  app.add_option("--out", out_dir, "Output directory (default flexmeta_out)");
  app.add_option("--format", format, "Stdout format: plain, csv or json")
      ->check(CLI::IsMember({"plain", "csv", "json"}));
  app.add_option("--prior-override", prior_overrides,
                 "Prior setting as key=value; repeatable. Keys: xi_mean, "
                 "xi_sd, omega_upper, omega_fixed, nu_rate, nu_lower, "
                 "alpha_sd, jf_lower, jf_upper, epsilon_sd, delta_upper");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    cfg.data_path = data_path;
    cfg.out_dir = out_dir;
    if (format == "csv") cfg.format = cli::OutputFormat::csv;
    else if (format == "json") cfg.format = cli::OutputFormat::json;

    for (const std::string& name : family_names) {
      const auto f = dist::family_from_name(name);
      if (!f) {
        std::cerr << "error: unknown family '" << name << "'\n";
        return 1;
      }
      cfg.families.push_back(*f);
    }

    if (fast) {
      if (warmup_opt->count() == 0) cfg.sampler.warmup = 1000;
      if (keep_opt->count() == 0) cfg.sampler.keep = 20000;
    }
    if (chains_opt->count() == 0) cfg.sampler.chains = 4;
    if (seed_opt->count() == 0) {
      cfg.sampler.seed = cli::kDefaultSeed;
      cfg.seed_defaulted = true;
      std::cerr << "warning: --seed not given; defaulting to "
                << cfg.sampler.seed << " (set it for archival runs)\n";
    }

    const std::size_t env_threads = threads_from_env();
    cfg.sampler.max_threads =
        env_threads > 0 ? env_threads
                        : std::min<std::size_t>(cfg.sampler.chains, 4);

    for (const std::string& kv : prior_overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --prior-override expects key=value, got '" << kv
                  << "'\n";
        return 1;
      }
      cfg.priors.set(kv.substr(0, eq), std::stod(kv.substr(eq + 1)));
    }

    const cli::AnalysisReport report = cli::run_analysis(cfg);

    switch (cfg.format) {
      case cli::OutputFormat::plain:
        std::cout << cli::plain_tables(report);
        break;
      case cli::OutputFormat::csv:
        std::cout << cli::posterior_csv(report) << "\n"
                  << cli::predictive_csv(report) << "\n"
                  << cli::classic_csv(report.classic_result);
        break;
      case cli::OutputFormat::json:
        std::cout << cli::report_json(report, cfg, true);
        break;
    }
    std::cout.flush();
    if (report.any_convergence_warning)
      std::cerr << "warning: convergence diagnostics failed for at least one "
                   "family (exit status 2)\n";
    return cli::exit_code(report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
