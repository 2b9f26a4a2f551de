#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexmeta/classic.hpp"
#include "flexmeta/inference.hpp"
#include "flexmeta/model.hpp"
#include "flexmeta/sampler.hpp"

namespace flexmeta::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 20240901;

/// Parse a header-bearing CSV with columns study,y,se (or study,y,var).
/// Exactly one of se/var may be present; rows are validated and order is
/// preserved. Errors carry the 1-based data row number.
std::vector<classic::StudyRecord> ingest(const std::string& path);

/// Parse CSV text directly (same contract as ingest).
std::vector<classic::StudyRecord> ingest_text(const std::string& text);

enum class OutputFormat { plain, csv, json };

struct RunConfig {
  std::string data_path;
  std::vector<dist::Family> families;  // empty means all seven
  sampler::SamplerConfig sampler;
  model::PriorConfig priors;
  std::string out_dir = "flexmeta_out";
  OutputFormat format = OutputFormat::plain;
  bool seed_defaulted = false;

  const std::vector<dist::Family>& effective_families() const;
};

struct FamilyDiagnostics {
  double max_rhat = 0.0;
  double min_ess = 0.0;
  double mean_accept = 0.0;
  bool converged = false;
  std::vector<sampler::ScalarDiagnostic> scalars;
};

struct FamilyResult {
  std::string family;
  inference::SummaryRow posterior;
  inference::PredictiveRow predictive;
  FamilyDiagnostics diagnostics;
};

struct AnalysisReport {
  classic::ClassicResult classic_result;
  std::vector<FamilyResult> families;
  std::size_t num_studies = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = kVersion;
  bool any_convergence_warning = false;
};

/// Run the full pipeline: classical analysis once, then per requested
/// family the sampler, posterior and predictive summaries, DIC and density
/// grids. Writes report.json, classic/posterior/predictive CSVs and the
/// density grids under cfg.out_dir. Deterministic given the seed.
AnalysisReport run_analysis(const RunConfig& cfg);

/// report.json content; timestamp inclusion is separated so byte-level
/// comparisons can exclude it.
std::string report_json(const AnalysisReport& report, const RunConfig& cfg,
                        bool with_timestamp);

std::string classic_csv(const classic::ClassicResult& r);
std::string posterior_csv(const AnalysisReport& report);
std::string predictive_csv(const AnalysisReport& report);
std::string density_csv(const inference::DensityGrid& grid);

/// Fixed-width tables with 2-decimal display, mirroring the CSV content.
std::string plain_tables(const AnalysisReport& report);

/// 0 clean, 2 when any family carries a convergence warning.
int exit_code(const AnalysisReport& report);

/// FNV-1a hash of the canonical config serialization.
std::string config_hash(const RunConfig& cfg);

}  // namespace flexmeta::cli
