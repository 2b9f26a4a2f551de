#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flexmeta::classic {

struct StudyRecord {
  std::string id;
  double y = 0.0;   // observed effect estimate
  double se = 0.0;  // within-study standard error, > 0
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

struct ClassicResult {
  double mu_hat = 0.0;
  Interval ci95;
  double tau2 = 0.0;      // DL moment estimate, truncated at zero
  double q = 0.0;         // Cochran's Q
  double i2 = 0.0;        // percentage in [0, 100]
  double q_pvalue = 1.0;  // chi-square survival of Q on K-1 df
  std::optional<Interval> hts_pi;  // requires K >= 3
  std::size_t k = 0;
};

/// DerSimonian-Laird pooling with Cochran's Q, I^2, tau^2 and the
/// Higgins-Thompson-Spiegelhalter prediction interval. Needs K >= 2
/// studies (K >= 3 for the prediction interval) and positive standard
/// errors; throws std::invalid_argument otherwise.
ClassicResult dersimonian_laird(std::span<const StudyRecord> data);

}  // namespace flexmeta::classic
