#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voi/implementation.hpp"
#include "voi/model.hpp"
#include "voi/moment_matching.hpp"
#include "voi/studies.hpp"

namespace voi {

enum class Method { Nmc, Mm, Both };

const char* to_string(Method m);

struct StudyConfig {
  std::string name;
  StudyDesign design;
  std::vector<int> n_grid;            // sample sizes for the across-size estimator
  std::optional<SizeRange> size_range;

  /// Range used by the across-size estimator: the explicit one, else the
  /// span of n_grid widened to include the design size.
  SizeRange effective_size_range() const;

  bool operator==(const StudyConfig&) const = default;
};

struct RunConfig {
  FixedParams fixed;
  PriorSpec prior;
  std::vector<StudyConfig> studies;
  Method method = Method::Both;
  std::size_t psa_size = 10'000;  // PSA draws (also the Moment Matching S)
  std::size_t S = 5'000;          // nested Monte Carlo outer datasets
  std::size_t R = 10'000;         // posterior draws per dataset
  std::size_t Q = 50;             // Moment Matching datasets
  std::uint64_t seed = 20210501;
  MarketShareFunction market;
  CurrentShares current_shares;
  McmcSettings mcmc;
  std::string output_dir = "results";
  unsigned threads = 0;        // 0: one per hardware thread
  bool record_timing = true;   // false writes 0 seconds so output files are reproducible

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// The worked example: three studies, threshold market uptake at 0.6,
/// novel treatment currently unused.
RunConfig case_study_config();

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

/// Reads and validates a JSON config. Throws ConfigError on a missing file,
/// malformed JSON, schema or invariant violations.
RunConfig parse_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const RunConfig& config);

}  // namespace voi
