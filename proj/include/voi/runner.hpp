#pragma once

// Run orchestration for the command-line front end: PSA, per-study
// estimation with the requested methods, and CSV output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voi/config.hpp"
#include "voi/logistic.hpp"
#include "voi/moment_matching.hpp"
#include "voi/nmc.hpp"

namespace voi {

struct ResultRow {
  std::string study;
  std::size_t study_index = 0;  // 1-based position in the config
  std::string method;           // "nmc", "mm" or "mm_by_n"
  int n = 0;                    // sample size the row refers to
  double evsi = 0.0;
  double evsi_im = 0.0;
  double std_error = 0.0;       // of evsi_im
  double seconds = 0.0;
  std::size_t S = 0;
  std::size_t R = 0;
  std::size_t Q = 0;            // 0 for nmc rows
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::string config_hash;
  std::uint64_t seed = 0;

  /// First row for (study_index, method) at the design size, if any.
  const ResultRow* find(std::size_t study_index, const std::string& method) const;
};

/// Seed of study k (1-based) and of the shared PSA.
std::uint64_t study_seed(const RunConfig& config, std::size_t study_index);
std::uint64_t psa_seed(const RunConfig& config);

PsaSample run_psa(const RunConfig& config);

struct NmcStudyRun {
  EvsiEstimate evsi;
  EvsiEstimate evsi_im;
  std::vector<PosteriorSummary> summaries;
};

NmcStudyRun run_nmc_study(const RunConfig& config, std::size_t study_index);
MmResult run_mm_study(const RunConfig& config, const PsaSample& psa, std::size_t study_index);

/// Runs every study with the configured methods, writes results.csv, trend
/// and density files (and the NMC scatter when NMC runs) into output_dir.
ResultTable run(const RunConfig& config);

/// "# config_hash=<hash> seed=<seed>" provenance line (no newline).
std::string provenance_header(const RunConfig& config);

void write_results_csv(const ResultTable& table, const std::filesystem::path& path,
                       const std::string& header);

/// 512-point grid over [min, max] of `inb` with the fitted probability, and
/// the raw INB values for density plots. Throws Error if a file cannot be
/// written.
void emit_trend_curve(const LogisticFit& fit, std::span<const double> inb,
                      const std::filesystem::path& curve_path,
                      const std::filesystem::path& density_path, const std::string& header);

inline constexpr std::size_t kTrendGridPoints = 512;

/// Writes trend_study<k>.csv and inb_density_study<k>.csv for an MM run.
void write_trend_files(const RunConfig& config, std::size_t study_index, const MmResult& mm);

}  // namespace voi
