// voi: value-of-information runs from a JSON config.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "voi/config.hpp"
#include "voi/error.hpp"
#include "voi/runner.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kEstimationError = 2;

int report_config_error(const voi::ConfigError& e) {
  std::cerr << "config error: " << e.what() << '\n';
  return kConfigError;
}

int cmd_run(const std::string& path, const std::optional<std::string>& method,
            const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out) {
  voi::RunConfig config;
  try {
    config = voi::parse_config(path);
    if (method) {
      if (*method == "nmc") config.method = voi::Method::Nmc;
      else if (*method == "mm") config.method = voi::Method::Mm;
      else config.method = voi::Method::Both;
    }
    if (seed) config.seed = *seed;
    if (out) config.output_dir = *out;
    config.validate();
  } catch (const voi::ConfigError& e) {
    return report_config_error(e);
  }
  try {
    const voi::ResultTable table = voi::run(config);
    std::printf("%-20s %-7s %12s %12s %10s %9s\n", "study", "method", "evsi", "evsi_im",
                "std_error", "seconds");
    for (const auto& r : table.rows) {
      if (r.method == "mm_by_n") continue;
      std::printf("%-20s %-7s %12.1f %12.1f %10.1f %9.2f\n", r.study.c_str(), r.method.c_str(),
                  r.evsi, r.evsi_im, r.std_error, r.seconds);
    }
    std::printf("results written to %s\n",
                (std::filesystem::path(config.output_dir) / "results.csv").string().c_str());
  } catch (const voi::ConfigError& e) {
    return report_config_error(e);
  } catch (const std::exception& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimationError;
  }
  return 0;
}

int cmd_trend(const std::string& path, std::size_t study) {
  voi::RunConfig config;
  try {
    config = voi::parse_config(path);
    if (study < 1 || study > config.studies.size())
      throw voi::ConfigError("study", "must be between 1 and " +
                                          std::to_string(config.studies.size()));
  } catch (const voi::ConfigError& e) {
    return report_config_error(e);
  }
  try {
    std::filesystem::create_directories(config.output_dir);
    const voi::PsaSample psa = voi::run_psa(config);
    const voi::MmResult mm = voi::run_mm_study(config, psa, study);
    voi::write_trend_files(config, study, mm);
    std::printf("A=%.6g B=%.6g v=%.6g sigma=%.4g\n", mm.fit.A, mm.fit.B, mm.fit.v, mm.fit.sigma);
    std::printf("wrote trend_study%zu.csv and inb_density_study%zu.csv in %s\n", study, study,
                config.output_dir.c_str());
  } catch (const std::exception& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimationError;
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  try {
    const voi::RunConfig config = voi::parse_config(path);
    std::printf("ok: %zu studies, method=%s, config_hash=%s\n", config.studies.size(),
                voi::to_string(config.method), voi::config_hash(config).c_str());
  } catch (const voi::ConfigError& e) {
    return report_config_error(e);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implementation-adjusted expected value of sample information"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t study = 1;

  auto* run = app.add_subcommand("run", "estimate EVSI for every configured study");
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--method", method, "nmc, mm or both")
      ->check(CLI::IsMember({"nmc", "mm", "both"}));
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--out", out, "override the output directory");

  auto* trend = app.add_subcommand("trend", "write the fitted probability curve for one study");
  trend->add_option("--config", config_path, "JSON config")->required();
  trend->add_option("--study", study, "study number (1-based)")->required();

  auto* validate = app.add_subcommand("validate", "check a config and print its hash");
  validate->add_option("--config", config_path, "JSON config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  if (*run) return cmd_run(config_path, method, seed, out);
  if (*trend) return cmd_trend(config_path, study);
  return cmd_validate(config_path);
}
