#include "voi/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "voi/error.hpp"
#include "voi/rng.hpp"

namespace voi {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error("failed while writing '" + path.string() + "'");
}

const StudyConfig& study_at(const RunConfig& config, std::size_t study_index) {
  if (study_index < 1 || study_index > config.studies.size())
    throw ConfigError("studies", "no study number " + std::to_string(study_index));
  return config.studies[study_index - 1];
}

MmSettings mm_settings(const RunConfig& config) {
  MmSettings s;
  s.Q = config.Q;
  s.R = config.R;
  s.mcmc = config.mcmc;
  s.threads = config.threads;
  return s;
}

std::filesystem::path study_file(const RunConfig& config, const char* stem, std::size_t k) {
  return std::filesystem::path(config.output_dir) / (stem + std::to_string(k) + ".csv");
}

void write_scatter(const RunConfig& config, std::size_t k, const NmcStudyRun& nmc) {
  const auto path = study_file(config, "nmc_scatter_study", k);
  auto out = open_output(path);
  const std::size_t t = config.market.target;
  out << provenance_header(config) << '\n' << "inb,p\n";
  for (const auto& s : nmc.summaries)
    out << fmt(s.mu[t] - s.mu[1 - t]) << ',' << fmt(s.p[t]) << '\n';
  check_written(out, path);
}

void write_by_n(const RunConfig& config, std::size_t k, const MmSizeResult& r) {
  const auto path = study_file(config, "by_n_study", k);
  auto out = open_output(path);
  out << provenance_header(config) << '\n' << "n,evsi,evsi_im,std_error\n";
  for (std::size_t i = 0; i < r.n_grid.size(); ++i)
    out << r.n_grid[i] << ',' << fmt(r.standard[i].value) << ',' << fmt(r.estimates[i].value)
        << ',' << fmt(r.estimates[i].std_error) << '\n';
  check_written(out, path);
}

}  // namespace

const ResultRow* ResultTable::find(std::size_t study_index, const std::string& method) const {
  for (const auto& r : rows)
    if (r.study_index == study_index && r.method == method) return &r;
  return nullptr;
}

std::uint64_t study_seed(const RunConfig& config, std::size_t study_index) {
  return rng::derive_seed(config.seed, rng::Stream::Study, study_index);
}

std::uint64_t psa_seed(const RunConfig& config) {
  return rng::derive_seed(config.seed, rng::Stream::Psa, 0);
}

PsaSample run_psa(const RunConfig& config) {
  const auto model = DecisionModel::case_study(config.fixed);
  return sample_prior(config.prior, model, config.psa_size, psa_seed(config), config.threads);
}

NmcStudyRun run_nmc_study(const RunConfig& config, std::size_t study_index) {
  const StudyConfig& study = study_at(config, study_index);
  const auto model = DecisionModel::case_study(config.fixed);
  const auto start = Clock::now();
  NmcStudyRun run;
  run.summaries = nmc_summaries(study.design, config.prior, model, config.S, config.R,
                                rng::derive_seed(study_seed(config, study_index),
                                                 rng::Stream::Outer, 0),
                                config.mcmc, config.threads);
  run.evsi = nmc_evsi(run.summaries);
  run.evsi_im = nmc_evsi_im(run.summaries, config.market, config.current_shares);
  const double elapsed =
      config.record_timing ? std::chrono::duration<double>(Clock::now() - start).count() : 0.0;
  for (EvsiEstimate* e : {&run.evsi, &run.evsi_im}) {
    e->R = config.R;
    e->wall_time = elapsed;
  }
  return run;
}

MmResult run_mm_study(const RunConfig& config, const PsaSample& psa, std::size_t study_index) {
  const StudyConfig& study = study_at(config, study_index);
  const auto model = DecisionModel::case_study(config.fixed);
  MmResult r = mm_evsi_im(psa, study.design, config.prior, model, config.market,
                          config.current_shares, mm_settings(config),
                          rng::derive_seed(study_seed(config, study_index),
                                           rng::Stream::QuantileDataset, 0));
  if (!config.record_timing) r.evsi_im.wall_time = r.evsi.wall_time = 0.0;
  return r;
}

std::string provenance_header(const RunConfig& config) {
  return "# config_hash=" + config_hash(config) + " seed=" + std::to_string(config.seed);
}

ResultTable run(const RunConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);
  ResultTable table;
  table.config_hash = config_hash(config);
  table.seed = config.seed;

  const bool want_nmc = config.method != Method::Mm;
  const bool want_mm = config.method != Method::Nmc;
  std::optional<PsaSample> psa;
  if (want_mm) psa = run_psa(config);
  const auto model = DecisionModel::case_study(config.fixed);

  for (std::size_t k = 1; k <= config.studies.size(); ++k) {
    const StudyConfig& study = config.studies[k - 1];
    if (want_nmc) {
      const NmcStudyRun nmc = run_nmc_study(config, k);
      table.rows.push_back({study.name, k, "nmc", study.design.n, nmc.evsi.value,
                            nmc.evsi_im.value, nmc.evsi_im.std_error, nmc.evsi_im.wall_time,
                            config.S, config.R, 0});
      write_scatter(config, k, nmc);
    }
    if (want_mm) {
      const MmResult mm = run_mm_study(config, *psa, k);
      table.rows.push_back({study.name, k, "mm", study.design.n, mm.evsi.value, mm.evsi_im.value,
                            mm.evsi_im.std_error, mm.evsi_im.wall_time, config.psa_size,
                            config.R, config.Q});
      write_trend_files(config, k, mm);

      if (!study.n_grid.empty()) {
        const MmSizeResult by_n = mm_evsi_im_by_n(
            *psa, study.design, config.prior, model, config.market, config.current_shares,
            mm_settings(config), study.effective_size_range(), study.n_grid,
            rng::derive_seed(study_seed(config, k), rng::Stream::QuantileDataset, 1));
        for (std::size_t i = 0; i < by_n.n_grid.size(); ++i)
          table.rows.push_back({study.name, k, "mm_by_n", by_n.n_grid[i], by_n.standard[i].value,
                                by_n.estimates[i].value, by_n.estimates[i].std_error,
                                config.record_timing ? by_n.estimates[i].wall_time : 0.0,
                                config.psa_size, config.R, config.Q});
        write_by_n(config, k, by_n);
      }
    }
  }
  write_results_csv(table, std::filesystem::path(config.output_dir) / "results.csv",
                    provenance_header(config));
  return table;
}

void write_results_csv(const ResultTable& table, const std::filesystem::path& path,
                       const std::string& header) {
  auto out = open_output(path);
  out << header << '\n' << "study,method,evsi,evsi_im,std_error,seconds\n";
  for (const auto& r : table.rows) {
    if (r.method == "mm_by_n") continue;  // in by_n_study<k>.csv
    out << r.study << ',' << r.method << ',' << fmt(r.evsi) << ',' << fmt(r.evsi_im) << ','
        << fmt(r.std_error) << ',' << fmt(r.seconds) << '\n';
  }
  check_written(out, path);
}

void emit_trend_curve(const LogisticFit& fit, std::span<const double> inb,
                      const std::filesystem::path& curve_path,
                      const std::filesystem::path& density_path, const std::string& header) {
  if (inb.empty()) throw DomainError("no INB samples for the trend curve");
  const auto [lo_it, hi_it] = std::minmax_element(inb.begin(), inb.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto curve = open_output(curve_path);
  curve << header << '\n' << "inb,p\n";
  const std::size_t last = kTrendGridPoints - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const double x = i == last ? hi : lo + (hi - lo) * static_cast<double>(i) / last;
    curve << fmt(x) << ',' << fmt(fit.predict(x)) << '\n';
  }
  check_written(curve, curve_path);

  auto density = open_output(density_path);
  density << header << '\n' << "inb\n";
  for (double x : inb) density << fmt(x) << '\n';
  check_written(density, density_path);
}

void write_trend_files(const RunConfig& config, std::size_t study_index, const MmResult& mm) {
  emit_trend_curve(mm.fit, mm.inb, study_file(config, "trend_study", study_index),
                   study_file(config, "inb_density_study", study_index),
                   provenance_header(config));
}

}  // namespace voi
