#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fdaclust/config.hpp"

namespace fdaclust::cli {

/// Flags shared by every subcommand. load() reads the config file (built-in
/// defaults when none is given) and applies the overrides; the synthetic
/// cohort seed stays in lockstep with the pipeline seed.
struct GlobalOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool quiet = false;

  PipelineConfig load() const;
};

// Each command is a pure file -> file transform: it loads its inputs, runs
// one pipeline stage, and writes its artifacts. Progress goes to `log`
// unless --quiet; failures throw fdaclust::Error and the frontend maps the
// category to the exit code. Empty output paths default into the out dir.

/// Writes the annotated default config. Refuses to overwrite without force.
void cmd_init(const GlobalOptions& opts, const std::filesystem::path& out_file, bool force,
              std::ostream& log);

/// Generates the configured synthetic cohort: cohort.csv and labels.csv plus
/// one raw capture session per grade archetype under raw/.
void cmd_synth(const GlobalOptions& opts, std::ostream& log);

/// Reads every .csv capture session in raw_dir (sorted by filename, id =
/// stem), extracts the configured indicator curve, writes one cohort CSV.
void cmd_ingest(const GlobalOptions& opts, const std::filesystem::path& raw_dir,
                std::filesystem::path out_file, std::ostream& log);

/// Landmark-registers the cohort (when configured) and fits the configured
/// B-spline basis to every curve; writes functional data JSON.
void cmd_smooth(const GlobalOptions& opts, const std::filesystem::path& cohort_file,
                std::filesystem::path out_file, std::ostream& log);

/// Fits FPCA to functional data; writes the model JSON and the score CSV at
/// the configured explained-variance threshold (or forced q).
void cmd_fpca(const GlobalOptions& opts, const std::filesystem::path& data_file,
              std::filesystem::path model_file, std::filesystem::path scores_file,
              std::ostream& log);

/// Runs the configured route on a cohort CSV; writes clustering JSON and,
/// for the fuzzy route, membership.csv beside it.
void cmd_cluster(const GlobalOptions& opts, const std::filesystem::path& cohort_file,
                 std::filesystem::path out_file, std::ostream& log);

/// Grades a stored clustering against clinician labels; writes report JSON
/// and contingency CSV and prints the metric row.
void cmd_evaluate(const GlobalOptions& opts, const std::filesystem::path& clustering_file,
                  const std::filesystem::path& cohort_file,
                  const std::filesystem::path& labels_file, std::filesystem::path report_file,
                  std::ostream& log);

/// Renders any pipeline artifact to SVG, picking the chart from the artifact
/// kind: cohort CSV -> spaghetti (or per-cluster curves with --clusters),
/// score CSV -> scatter matrix, membership CSV -> stacked bars, FPCA JSON ->
/// scree, clustering JSON + --cohort -> per-cluster curves.
void cmd_plot(const GlobalOptions& opts, const std::filesystem::path& artifact_file,
              std::filesystem::path out_file,
              const std::optional<std::filesystem::path>& clusters_file,
              const std::optional<std::filesystem::path>& cohort_file, std::ostream& log);

/// Runs every stage into the out dir: cohort (from raw dir, cohort CSV, or
/// the synth spec), registration, smoothing, FPCA, clustering, evaluation
/// (when labels exist), and all plots.
void cmd_pipeline(const GlobalOptions& opts, const std::optional<std::filesystem::path>& raw_dir,
                  const std::optional<std::filesystem::path>& cohort_file,
                  const std::optional<std::filesystem::path>& labels_file, std::ostream& log);

}  // namespace fdaclust::cli
