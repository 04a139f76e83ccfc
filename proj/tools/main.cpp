#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fdaclust/error.hpp"

namespace {

int exit_code(fdaclust::ErrorCategory c) {
  switch (c) {
    case fdaclust::ErrorCategory::io: return 2;
    case fdaclust::ErrorCategory::parse: return 3;
    case fdaclust::ErrorCategory::schema: return 4;
    case fdaclust::ErrorCategory::config: return 5;
    case fdaclust::ErrorCategory::domain: return 6;
    case fdaclust::ErrorCategory::numeric: return 7;
    case fdaclust::ErrorCategory::data: return 8;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using fdaclust::cli::GlobalOptions;
  namespace fs = std::filesystem;

  GlobalOptions opts;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;

  CLI::App app{"fdaclust: clusters facial-exercise indicator curves into paresis grades"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", config_path, "config TOML; built-in defaults when omitted")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* out_opt = app.add_option("--out-dir", out_dir, "override the config output directory");
  app.add_flag("--quiet", opts.quiet, "suppress progress output");

  std::function<void()> run;

  auto* init = app.add_subcommand("init", "write the annotated default config");
  std::string init_path;
  bool init_force = false;
  init->add_option("path", init_path, "destination (default fdaclust.toml)");
  init->add_flag("--force", init_force, "overwrite an existing file");
  init->callback([&] { run = [&] { cmd_init(opts, init_path, init_force, std::cout); }; });

  auto* synth = app.add_subcommand(
      "synth", "generate the configured synthetic cohort and capture sessions");
  synth->callback([&] { run = [&] { cmd_synth(opts, std::cout); }; });

  auto* ingest =
      app.add_subcommand("ingest", "extract indicator curves from raw capture sessions");
  std::string ingest_raw, ingest_out;
  ingest->add_option("--raw", ingest_raw, "directory of capture-session CSVs")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest->add_option("--out", ingest_out, "cohort CSV (default <out-dir>/cohort.csv)");
  ingest->callback([&] { run = [&] { cmd_ingest(opts, ingest_raw, ingest_out, std::cout); }; });

  auto* smooth = app.add_subcommand("smooth", "register and fit the B-spline basis");
  std::string smooth_cohort, smooth_out;
  smooth->add_option("--cohort", smooth_cohort, "cohort CSV")->required()->check(CLI::ExistingFile);
  smooth->add_option("--out", smooth_out, "functional data JSON (default <out-dir>/fdata.json)");
  smooth->callback([&] { run = [&] { cmd_smooth(opts, smooth_cohort, smooth_out, std::cout); }; });

  auto* fpca = app.add_subcommand("fpca", "fit functional principal components");
  std::string fpca_data, fpca_model, fpca_scores;
  fpca->add_option("--data", fpca_data, "functional data JSON")
      ->required()
      ->check(CLI::ExistingFile);
  fpca->add_option("--out-model", fpca_model, "model JSON (default <out-dir>/fpca.json)");
  fpca->add_option("--out-scores", fpca_scores, "score CSV (default <out-dir>/scores.csv)");
  fpca->callback(
      [&] { run = [&] { cmd_fpca(opts, fpca_data, fpca_model, fpca_scores, std::cout); }; });

  auto* cluster = app.add_subcommand("cluster", "run the configured clustering route");
  std::string cluster_cohort, cluster_out;
  cluster->add_option("--cohort", cluster_cohort, "cohort CSV")
      ->required()
      ->check(CLI::ExistingFile);
  cluster->add_option("--out", cluster_out, "clustering JSON (default <out-dir>/clustering.json)");
  cluster->callback(
      [&] { run = [&] { cmd_cluster(opts, cluster_cohort, cluster_out, std::cout); }; });

  auto* evaluate = app.add_subcommand("evaluate", "grade a clustering against clinician labels");
  std::string eval_clustering, eval_cohort, eval_labels, eval_out;
  evaluate->add_option("--clustering", eval_clustering, "clustering JSON")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--cohort", eval_cohort, "cohort CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--labels", eval_labels, "labels CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "report JSON (default <out-dir>/report.json)");
  evaluate->callback([&] {
    run = [&] { cmd_evaluate(opts, eval_clustering, eval_cohort, eval_labels, eval_out, std::cout); };
  });

  auto* plot = app.add_subcommand("plot", "render a pipeline artifact as SVG");
  std::string plot_in, plot_out, plot_clusters, plot_cohort;
  plot->add_option("--in", plot_in, "cohort/score/membership CSV or FPCA/clustering JSON")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "SVG path (default <out-dir>/plot.svg)");
  plot->add_option("--clusters", plot_clusters, "clustering JSON for coloring")
      ->check(CLI::ExistingFile);
  plot->add_option("--cohort", plot_cohort, "cohort CSV (needed when --in is a clustering)")
      ->check(CLI::ExistingFile);
  plot->callback([&] {
    run = [&] {
      std::optional<fs::path> clusters, cohort;
      if (!plot_clusters.empty()) clusters = plot_clusters;
      if (!plot_cohort.empty()) cohort = plot_cohort;
      cmd_plot(opts, plot_in, plot_out, clusters, cohort, std::cout);
    };
  });

  auto* pipeline = app.add_subcommand("pipeline", "run every stage into the output directory");
  std::string pipe_raw, pipe_cohort, pipe_labels;
  auto* pipe_raw_opt = pipeline->add_option("--raw", pipe_raw, "directory of capture-session CSVs")
                           ->check(CLI::ExistingDirectory);
  pipeline->add_option("--cohort", pipe_cohort, "cohort CSV (default: synthesize from config)")
      ->excludes(pipe_raw_opt)
      ->check(CLI::ExistingFile);
  pipeline->add_option("--labels", pipe_labels, "labels CSV for evaluation")
      ->check(CLI::ExistingFile);
  pipeline->callback([&] {
    run = [&] {
      std::optional<fs::path> raw, cohort, labels;
      if (!pipe_raw.empty()) raw = pipe_raw;
      if (!pipe_cohort.empty()) cohort = pipe_cohort;
      if (!pipe_labels.empty()) labels = pipe_labels;
      cmd_pipeline(opts, raw, cohort, labels, std::cout);
    };
  });

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) opts.config_path = config_path;
  if (seed_opt->count() > 0) opts.seed = seed;
  if (out_opt->count() > 0) opts.out_dir = out_dir;

  try {
    run();
  } catch (const fdaclust::Error& e) {
    std::cerr << "error [" << fdaclust::to_string(e.category()) << "]: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
