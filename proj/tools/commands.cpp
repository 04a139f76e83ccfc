#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdaclust/bspline.hpp"
#include "fdaclust/cluster.hpp"
#include "fdaclust/error.hpp"
#include "fdaclust/eval.hpp"
#include "fdaclust/fpca.hpp"
#include "fdaclust/ingest.hpp"
#include "fdaclust/io.hpp"
#include "fdaclust/plot.hpp"
#include "fdaclust/rng.hpp"
#include "fdaclust/synth.hpp"

namespace fs = std::filesystem;

namespace fdaclust::cli {

namespace {

void say(const GlobalOptions& opts, std::ostream& log, const std::string& line) {
  if (!opts.quiet) log << line << '\n';
}

fs::path resolve_out(std::filesystem::path given, const PipelineConfig& cfg, const char* name) {
  if (!given.empty()) return given;
  return fs::path(cfg.out_dir) / name;
}

void write_artifact(const GlobalOptions& opts, std::ostream& log, const fs::path& path,
                    const std::string& content) {
  write_text_file(path, content);
  say(opts, log, "wrote " + path.string());
}

int parse_param_int(const std::map<std::string, std::string>& params, const std::string& key) {
  const std::string& text = params.at(key);
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    fail(ErrorCategory::schema, "clustering parameter '" + key + "' is not an integer: " + text);
  return value;
}

Cohort load_cohort(const PipelineConfig& cfg, const fs::path& cohort_file,
                   const std::optional<fs::path>& labels_file) {
  Cohort cohort = cohort_from_csv(read_text_file(cohort_file), cfg.grid_size);
  if (labels_file) cohort = with_labels_from_csv(cohort, read_text_file(*labels_file));
  return cohort;
}

Cohort maybe_register(const PipelineConfig& cfg, const Cohort& cohort) {
  return cfg.registration ? register_cohort(cohort) : cohort;
}

Cohort ingest_dir(const PipelineConfig& cfg, const fs::path& raw_dir) {
  if (!fs::is_directory(raw_dir))
    fail(ErrorCategory::io, "not a directory: " + raw_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(raw_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  if (files.empty())
    fail(ErrorCategory::data, "no .csv capture sessions in " + raw_dir.string());
  std::sort(files.begin(), files.end());

  std::vector<SampledCurve> curves;
  curves.reserve(files.size());
  for (const auto& file : files) {
    RawMeasurement m = parse_measurement(read_text_file(file), file.stem().string());
    curves.push_back(indicator_curve(m, cfg.exercise, cfg.indicator));
  }
  return Cohort(std::move(curves), std::nullopt, cfg.grid_size);
}

std::vector<FunctionalDatum> fit_cohort(const PipelineConfig& cfg, const Cohort& cohort) {
  const auto basis = cfg.make_configured_basis();
  std::vector<FunctionalDatum> data;
  data.reserve(cohort.size());
  for (const auto& curve : cohort.curves())
    data.push_back(fit(basis, curve, cfg.smoothing_lambda));
  return data;
}

/// Feature-space parameters matching a stored clustering: the window and q
/// recorded in the artifact win over the current config.
ClusterParams params_for_artifact(const PipelineConfig& cfg, const Clustering& clustering) {
  ClusterParams params = cfg.cluster_params();
  params.window.reset();
  params.q_override.reset();
  if (clustering.params.count("window")) params.window = parse_param_int(clustering.params, "window");
  if (clustering.params.count("q") && clustering.route.rfind("fpc-", 0) == 0)
    params.q_override = parse_param_int(clustering.params, "q");
  return params;
}

AnalysisReport build_report(const Clustering& clustering, const Cohort& cohort,
                            const DistanceMatrix& dist) {
  if (!cohort.labels())
    fail(ErrorCategory::data, "evaluation needs clinician labels attached to the cohort");
  if (clustering.labels.size() != cohort.size())
    fail(ErrorCategory::schema,
         "clustering covers " + std::to_string(clustering.labels.size()) + " items but cohort has " +
             std::to_string(cohort.size()));
  const GradeMap map = assign_grades(clustering, cohort);
  const ContingencyTable table = contingency(map, clustering, *cohort.labels());
  const SilhouetteResult sil = silhouette(clustering, dist);
  return report(clustering, map, table, sil.mean);
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> membership_from_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::string cell;
  rows.emplace_back();
  for (char ch : text) {
    if (ch == '\n') {
      rows.back().push_back(cell);
      cell.clear();
      rows.emplace_back();
    } else if (ch == ',') {
      rows.back().push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  if (!cell.empty()) rows.back().push_back(cell);
  while (!rows.empty() && (rows.back().empty() || (rows.back().size() == 1 && rows.back()[0].empty())))
    rows.pop_back();
  if (rows.size() < 2 || rows[0].size() < 2 || rows[0][0] != "id")
    fail(ErrorCategory::schema, "membership CSV needs a header id,u1,... and at least one row");

  const std::size_t k = rows[0].size() - 1;
  std::vector<std::string> ids;
  Eigen::MatrixXd membership(static_cast<Eigen::Index>(rows.size() - 1),
                             static_cast<Eigen::Index>(k));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != k + 1)
      fail(ErrorCategory::schema, "membership row " + std::to_string(r) + " has " +
                                      std::to_string(rows[r].size()) + " fields, expected " +
                                      std::to_string(k + 1));
    ids.push_back(rows[r][0]);
    for (std::size_t c = 0; c < k; ++c) {
      const std::string& t = rows[r][c + 1];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc{} || ptr != t.data() + t.size())
        fail(ErrorCategory::parse, "membership value is not a number: " + t);
      membership(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return {std::move(ids), std::move(membership)};
}

std::string first_line(const std::string& text) {
  const auto pos = text.find('\n');
  std::string line = pos == std::string::npos ? text : text.substr(0, pos);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

PipelineConfig GlobalOptions::load() const {
  PipelineConfig cfg =
      config_path ? parse_config(read_text_file(*config_path)) : default_config();
  if (seed) {
    cfg.seed = *seed;
    cfg.synth.seed = *seed;
  }
  if (out_dir) cfg.out_dir = *out_dir;
  return cfg;
}

void cmd_init(const GlobalOptions& opts, const std::filesystem::path& out_file, bool force,
              std::ostream& log) {
  const fs::path path = out_file.empty() ? fs::path("fdaclust.toml") : out_file;
  if (!force && fs::exists(path))
    fail(ErrorCategory::io, path.string() + " exists; pass --force to overwrite");
  write_artifact(opts, log, path, default_config_toml());
}

void cmd_synth(const GlobalOptions& opts, std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const Cohort cohort = generate_cohort(cfg.synth);
  const fs::path root(cfg.out_dir);
  write_artifact(opts, log, root / "cohort.csv", cohort_to_csv(cohort));
  write_artifact(opts, log, root / "labels.csv", labels_to_csv(cohort));
  for (const auto& archetype : cfg.synth.archetypes) {
    const std::string id = "hb" + std::to_string(archetype.grade);
    const std::string text =
        generate_raw_measurement(archetype, derive_seed(cfg.seed, "session-" + id));
    write_artifact(opts, log, root / "raw" / (id + ".csv"), text);
  }
  say(opts, log, "synth: " + std::to_string(cohort.size()) + " curves, " +
                     std::to_string(cfg.synth.archetypes.size()) + " capture sessions");
}

void cmd_ingest(const GlobalOptions& opts, const std::filesystem::path& raw_dir,
                std::filesystem::path out_file, std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const Cohort cohort = ingest_dir(cfg, raw_dir);
  say(opts, log, "ingest: " + std::to_string(cohort.size()) + " sessions, indicator " +
                     cfg.exercise + "." + cfg.indicator);
  write_artifact(opts, log, resolve_out(std::move(out_file), cfg, "cohort.csv"),
                 cohort_to_csv(cohort));
}

void cmd_smooth(const GlobalOptions& opts, const std::filesystem::path& cohort_file,
                std::filesystem::path out_file, std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const Cohort cohort = maybe_register(cfg, load_cohort(cfg, cohort_file, std::nullopt));
  const auto data = fit_cohort(cfg, cohort);
  say(opts, log, "smooth: " + std::to_string(data.size()) + " curves onto " +
                     std::to_string(data.front().basis->size()) + " basis functions" +
                     (cfg.registration ? ", landmark-registered" : ""));
  write_artifact(opts, log, resolve_out(std::move(out_file), cfg, "fdata.json"),
                 functional_data_to_json(data));
}

void cmd_fpca(const GlobalOptions& opts, const std::filesystem::path& data_file,
              std::filesystem::path model_file, std::filesystem::path scores_file,
              std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const auto data = functional_data_from_json(read_text_file(data_file));
  const FpcaModel model = fit_fpca(data);
  const int q = cfg.q_override ? *cfg.q_override : choose_q(model, cfg.q_threshold);
  const ScoreMatrix sm = scores(data, model, q);
  const auto cumulative = explained_variance(model);
  char frac[32];
  std::snprintf(frac, sizeof(frac), "%.4f", cumulative[static_cast<std::size_t>(q) - 1]);
  say(opts, log, "fpca: q = " + std::to_string(q) + " of " + std::to_string(model.q_max) +
                     " components, cumulative variance " + frac);
  write_artifact(opts, log, resolve_out(std::move(model_file), cfg, "fpca.json"),
                 fpca_model_to_json(model));
  write_artifact(opts, log, resolve_out(std::move(scores_file), cfg, "scores.csv"),
                 scores_to_csv(sm));
}

void cmd_cluster(const GlobalOptions& opts, const std::filesystem::path& cohort_file,
                 std::filesystem::path out_file, std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const Cohort cohort = maybe_register(cfg, load_cohort(cfg, cohort_file, std::nullopt));
  const RouteResult result = cluster_pipeline(cohort, cfg.route, cfg.cluster_params());
  std::string sizes;
  for (int s : result.clustering.sizes) sizes += (sizes.empty() ? "" : "/") + std::to_string(s);
  say(opts, log, "cluster: route " + cfg.route + ", k = " + std::to_string(cfg.k) +
                     ", sizes " + sizes);
  const fs::path out = resolve_out(std::move(out_file), cfg, "clustering.json");
  write_artifact(opts, log, out, clustering_to_json(result.clustering));
  if (result.fuzzy) {
    const fs::path mpath = out.parent_path() / "membership.csv";
    write_artifact(opts, log, mpath, membership_to_csv(result.ids, result.fuzzy->membership));
  }
}

void cmd_evaluate(const GlobalOptions& opts, const std::filesystem::path& clustering_file,
                  const std::filesystem::path& cohort_file,
                  const std::filesystem::path& labels_file, std::filesystem::path report_file,
                  std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const Clustering clustering = clustering_from_json(read_text_file(clustering_file));
  const Cohort cohort = maybe_register(cfg, load_cohort(cfg, cohort_file, labels_file));
  const RouteFeatures rf =
      route_features(cohort, clustering.route, params_for_artifact(cfg, clustering));
  const AnalysisReport rep = build_report(clustering, cohort, rf.distances);
  if (!opts.quiet) log << report_table_text({rep});
  const fs::path out = resolve_out(std::move(report_file), cfg, "report.json");
  write_artifact(opts, log, out, report_to_json(rep));
  write_artifact(opts, log, out.parent_path() / "contingency.csv", contingency_to_csv(rep.table));
}

void cmd_plot(const GlobalOptions& opts, const std::filesystem::path& artifact_file,
              std::filesystem::path out_file,
              const std::optional<std::filesystem::path>& clusters_file,
              const std::optional<std::filesystem::path>& cohort_file, std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  const std::string text = read_text_file(artifact_file);

  std::optional<Clustering> clustering;
  if (clusters_file) clustering = clustering_from_json(read_text_file(*clusters_file));

  std::string svg;
  const auto body_start = text.find_first_not_of(" \t\r\n");
  if (body_start != std::string::npos && text[body_start] == '{') {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded())
      fail(ErrorCategory::parse, "artifact is not valid JSON: " + artifact_file.string());
    if (j.contains("eigenvalues")) {
      svg = scree_svg(fpca_model_from_json(text));
    } else if (j.contains("labels")) {
      if (!cohort_file)
        fail(ErrorCategory::config, "plotting a clustering needs --cohort for the curves");
      const Cohort cohort = maybe_register(cfg, load_cohort(cfg, *cohort_file, std::nullopt));
      svg = cluster_curves_svg(cohort, clustering_from_json(text));
    } else {
      fail(ErrorCategory::schema, "unrecognized JSON artifact: " + artifact_file.string());
    }
  } else {
    const std::string header = first_line(text);
    if (header == "id,time,value") {
      if (clustering) {
        const Cohort cohort = maybe_register(cfg, cohort_from_csv(text, cfg.grid_size));
        svg = cluster_curves_svg(cohort, *clustering);
      } else {
        svg = spaghetti_svg(cohort_from_csv(text, cfg.grid_size));
      }
    } else if (header.rfind("id,pc", 0) == 0) {
      const ScoreMatrix sm = scores_from_csv(text);
      svg = score_scatter_svg(sm, clustering ? &*clustering : nullptr);
    } else if (header.rfind("id,u", 0) == 0) {
      auto [ids, membership] = membership_from_csv(text);
      svg = membership_bars_svg(membership, ids);
    } else {
      fail(ErrorCategory::schema,
           "unrecognized artifact header '" + header + "': " + artifact_file.string());
    }
  }
  write_artifact(opts, log, resolve_out(std::move(out_file), cfg, "plot.svg"), svg);
}

void cmd_pipeline(const GlobalOptions& opts, const std::optional<std::filesystem::path>& raw_dir,
                  const std::optional<std::filesystem::path>& cohort_file,
                  const std::optional<std::filesystem::path>& labels_file, std::ostream& log) {
  const PipelineConfig cfg = opts.load();
  if (raw_dir && cohort_file)
    fail(ErrorCategory::config, "pass either a raw capture dir or a cohort CSV, not both");
  const fs::path root(cfg.out_dir);

  Cohort cohort = [&] {
    if (raw_dir) {
      Cohort c = ingest_dir(cfg, *raw_dir);
      if (labels_file) c = with_labels_from_csv(c, read_text_file(*labels_file));
      return c;
    }
    if (cohort_file) return load_cohort(cfg, *cohort_file, labels_file);
    return generate_cohort(cfg.synth);
  }();
  say(opts, log, "cohort: " + std::to_string(cohort.size()) + " curves" +
                     (cohort.labels() ? ", labeled" : ""));
  write_artifact(opts, log, root / "cohort.csv", cohort_to_csv(cohort));
  if (cohort.labels()) write_artifact(opts, log, root / "labels.csv", labels_to_csv(cohort));

  const Cohort reg = maybe_register(cfg, cohort);
  if (cfg.registration)
    write_artifact(opts, log, root / "registered.csv", cohort_to_csv(reg));

  const auto data = fit_cohort(cfg, reg);
  write_artifact(opts, log, root / "fdata.json", functional_data_to_json(data));

  const FpcaModel model = fit_fpca(data);
  const int q = cfg.q_override ? *cfg.q_override : choose_q(model, cfg.q_threshold);
  const ScoreMatrix sm = scores(data, model, q);
  say(opts, log, "fpca: q = " + std::to_string(q) + " of " + std::to_string(model.q_max));
  write_artifact(opts, log, root / "fpca.json", fpca_model_to_json(model));
  write_artifact(opts, log, root / "scores.csv", scores_to_csv(sm));

  const RouteResult result = cluster_pipeline(reg, cfg.route, cfg.cluster_params());
  say(opts, log, "cluster: route " + cfg.route + ", k = " + std::to_string(cfg.k));
  write_artifact(opts, log, root / "clustering.json", clustering_to_json(result.clustering));
  if (result.fuzzy)
    write_artifact(opts, log, root / "membership.csv",
                   membership_to_csv(result.ids, result.fuzzy->membership));

  if (reg.labels()) {
    const AnalysisReport rep = build_report(result.clustering, reg, result.distances);
    if (!opts.quiet) log << report_table_text({rep});
    write_artifact(opts, log, root / "report.json", report_to_json(rep));
    write_artifact(opts, log, root / "contingency.csv", contingency_to_csv(rep.table));
  } else {
    say(opts, log, "no labels; skipping evaluation");
  }

  write_artifact(opts, log, root / "spaghetti.svg", spaghetti_svg(cohort));
  write_artifact(opts, log, root / "clusters.svg", cluster_curves_svg(reg, result.clustering));
  write_artifact(opts, log, root / "scree.svg", scree_svg(model));
  write_artifact(opts, log, root / "scores.svg", score_scatter_svg(sm, &result.clustering));
  if (result.fuzzy)
    write_artifact(opts, log, root / "membership.svg",
                   membership_bars_svg(result.fuzzy->membership, result.ids));
}

}  // namespace fdaclust::cli
