#include "fdaclust/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fdaclust/error.hpp"
#include "text_util.hpp"

namespace fdaclust {

namespace {

/// Cuts a trailing comment, honoring quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable table;
  std::string section;
  const auto lines = detail::split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    const auto where = [&] { return "config line " + std::to_string(line_no); };
    const std::string_view line = detail::trim(strip_comment(lines[li]));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        fail(ErrorCategory::parse, where() + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(ErrorCategory::parse, where() + ": empty section name");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCategory::parse, where() + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view raw = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCategory::parse, where() + ": empty key");
    if (raw.empty()) fail(ErrorCategory::parse, where() + ": empty value for '" + key + "'");

    Value value;
    value.line = line_no;
    if (raw.front() == '"') {
      const auto close = raw.find('"', 1);
      if (close == std::string_view::npos)
        fail(ErrorCategory::parse, where() + ": unterminated string");
      if (!detail::trim(raw.substr(close + 1)).empty())
        fail(ErrorCategory::parse, where() + ": trailing characters after string");
      value.kind = Value::Kind::string;
      value.str = std::string(raw.substr(1, close - 1));
    } else if (raw == "true" || raw == "false") {
      value.kind = Value::Kind::boolean;
      value.boolean = raw == "true";
    } else if (raw.front() == '[') {
      if (raw.back() != ']') fail(ErrorCategory::parse, where() + ": unterminated array");
      value.kind = Value::Kind::array;
      const std::string_view body = detail::trim(raw.substr(1, raw.size() - 2));
      if (!body.empty())
        for (const auto part : detail::split(body, ','))
          value.array.push_back(detail::parse_double(part, ErrorCategory::parse, where()));
    } else {
      value.kind = Value::Kind::number;
      value.number = detail::parse_double(raw, ErrorCategory::parse, where());
    }

    const std::string full = section.empty() ? key : section + "." + key;
    if (!table.entries_.emplace(full, std::move(value)).second)
      fail(ErrorCategory::parse, where() + ": duplicate key '" + full + "'");
  }
  return table;
}

bool TomlTable::has(const std::string& key) const { return entries_.count(key) > 0; }

std::vector<std::string> TomlTable::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [key, value] : entries_) out.push_back(key);
  return out;
}

const TomlTable::Value& TomlTable::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(ErrorCategory::config, "missing config key '" + key + "'");
  return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != Value::Kind::string)
    fail(ErrorCategory::config, "config key '" + key + "' must be a string");
  return v.str;
}

double TomlTable::get_number(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != Value::Kind::number)
    fail(ErrorCategory::config, "config key '" + key + "' must be a number");
  return v.number;
}

int TomlTable::get_int(const std::string& key) const {
  const double v = get_number(key);
  if (v != std::floor(v) || std::abs(v) > 2147483647.0)
    fail(ErrorCategory::config, "config key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::uint64_t TomlTable::get_uint(const std::string& key) const {
  const double v = get_number(key);
  if (v != std::floor(v) || v < 0.0 || v > 9007199254740992.0)
    fail(ErrorCategory::config, "config key '" + key + "' must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

bool TomlTable::get_bool(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != Value::Kind::boolean)
    fail(ErrorCategory::config, "config key '" + key + "' must be true or false");
  return v.boolean;
}

std::vector<double> TomlTable::get_array(const std::string& key) const {
  const auto& v = at(key);
  if (v.kind != Value::Kind::array)
    fail(ErrorCategory::config, "config key '" + key + "' must be an array");
  return v.array;
}

std::vector<int> TomlTable::get_int_array(const std::string& key) const {
  const auto raw = get_array(key);
  std::vector<int> out;
  out.reserve(raw.size());
  for (double v : raw) {
    if (v != std::floor(v) || std::abs(v) > 2147483647.0)
      fail(ErrorCategory::config, "config key '" + key + "' must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

ClusterParams PipelineConfig::cluster_params() const {
  ClusterParams params;
  params.k = k;
  params.seed = seed;
  params.max_iter = max_iter;
  params.restarts = restarts;
  params.fuzzifier = fuzzifier;
  params.window = window;
  params.linkage = linkage;
  params.covariance = covariance;
  params.q_threshold = q_threshold;
  params.q_override = q_override;
  params.smoothing_lambda = smoothing_lambda;
  params.basis = make_configured_basis();
  return params;
}

std::shared_ptr<const BSplineBasis> PipelineConfig::make_configured_basis() const {
  return make_basis(order, equispaced_interior_knots(interior_knots));
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.synth.grid_size = cfg.grid_size;
  cfg.synth.seed = cfg.seed;
  return cfg;
}

std::string default_config_toml() {
  return R"(# fdaclust pipeline configuration.
# Any key may be removed; absent keys keep their built-in default.

[pipeline]
indicator = "symmetry"   # symmetry | intensity | speed
exercise = "smiling"     # which recorded exercise feeds the indicator
registration = true      # landmark-align curves before smoothing
landmarks = 1            # interior landmarks per curve (only 1 is supported)
route = "fpc-kmeans"     # ts-dtw | ts-fuzzy | basis-coeff | fpc-kmeans | fpc-hier | fpc-pam | fpc-gmm
k = 4                    # clusters, matching the adjusted grade ladder
q_threshold = 0.95       # explained-variance cutoff choosing the score dimension
seed = 42                # master seed; every stage derives its own stream from it
grid_size = 101          # shared evaluation grid on [0, 1]
out_dir = "out"          # where pipeline artifacts land

[basis]
order = 4                # B-spline order (degree + 1)
interior_knots = 9       # equispaced interior knots; basis size = order + knots
smoothing_lambda = 0.0   # roughness penalty weight; 0 = plain least squares

[cluster]
m = 2.0                  # fuzzy c-means fuzzifier
linkage = "ward"         # single | complete | average | ward
covariance = "bic_best"  # diagonal | full | bic_best
restarts = 10            # seeded restarts for k-means and EM
max_iter = 200
# window = 5             # Sakoe-Chiba half-width; only meaningful for ts-dtw
# q = 6                  # force the score dimension instead of q_threshold; fpc routes only

[synth]
grades = [1, 2, 3, 6]
depths = [0.05, 0.2, 0.4, 0.7]  # symmetry drop per grade, strictly increasing
centers = [0.5, 0.5, 0.5, 0.5]
widths = [0.15, 0.15, 0.15, 0.15]
counts = [30, 30, 30, 30]
sigma = 0.02             # pointwise Gaussian noise
depth_jitter = 0.0       # per-curve uniform dip-depth perturbation half-width
center_jitter = 0.0
)";
}

PipelineConfig parse_config(const std::string& text) {
  const TomlTable table = TomlTable::parse(text);

  static const std::set<std::string> known = {
      "pipeline.indicator", "pipeline.exercise", "pipeline.registration", "pipeline.landmarks",
      "pipeline.route", "pipeline.k", "pipeline.q_threshold", "pipeline.seed",
      "pipeline.grid_size", "pipeline.out_dir", "basis.order", "basis.interior_knots",
      "basis.smoothing_lambda", "cluster.m", "cluster.linkage", "cluster.covariance",
      "cluster.restarts", "cluster.max_iter", "cluster.window", "cluster.q", "synth.grades",
      "synth.depths", "synth.centers", "synth.widths", "synth.counts", "synth.sigma",
      "synth.depth_jitter", "synth.center_jitter"};
  for (const auto& key : table.keys())
    if (!known.count(key)) fail(ErrorCategory::config, "unknown config key '" + key + "'");

  PipelineConfig cfg;
  if (table.has("pipeline.indicator")) cfg.indicator = table.get_string("pipeline.indicator");
  if (table.has("pipeline.exercise")) cfg.exercise = table.get_string("pipeline.exercise");
  if (table.has("pipeline.registration")) cfg.registration = table.get_bool("pipeline.registration");
  if (table.has("pipeline.landmarks")) cfg.landmarks = table.get_int("pipeline.landmarks");
  if (table.has("pipeline.route")) cfg.route = table.get_string("pipeline.route");
  if (table.has("pipeline.k")) cfg.k = table.get_int("pipeline.k");
  if (table.has("pipeline.q_threshold")) cfg.q_threshold = table.get_number("pipeline.q_threshold");
  if (table.has("pipeline.seed")) cfg.seed = table.get_uint("pipeline.seed");
  if (table.has("pipeline.grid_size")) cfg.grid_size = table.get_int("pipeline.grid_size");
  if (table.has("pipeline.out_dir")) cfg.out_dir = table.get_string("pipeline.out_dir");
  if (table.has("basis.order")) cfg.order = table.get_int("basis.order");
  if (table.has("basis.interior_knots")) cfg.interior_knots = table.get_int("basis.interior_knots");
  if (table.has("basis.smoothing_lambda"))
    cfg.smoothing_lambda = table.get_number("basis.smoothing_lambda");
  if (table.has("cluster.m")) cfg.fuzzifier = table.get_number("cluster.m");
  if (table.has("cluster.linkage")) cfg.linkage = linkage_from_string(table.get_string("cluster.linkage"));
  if (table.has("cluster.covariance"))
    cfg.covariance = covariance_from_string(table.get_string("cluster.covariance"));
  if (table.has("cluster.restarts")) cfg.restarts = table.get_int("cluster.restarts");
  if (table.has("cluster.max_iter")) cfg.max_iter = table.get_int("cluster.max_iter");
  if (table.has("cluster.window")) cfg.window = table.get_int("cluster.window");
  if (table.has("cluster.q")) cfg.q_override = table.get_int("cluster.q");

  if (table.has("synth.grades")) {
    const auto grades = table.get_int_array("synth.grades");
    cfg.synth.archetypes.resize(grades.size());
    for (std::size_t g = 0; g < grades.size(); ++g) cfg.synth.archetypes[g].grade = grades[g];
    cfg.synth.counts.resize(grades.size(), 30);
  }
  const auto per_grade = [&](const char* key, auto setter) {
    if (!table.has(key)) return;
    const auto values = table.get_array(key);
    if (values.size() != cfg.synth.archetypes.size())
      fail(ErrorCategory::config,
           std::string("config key '") + key + "' must match the number of grades");
    for (std::size_t g = 0; g < values.size(); ++g) setter(cfg.synth.archetypes[g], values[g]);
  };
  per_grade("synth.depths", [](GradeArchetype& a, double v) { a.depth = v; });
  per_grade("synth.centers", [](GradeArchetype& a, double v) { a.center = v; });
  per_grade("synth.widths", [](GradeArchetype& a, double v) { a.width = v; });
  if (table.has("synth.counts")) {
    const auto counts = table.get_int_array("synth.counts");
    if (counts.size() != cfg.synth.archetypes.size())
      fail(ErrorCategory::config, "config key 'synth.counts' must match the number of grades");
    cfg.synth.counts = counts;
  }
  if (table.has("synth.sigma")) cfg.synth.sigma = table.get_number("synth.sigma");
  if (table.has("synth.depth_jitter")) cfg.synth.depth_jitter = table.get_number("synth.depth_jitter");
  if (table.has("synth.center_jitter"))
    cfg.synth.center_jitter = table.get_number("synth.center_jitter");
  cfg.synth.grid_size = cfg.grid_size;
  cfg.synth.seed = cfg.seed;

  if (cfg.indicator != "symmetry" && cfg.indicator != "intensity" && cfg.indicator != "speed")
    fail(ErrorCategory::config, "indicator must be symmetry, intensity, or speed");
  const auto& exercises = exercise_names();
  if (std::find(exercises.begin(), exercises.end(), cfg.exercise) == exercises.end())
    fail(ErrorCategory::config, "unknown exercise '" + cfg.exercise + "'");
  if (cfg.landmarks != 1)
    fail(ErrorCategory::config, "only a single interior landmark is supported");
  const auto& routes = route_names();
  if (std::find(routes.begin(), routes.end(), cfg.route) == routes.end())
    fail(ErrorCategory::config, "unknown route '" + cfg.route + "'");
  if (cfg.k < 1) fail(ErrorCategory::config, "k must be at least 1");
  if (!(cfg.q_threshold > 0.0 && cfg.q_threshold <= 1.0))
    fail(ErrorCategory::config, "q_threshold must lie in (0, 1]");
  if (cfg.grid_size < 2) fail(ErrorCategory::config, "grid_size must be at least 2");
  if (cfg.order < 2) fail(ErrorCategory::config, "basis order must be at least 2");
  if (cfg.interior_knots < 0) fail(ErrorCategory::config, "interior_knots must be nonnegative");
  if (cfg.smoothing_lambda < 0.0)
    fail(ErrorCategory::config, "smoothing_lambda must be nonnegative");
  if (!(cfg.fuzzifier > 1.0)) fail(ErrorCategory::config, "fuzzifier m must exceed 1");
  if (cfg.restarts < 1) fail(ErrorCategory::config, "restarts must be at least 1");
  if (cfg.max_iter < 1) fail(ErrorCategory::config, "max_iter must be at least 1");
  if (cfg.window && cfg.route != "ts-dtw")
    fail(ErrorCategory::config, "a DTW window applies only to the ts-dtw route");
  if (cfg.q_override) {
    if (cfg.route.rfind("fpc-", 0) != 0)
      fail(ErrorCategory::config, "forcing q applies only to fpc-* routes");
    if (*cfg.q_override < 1) fail(ErrorCategory::config, "forced q must be at least 1");
  }
  validate(cfg.synth);
  return cfg;
}

}  // namespace fdaclust
