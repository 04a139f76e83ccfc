#include "fdaclust/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "fdaclust/error.hpp"
#include "text_util.hpp"

namespace fdaclust {

namespace {

double poi_distance(const Frame& f, int a, int b) {
  const double dx = f[static_cast<std::size_t>(a)][0] - f[static_cast<std::size_t>(b)][0];
  const double dy = f[static_cast<std::size_t>(a)][1] - f[static_cast<std::size_t>(b)][1];
  const double dz = f[static_cast<std::size_t>(a)][2] - f[static_cast<std::size_t>(b)][2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void check_poi(int p) {
  if (p < 0 || p >= kPoiCount)
    fail(ErrorCategory::domain, "POI index out of range 0..20: " + std::to_string(p));
}

const ExercisePois& poi_config(const std::map<std::string, ExercisePois>& table,
                               const std::string& exercise) {
  auto it = table.find(exercise);
  if (it == table.end()) fail(ErrorCategory::domain, "no POI configuration for exercise '" + exercise + "'");
  return it->second;
}

}  // namespace

const std::vector<std::string>& exercise_names() {
  static const std::vector<std::string> names = {
      "raising", "frowning", "closing",        "smiling",         "baring",
      "pursing", "blowing",  "closing_baring", "raising_pursing",
  };
  return names;
}

const std::map<std::string, ExercisePois>& default_poi_table() {
  static const std::map<std::string, ExercisePois> table = {
      {"raising", {{4, kNoseTipPoi}, {10, kNoseTipPoi}, {4, 10}}},
      {"frowning", {{4, kNoseTipPoi}, {10, kNoseTipPoi}, {4, 10}}},
      {"closing", {{1, 0}, {7, 6}, {1, 0}}},
      {"smiling", {{14, kNoseTipPoi}, {15, kNoseTipPoi}, {14, 15}}},
      {"baring", {{14, kNoseTipPoi}, {15, kNoseTipPoi}, {14, 15}}},
      {"pursing", {{14, kNoseTipPoi}, {15, kNoseTipPoi}, {14, 15}}},
      {"blowing", {{19, kNoseTipPoi}, {20, kNoseTipPoi}, {19, 20}}},
      {"closing_baring", {{14, kNoseTipPoi}, {15, kNoseTipPoi}, {14, 15}}},
      {"raising_pursing", {{4, kNoseTipPoi}, {10, kNoseTipPoi}, {4, 10}}},
  };
  return table;
}

const ExerciseRecording& RawMeasurement::exercise(const std::string& name) const {
  auto it = exercises.find(name);
  if (it == exercises.end())
    fail(ErrorCategory::domain, "measurement '" + id + "' has no exercise '" + name + "'");
  return it->second;
}

RawMeasurement parse_measurement(const std::string& text, const std::string& id) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || detail::trim(lines[0]) != "exercise,frame_time,poi,x,y,z")
    fail(ErrorCategory::schema, "measurement CSV must start with header exercise,frame_time,poi,x,y,z");

  RawMeasurement m;
  m.id = id;
  std::string cur_exercise;
  double cur_time = 0.0;
  int filled = 0;  // POIs seen in the frame under construction
  Frame frame{};

  auto flush_frame = [&](std::size_t line_no) {
    if (filled == 0) return;
    if (filled != kPoiCount)
      fail(ErrorCategory::schema, "frame at t=" + detail::format_double(cur_time) + " in exercise '" +
                                      cur_exercise + "' has " + std::to_string(filled) +
                                      " POIs, expected 21 (line " + std::to_string(line_no) + ")");
    auto& rec = m.exercises[cur_exercise];
    if (!rec.timestamps.empty() && cur_time <= rec.timestamps.back())
      fail(ErrorCategory::schema, "non-increasing timestamps in exercise '" + cur_exercise + "' at t=" +
                                      detail::format_double(cur_time));
    rec.timestamps.push_back(cur_time);
    rec.frames.push_back(frame);
    filled = 0;
  };

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto cols = detail::split(lines[i], ',');
    const std::string where = "measurement CSV line " + std::to_string(i + 1);
    if (cols.size() != 6) fail(ErrorCategory::parse, where + ": expected 6 columns");
    const std::string exercise(detail::trim(cols[0]));
    const double t = detail::parse_double(cols[1], ErrorCategory::parse, where);
    const long poi = detail::parse_int(cols[2], ErrorCategory::parse, where);
    if (poi < 0 || poi >= kPoiCount) fail(ErrorCategory::schema, where + ": POI index out of range 0..20");
    const double x = detail::parse_double(cols[3], ErrorCategory::parse, where);
    const double y = detail::parse_double(cols[4], ErrorCategory::parse, where);
    const double z = detail::parse_double(cols[5], ErrorCategory::parse, where);

    if (exercise != cur_exercise || t != cur_time) {
      flush_frame(i + 1);
      cur_exercise = exercise;
      cur_time = t;
    }
    if (static_cast<long>(poi) != filled)
      fail(ErrorCategory::schema, where + ": expected POI " + std::to_string(filled) + ", found " +
                                      std::to_string(poi));
    frame[static_cast<std::size_t>(poi)] = {x, y, z};
    ++filled;
  }
  flush_frame(lines.size());

  if (m.exercises.empty()) fail(ErrorCategory::schema, "measurement '" + id + "' contains no frames");
  for (const auto& [name, rec] : m.exercises)
    if (rec.frames.size() < 2)
      fail(ErrorCategory::schema, "exercise '" + name + "' has fewer than 2 frames");
  return m;
}

std::string serialize_measurement(const RawMeasurement& m) {
  std::string out = "exercise,frame_time,poi,x,y,z\n";
  for (const auto& [name, rec] : m.exercises) {
    for (std::size_t f = 0; f < rec.frames.size(); ++f) {
      for (int p = 0; p < kPoiCount; ++p) {
        const auto& poi = rec.frames[f][static_cast<std::size_t>(p)];
        out += name;
        out += ',';
        out += detail::format_double(rec.timestamps[f]);
        out += ',';
        out += std::to_string(p);
        out += ',';
        out += detail::format_double(poi[0]);
        out += ',';
        out += detail::format_double(poi[1]);
        out += ',';
        out += detail::format_double(poi[2]);
        out += '\n';
      }
    }
  }
  return out;
}

SampledCurve distance_curve(const RawMeasurement& m, const std::string& exercise, int a, int b) {
  check_poi(a);
  check_poi(b);
  const auto& rec = m.exercise(exercise);
  std::vector<double> values(rec.frames.size());
  for (std::size_t f = 0; f < rec.frames.size(); ++f) values[f] = poi_distance(rec.frames[f], a, b);
  return SampledCurve(m.id, rec.timestamps, std::move(values));
}

SampledCurve symmetry_indicator(const RawMeasurement& m, const std::string& exercise,
                                const std::map<std::string, ExercisePois>& table) {
  const auto& cfg = poi_config(table, exercise);
  const auto& rec = m.exercise(exercise);
  std::vector<double> values(rec.frames.size());
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    const double dl = poi_distance(rec.frames[f], cfg.left[0], cfg.left[1]);
    const double dr = poi_distance(rec.frames[f], cfg.right[0], cfg.right[1]);
    const double hi = std::max(dl, dr);
    if (hi <= 0.0)
      fail(ErrorCategory::data, "degenerate geometry in exercise '" + exercise + "' frame " +
                                    std::to_string(f) + ": both side distances are zero");
    values[f] = std::min(dl, dr) / hi;
  }
  return SampledCurve(m.id, rec.timestamps, std::move(values));
}

SampledCurve intensity_indicator(const RawMeasurement& m, const std::string& exercise,
                                 const std::map<std::string, ExercisePois>& table) {
  const auto& cfg = poi_config(table, exercise);
  SampledCurve d = distance_curve(m, exercise, cfg.primary[0], cfg.primary[1]);
  std::vector<double> values = d.values();
  const double base = values.front();
  for (double& v : values) v -= base;
  return SampledCurve(m.id, d.times(), std::move(values));
}

SampledCurve speed_indicator(const RawMeasurement& m, const std::string& exercise,
                             const std::map<std::string, ExercisePois>& table) {
  const auto& cfg = poi_config(table, exercise);
  SampledCurve d = distance_curve(m, exercise, cfg.primary[0], cfg.primary[1]);
  const auto n = d.size();
  if (n < 3)
    fail(ErrorCategory::data, "speed indicator needs at least 3 frames in exercise '" + exercise + "'");
  const auto& t = d.times();
  const auto& v = d.values();
  std::vector<double> speed(n);
  speed[0] = (v[1] - v[0]) / (t[1] - t[0]);
  for (std::size_t j = 1; j + 1 < n; ++j) speed[j] = (v[j + 1] - v[j - 1]) / (t[j + 1] - t[j - 1]);
  speed[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
  return SampledCurve(m.id, t, std::move(speed));
}

SampledCurve indicator_curve(const RawMeasurement& m, const std::string& exercise,
                             const std::string& kind, const std::map<std::string, ExercisePois>& table) {
  if (kind == "symmetry") return symmetry_indicator(m, exercise, table);
  if (kind == "intensity") return intensity_indicator(m, exercise, table);
  if (kind == "speed") return speed_indicator(m, exercise, table);
  fail(ErrorCategory::domain, "unknown indicator kind '" + kind + "' (symmetry|intensity|speed)");
}

Landmarks detect_landmarks(const SampledCurve& curve) {
  const auto& t = curve.times();
  const auto& v = curve.values();
  const double base = v.front();
  double best = 0.0;
  std::size_t best_idx = 0;
  // endpoints excluded: landmarks must be strictly interior
  for (std::size_t j = 1; j + 1 < v.size(); ++j) {
    const double dev = std::abs(v[j] - base);
    if (dev > best) {
      best = dev;
      best_idx = j;
    }
  }
  if (best <= 0.0)
    fail(ErrorCategory::data, "curve '" + curve.id() + "' is constant; no landmark to detect");
  return Landmarks{{t[best_idx]}};
}

WarpFunction::WarpFunction(std::vector<double> target_knots, std::vector<double> source_knots)
    : x_(std::move(target_knots)), y_(std::move(source_knots)) {
  if (x_.size() != y_.size() || x_.size() < 2)
    fail(ErrorCategory::domain, "warp needs matching knot sequences with at least the two endpoints");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (x_[i] <= x_[i - 1] || y_[i] <= y_[i - 1])
      fail(ErrorCategory::domain, "warp knots must be strictly increasing on both axes");

  // Fritsch-Carlson slopes: start from three-point estimates, then limit
  // them against the secants so the cubic never decreases.
  const std::size_t n = x_.size();
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double w1 = 2.0 * h[i] + h[i - 1];
    const double w2 = h[i] + 2.0 * h[i - 1];
    slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);  // harmonic mean; deltas are > 0
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double alpha = slope_[i] / delta[i];
    const double beta = slope_[i + 1] / delta[i];
    const double r = alpha * alpha + beta * beta;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      slope_[i] = tau * alpha * delta[i];
      slope_[i + 1] = tau * beta * delta[i];
    }
  }
}

double WarpFunction::operator()(double t) const {
  if (t < lo() || t > hi()) fail(ErrorCategory::domain, "warp evaluated outside its domain");
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  if (i + 1 >= x_.size()) i = x_.size() - 2;
  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

WarpFunction build_warp(const Landmarks& source, const Landmarks& target, Interval domain) {
  if (source.interior.size() != target.interior.size())
    fail(ErrorCategory::domain, "source and target landmark counts differ");
  if (!(domain.lo < domain.hi)) fail(ErrorCategory::domain, "warp domain is empty");
  for (double t : source.interior)
    if (t <= domain.lo || t >= domain.hi) fail(ErrorCategory::domain, "source landmark outside open domain");
  for (double t : target.interior)
    if (t <= domain.lo || t >= domain.hi) fail(ErrorCategory::domain, "target landmark outside open domain");

  std::vector<double> x{domain.lo};
  x.insert(x.end(), target.interior.begin(), target.interior.end());
  x.push_back(domain.hi);
  std::vector<double> y{domain.lo};
  y.insert(y.end(), source.interior.begin(), source.interior.end());
  y.push_back(domain.hi);
  return WarpFunction(std::move(x), std::move(y));
}

SampledCurve register_curve(const SampledCurve& curve, const WarpFunction& warp,
                            const std::vector<double>& grid) {
  constexpr double kTol = 1e-9;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double s = warp(grid[i]);
    if (s < curve.t_min() - kTol || s > curve.t_max() + kTol)
      fail(ErrorCategory::domain, "warp maps " + detail::format_double(grid[i]) +
                                      " outside the curve domain");
    s = std::clamp(s, curve.t_min(), curve.t_max());
    values[i] = curve.value_at(s);
  }
  return SampledCurve(curve.id(), grid, std::move(values));
}

Cohort register_cohort(const Cohort& cohort) {
  std::vector<std::optional<double>> peaks(cohort.size());
  double sum = 0.0;
  int found = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    try {
      peaks[i] = detect_landmarks(cohort.curves()[i]).interior[0];
      sum += *peaks[i];
      ++found;
    } catch (const Error&) {
      peaks[i].reset();  // constant curve: leave unwarped
    }
  }
  const auto& grid = cohort.grid();
  std::vector<SampledCurve> registered;
  registered.reserve(cohort.size());
  if (found == 0) {
    for (const auto& c : cohort.curves()) registered.push_back(resample(c, grid));
  } else {
    const Landmarks target{{sum / found}};
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      const auto& c = cohort.curves()[i];
      if (!peaks[i]) {
        registered.push_back(resample(c, grid));
        continue;
      }
      const WarpFunction w = build_warp(Landmarks{{*peaks[i]}}, target, Interval{0.0, 1.0});
      registered.push_back(register_curve(c, w, grid));
    }
  }
  return Cohort(std::move(registered), cohort.labels(), static_cast<int>(grid.size()));
}

}  // namespace fdaclust
