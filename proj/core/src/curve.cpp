#include "fdaclust/curve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fdaclust/error.hpp"
#include "text_util.hpp"

namespace fdaclust {

int adjust_hb(int raw) {
  if (raw < 1 || raw > 6) fail(ErrorCategory::domain, "HB grade out of range 1..6: " + std::to_string(raw));
  switch (raw) {
    case 4: return 3;
    case 5: return 6;
    default: return raw;
  }
}

HBGrade HBGrade::from_raw(int raw) { return HBGrade{raw, adjust_hb(raw)}; }

SampledCurve::SampledCurve(std::string id, std::vector<double> times, std::vector<double> values)
    : id_(std::move(id)), times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size())
    fail(ErrorCategory::data, "curve '" + id_ + "': times and values differ in length");
  if (times_.size() < 2) fail(ErrorCategory::data, "curve '" + id_ + "': needs at least 2 observations");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
      fail(ErrorCategory::data, "curve '" + id_ + "': non-finite observation at index " + std::to_string(i));
    if (i > 0 && times_[i] <= times_[i - 1])
      fail(ErrorCategory::data, "curve '" + id_ + "': times not strictly increasing at index " + std::to_string(i));
  }
}

double SampledCurve::value_at(double t) const {
  if (t < t_min() || t > t_max())
    fail(ErrorCategory::domain, "curve '" + id_ + "': point " + detail::format_double(t) +
                                    " outside domain [" + detail::format_double(t_min()) + ", " +
                                    detail::format_double(t_max()) + "]");
  // index of the segment whose right endpoint is the first time >= t
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return values_.front();
  const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  if (hi == times_.size()) return values_.back();
  if (times_[hi] == t) return values_[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

SampledCurve SampledCurve::rescaled_to_unit() const {
  const double lo = t_min(), span = t_max() - t_min();
  std::vector<double> scaled(times_.size());
  for (std::size_t i = 0; i < times_.size(); ++i) scaled[i] = (times_[i] - lo) / span;
  scaled.front() = 0.0;
  scaled.back() = 1.0;
  return SampledCurve(id_, std::move(scaled), values_);
}

SampledCurve resample(const SampledCurve& curve, const std::vector<double>& grid) {
  if (grid.size() < 2) fail(ErrorCategory::domain, "resample grid needs at least 2 points");
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = curve.value_at(grid[i]);
  return SampledCurve(curve.id(), grid, std::move(values));
}

std::vector<double> make_grid(int size) {
  if (size < 2) fail(ErrorCategory::domain, "grid size must be >= 2");
  std::vector<double> grid(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (size - 1);
  grid.back() = 1.0;
  return grid;
}

Cohort::Cohort(std::vector<SampledCurve> curves, std::optional<std::vector<HBGrade>> labels, int grid_size)
    : labels_(std::move(labels)), grid_(make_grid(grid_size)) {
  if (curves.empty()) fail(ErrorCategory::data, "cohort needs at least one curve");
  if (labels_ && labels_->size() != curves.size())
    fail(ErrorCategory::data, "cohort labels and curves differ in length");
  curves_.reserve(curves.size());
  for (auto& c : curves) curves_.push_back(c.rescaled_to_unit());
}

Eigen::MatrixXd Cohort::values_on_grid() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(curves_.size()), static_cast<Eigen::Index>(grid_.size()));
  for (std::size_t i = 0; i < curves_.size(); ++i) {
    const SampledCurve r = resample(curves_[i], grid_);
    for (std::size_t j = 0; j < grid_.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.values()[j];
  }
  return out;
}

std::vector<std::string> Cohort::ids() const {
  std::vector<std::string> out;
  out.reserve(curves_.size());
  for (const auto& c : curves_) out.push_back(c.id());
  return out;
}

std::string cohort_to_csv(const Cohort& cohort) {
  std::string out = "id,time,value\n";
  for (const auto& c : cohort.curves()) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      out += c.id();
      out += ',';
      out += detail::format_double(c.times()[j]);
      out += ',';
      out += detail::format_double(c.values()[j]);
      out += '\n';
    }
  }
  return out;
}

Cohort cohort_from_csv(const std::string& text, int grid_size) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || detail::trim(lines[0]) != "id,time,value")
    fail(ErrorCategory::schema, "cohort CSV must start with header id,time,value");
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto cols = detail::split(lines[i], ',');
    if (cols.size() != 3)
      fail(ErrorCategory::parse, "cohort CSV line " + std::to_string(i + 1) + ": expected 3 columns");
    const std::string id(detail::trim(cols[0]));
    const std::string where = "cohort CSV line " + std::to_string(i + 1);
    const double t = detail::parse_double(cols[1], ErrorCategory::parse, where);
    const double v = detail::parse_double(cols[2], ErrorCategory::parse, where);
    auto [it, inserted] = series.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.first.push_back(t);
    it->second.second.push_back(v);
  }
  std::vector<SampledCurve> curves;
  curves.reserve(order.size());
  for (const auto& id : order) {
    auto& [t, v] = series[id];
    curves.emplace_back(id, std::move(t), std::move(v));
  }
  return Cohort(std::move(curves), std::nullopt, grid_size);
}

std::string labels_to_csv(const Cohort& cohort) {
  if (!cohort.labels()) fail(ErrorCategory::data, "cohort has no labels to export");
  std::string out = "id,hb_raw\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out += cohort.curves()[i].id();
    out += ',';
    out += std::to_string((*cohort.labels())[i].raw);
    out += '\n';
  }
  return out;
}

Cohort with_labels_from_csv(const Cohort& cohort, const std::string& labels_text) {
  const auto lines = detail::split_lines(labels_text);
  if (lines.empty() || detail::trim(lines[0]) != "id,hb_raw")
    fail(ErrorCategory::schema, "labels CSV must start with header id,hb_raw");
  std::map<std::string, int> raw_by_id;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto cols = detail::split(lines[i], ',');
    if (cols.size() != 2)
      fail(ErrorCategory::parse, "labels CSV line " + std::to_string(i + 1) + ": expected 2 columns");
    raw_by_id[std::string(detail::trim(cols[0]))] =
        static_cast<int>(detail::parse_int(cols[1], ErrorCategory::parse, "labels CSV line " + std::to_string(i + 1)));
  }
  std::vector<HBGrade> labels;
  labels.reserve(cohort.size());
  for (const auto& c : cohort.curves()) {
    auto it = raw_by_id.find(c.id());
    if (it == raw_by_id.end()) fail(ErrorCategory::schema, "labels CSV missing id '" + c.id() + "'");
    labels.push_back(HBGrade::from_raw(it->second));
  }
  return Cohort(cohort.curves(), std::move(labels), static_cast<int>(cohort.grid().size()));
}

}  // namespace fdaclust
