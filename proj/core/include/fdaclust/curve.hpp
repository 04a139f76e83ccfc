#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace fdaclust {

/// Clinician grade merge: 4 folds into 3 and 5 into 6, the rest are fixed.
int adjust_hb(int raw);

struct HBGrade {
  int raw;       // clinician grade in 1..6
  int adjusted;  // merged ladder {1, 2, 3, 6}

  static HBGrade from_raw(int raw);
  bool operator==(const HBGrade&) const = default;
};

/// Discrete observations of one indicator for one measurement. Immutable
/// after construction; construction validates the invariants (strictly
/// increasing times, matching lengths, length >= 2, finite values).
class SampledCurve {
 public:
  SampledCurve(std::string id, std::vector<double> times, std::vector<double> values);

  const std::string& id() const { return id_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return times_.size(); }
  double t_min() const { return times_.front(); }
  double t_max() const { return times_.back(); }

  /// Piecewise-linear interpolation at t; t must lie inside [t_min, t_max].
  double value_at(double t) const;

  /// Affine time rescale onto [0, 1].
  SampledCurve rescaled_to_unit() const;

 private:
  std::string id_;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Piecewise-linear resampling onto an arbitrary grid inside the curve's
/// time domain. Output times equal the grid.
SampledCurve resample(const SampledCurve& curve, const std::vector<double>& grid);

/// size equally spaced points spanning [0, 1].
std::vector<double> make_grid(int size);

/// A batch of curves sharing one evaluation grid. Construction rescales
/// every curve's time axis onto [0, 1]; exercises are recorded at
/// heterogeneous speeds and durations, so absolute time carries no
/// cross-measurement meaning.
class Cohort {
 public:
  static constexpr int kDefaultGridSize = 101;

  Cohort(std::vector<SampledCurve> curves,
         std::optional<std::vector<HBGrade>> labels = std::nullopt,
         int grid_size = kDefaultGridSize);

  const std::vector<SampledCurve>& curves() const { return curves_; }
  const std::optional<std::vector<HBGrade>>& labels() const { return labels_; }
  const std::vector<double>& grid() const { return grid_; }
  std::size_t size() const { return curves_.size(); }

  /// n x G matrix of every curve resampled onto the shared grid.
  Eigen::MatrixXd values_on_grid() const;

  std::vector<std::string> ids() const;

 private:
  std::vector<SampledCurve> curves_;
  std::optional<std::vector<HBGrade>> labels_;
  std::vector<double> grid_;
};

// Long-format CSV with header id,time,value; rows grouped per curve in
// cohort order. Labels travel in a separate CSV with header id,hb_raw.
std::string cohort_to_csv(const Cohort& cohort);
Cohort cohort_from_csv(const std::string& text, int grid_size = Cohort::kDefaultGridSize);
std::string labels_to_csv(const Cohort& cohort);

/// Attach labels parsed from labels CSV text; every cohort id must appear.
Cohort with_labels_from_csv(const Cohort& cohort, const std::string& labels_text);

}  // namespace fdaclust
