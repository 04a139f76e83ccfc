#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdaclust/curve.hpp"

namespace fdaclust {

inline constexpr int kPoiCount = 21;
inline constexpr int kNoseTipPoi = 12;

using Poi3 = std::array<double, 3>;
using Frame = std::array<Poi3, kPoiCount>;

/// Canonical tokens for the nine recorded exercises.
const std::vector<std::string>& exercise_names();

/// POI pairs driving the indicators of one exercise: left/right distances
/// feed the symmetry ratio, primary feeds intensity and speed.
struct ExercisePois {
  std::array<int, 2> left;
  std::array<int, 2> right;
  std::array<int, 2> primary;
};

/// Default exercise -> POI table. Mouth exercises read the mouth corners
/// against the nose tip, brow exercises the inner eyebrows, closing the
/// per-eye apertures, blowing the cheeks.
const std::map<std::string, ExercisePois>& default_poi_table();

struct ExerciseRecording {
  std::vector<double> timestamps;  // seconds, strictly increasing
  std::vector<Frame> frames;       // one 21-POI frame per timestamp
};

/// One Kinect session: per-exercise frame sequences of 21 tracked points.
struct RawMeasurement {
  std::string id;
  std::map<std::string, ExerciseRecording> exercises;

  const ExerciseRecording& exercise(const std::string& name) const;
};

// Raw measurement CSV: header exercise,frame_time,poi,x,y,z, one row per POI
// per frame, 21 consecutive rows per frame.
RawMeasurement parse_measurement(const std::string& text, const std::string& id);
std::string serialize_measurement(const RawMeasurement& m);

/// Per-frame 3D distance between POIs a and b.
SampledCurve distance_curve(const RawMeasurement& m, const std::string& exercise, int a, int b);

/// min(dL, dR) / max(dL, dR) per frame, in (0, 1]; 1 is perfect symmetry.
SampledCurve symmetry_indicator(const RawMeasurement& m, const std::string& exercise,
                                const std::map<std::string, ExercisePois>& table = default_poi_table());

/// Range of motion: d(t) - d(0) of the exercise's primary distance curve.
SampledCurve intensity_indicator(const RawMeasurement& m, const std::string& exercise,
                                 const std::map<std::string, ExercisePois>& table = default_poi_table());

/// Central finite difference of the primary distance curve; one-sided at the
/// endpoints. Needs at least 3 frames.
SampledCurve speed_indicator(const RawMeasurement& m, const std::string& exercise,
                             const std::map<std::string, ExercisePois>& table = default_poi_table());

/// Indicator dispatch by kind name: symmetry | intensity | speed.
SampledCurve indicator_curve(const RawMeasurement& m, const std::string& exercise,
                             const std::string& kind,
                             const std::map<std::string, ExercisePois>& table = default_poi_table());

/// Ordered interior event times of one curve.
struct Landmarks {
  std::vector<double> interior;
};

/// The single interior time of extremal deviation from the curve's initial
/// value. A constant curve carries no landmark.
Landmarks detect_landmarks(const SampledCurve& curve);

struct Interval {
  double lo;
  double hi;
};

/// Monotone time warp w with w(lo) = lo, w(hi) = hi and w(target_k) =
/// source_k; monotonicity-preserving piecewise-cubic Hermite interpolation
/// between the knots, so the warp is invertible.
class WarpFunction {
 public:
  WarpFunction(std::vector<double> target_knots, std::vector<double> source_knots);

  double operator()(double t) const;
  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

 private:
  std::vector<double> x_;  // target times (warp input)
  std::vector<double> y_;  // source times (warp output)
  std::vector<double> slope_;
};

WarpFunction build_warp(const Landmarks& source, const Landmarks& target, Interval domain);

/// Registered curve: value at t equals the input interpolated at w(t).
SampledCurve register_curve(const SampledCurve& curve, const WarpFunction& warp,
                            const std::vector<double>& grid);

/// Landmark-register every cohort curve to the cohort-mean landmark and
/// resample onto the shared grid. Curves without a detectable landmark
/// (constant curves) are resampled unwarped.
Cohort register_cohort(const Cohort& cohort);

}  // namespace fdaclust
