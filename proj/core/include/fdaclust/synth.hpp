#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdaclust/bspline.hpp"
#include "fdaclust/curve.hpp"
#include "fdaclust/ingest.hpp"

namespace fdaclust {

/// Single-dip symmetry archetype for one grade:
/// s(t) = 1 - depth * exp(-(t - center)^2 / (2 width^2)).
struct GradeArchetype {
  int grade = 1;       // clinician grade on the adjusted ladder
  double depth = 0.0;  // symmetry drop at the dip, in [0, 1)
  double center = 0.5;
  double width = 0.15;

  bool operator==(const GradeArchetype&) const = default;
};

/// Ground-truth cohort recipe. Depths must increase strictly with grade
/// position (grade 1 shallowest). The jitter fields perturb each curve's own
/// dip uniformly within +/- the half-width, which lets adjacent grades
/// overlap while distant grades stay separated; zero keeps every curve on
/// its grade archetype.
struct CohortSpec {
  std::vector<GradeArchetype> archetypes;
  std::vector<int> counts;
  double sigma = 0.02;
  double depth_jitter = 0.0;
  double center_jitter = 0.0;
  int grid_size = Cohort::kDefaultGridSize;
  std::uint64_t seed = 0;

  /// 4 grades x 30 curves, depths (0.05, 0.2, 0.4, 0.7), sigma 0.02.
  static CohortSpec default_spec();

  /// Adjacent grades close enough to confuse; the extremes stay clean.
  static CohortSpec overlapping_spec();

  bool operator==(const CohortSpec&) const = default;
};

void validate(const CohortSpec& spec);

/// Labeled cohort of noisy archetype curves, bitwise deterministic per seed.
Cohort generate_cohort(const CohortSpec& spec);

/// A synthetic capture session: 21-POI frame sequences for all nine
/// exercises in which the affected side travels (1 - depth) times the
/// healthy side's displacement. Sides start at a small shared rest distance,
/// so the symmetry indicator starts at 1 and dips to 1 - depth within 0.02.
RawMeasurement generate_measurement(const GradeArchetype& archetype, std::uint64_t seed,
                                    const std::string& id);

/// generate_measurement rendered to raw-measurement CSV text.
std::string generate_raw_measurement(const GradeArchetype& archetype, std::uint64_t seed);

/// Curves mu + sum_j sqrt(v_j) z_ij phi_j on the default basis, with phi_j
/// orthonormal under the basis inner product and z standard normal. The
/// planted variances are the population FPCA spectrum.
std::vector<FunctionalDatum> planted_spectrum_cohort(const std::vector<double>& variances, int n,
                                                     std::uint64_t seed);

}  // namespace fdaclust
