#include "fdaclust/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fdaclust/error.hpp"
#include "fdaclust/rng.hpp"

namespace fdaclust {

namespace {

double bump(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

CohortSpec CohortSpec::default_spec() {
  CohortSpec spec;
  for (std::size_t g = 0; g < 4; ++g) {
    constexpr int grades[] = {1, 2, 3, 6};
    constexpr double depths[] = {0.05, 0.2, 0.4, 0.7};
    spec.archetypes.push_back({grades[g], depths[g], 0.5, 0.15});
    spec.counts.push_back(30);
  }
  spec.sigma = 0.02;
  return spec;
}

CohortSpec CohortSpec::overlapping_spec() {
  CohortSpec spec;
  for (std::size_t g = 0; g < 4; ++g) {
    constexpr int grades[] = {1, 2, 3, 6};
    constexpr double depths[] = {0.10, 0.22, 0.34, 0.58};
    spec.archetypes.push_back({grades[g], depths[g], 0.5, 0.15});
    spec.counts.push_back(30);
  }
  spec.sigma = 0.03;
  spec.depth_jitter = 0.10;
  spec.center_jitter = 0.04;
  return spec;
}

void validate(const CohortSpec& spec) {
  if (spec.archetypes.empty()) fail(ErrorCategory::config, "cohort spec has no archetypes");
  if (spec.counts.size() != spec.archetypes.size())
    fail(ErrorCategory::config, "cohort spec counts and archetypes disagree");
  for (int c : spec.counts)
    if (c < 1) fail(ErrorCategory::config, "every grade needs at least 1 curve");
  if (spec.sigma < 0.0) fail(ErrorCategory::config, "noise sigma must be nonnegative");
  if (spec.depth_jitter < 0.0 || spec.center_jitter < 0.0)
    fail(ErrorCategory::config, "jitter half-widths must be nonnegative");
  if (spec.grid_size < 2) fail(ErrorCategory::config, "grid size must be at least 2");
  for (std::size_t g = 0; g < spec.archetypes.size(); ++g) {
    const auto& a = spec.archetypes[g];
    if (a.grade < 1 || a.grade > 6) fail(ErrorCategory::config, "grade must lie in 1..6");
    if (!(a.width > 0.0)) fail(ErrorCategory::config, "dip width must be positive");
    if (a.center < 0.0 || a.center > 1.0)
      fail(ErrorCategory::config, "dip center must lie in [0, 1]");
    if (a.depth - spec.depth_jitter < 0.0 || a.depth + spec.depth_jitter >= 1.0)
      fail(ErrorCategory::config, "dip depth with jitter must stay inside [0, 1)");
    if (a.center - spec.center_jitter < 0.0 || a.center + spec.center_jitter > 1.0)
      fail(ErrorCategory::config, "dip center with jitter must stay inside [0, 1]");
    if (g > 0 && !(a.depth > spec.archetypes[g - 1].depth))
      fail(ErrorCategory::config, "dip depths must increase strictly across grades");
  }
}

Cohort generate_cohort(const CohortSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, "cohort"));
  const std::vector<double> grid = make_grid(spec.grid_size);

  std::vector<SampledCurve> curves;
  std::vector<HBGrade> labels;
  for (std::size_t g = 0; g < spec.archetypes.size(); ++g) {
    const auto& a = spec.archetypes[g];
    for (int i = 0; i < spec.counts[g]; ++i) {
      const double depth = a.depth + spec.depth_jitter * (2.0 * rng.uniform01() - 1.0);
      const double center = a.center + spec.center_jitter * (2.0 * rng.uniform01() - 1.0);
      std::vector<double> values(grid.size());
      for (std::size_t j = 0; j < grid.size(); ++j)
        values[j] = 1.0 - depth * bump(grid[j], center, a.width) + spec.sigma * rng.gaussian();
      char id[32];
      std::snprintf(id, sizeof id, "hb%d-%02d", a.grade, i);
      curves.emplace_back(id, grid, std::move(values));
      labels.push_back(HBGrade::from_raw(a.grade));
    }
  }
  return Cohort(std::move(curves), std::move(labels), spec.grid_size);
}

namespace {

constexpr double kRestDistance = 0.25;  // mm between a pair at rest
constexpr double kAmplitude = 40.0;     // mm of full healthy displacement
constexpr int kFrameCount = 31;
constexpr double kDuration = 3.0;  // seconds

Poi3 base_position(int poi) { return {20.0 * poi, 0.0, 0.0}; }

Poi3 offset_y(const Poi3& p, double dy) { return {p[0], p[1] + dy, p[2]}; }

}  // namespace

RawMeasurement generate_measurement(const GradeArchetype& archetype, std::uint64_t seed,
                                    const std::string& id) {
  if (archetype.depth < 0.0 || archetype.depth >= 1.0)
    fail(ErrorCategory::config, "dip depth must lie in [0, 1)");
  if (!(archetype.width > 0.0)) fail(ErrorCategory::config, "dip width must be positive");
  if (!(archetype.center > 0.0 && archetype.center < 1.0))
    fail(ErrorCategory::config, "motion peak must lie strictly inside the recording");
  const double healthy_share = 1.0 - archetype.depth;

  RawMeasurement m;
  m.id = id;
  for (const auto& exercise : exercise_names()) {
    const auto& cfg = default_poi_table().at(exercise);
    Rng rng(derive_seed(seed, "raw-" + exercise));

    ExerciseRecording rec;
    const double dt = kDuration / (kFrameCount - 1);
    for (int f = 0; f < kFrameCount; ++f) {
      double t = f * dt;
      if (f > 0 && f + 1 < kFrameCount) t += 0.2 * dt * (rng.uniform01() - 0.5);
      rec.timestamps.push_back(t);
    }

    // motion profile normalized to 0 at the first frame and 1 at the peak
    const double b0 = bump(0.0, archetype.center, archetype.width);
    const auto motion = [&](double t) {
      return (bump(t / kDuration, archetype.center, archetype.width) - b0) / (1.0 - b0);
    };

    const int shared = cfg.left[0] == cfg.right[0] || cfg.left[0] == cfg.right[1] ? cfg.left[0]
                       : cfg.left[1] == cfg.right[0] || cfg.left[1] == cfg.right[1] ? cfg.left[1]
                                                                                    : -1;
    for (double t : rec.timestamps) {
      const double dl = kRestDistance + kAmplitude * healthy_share * motion(t);
      const double dr = kRestDistance + kAmplitude * motion(t);
      if (dl <= 0.0 || dr <= 0.0)
        fail(ErrorCategory::domain, "archetype drives a side distance through zero");
      Frame frame;
      for (int poi = 0; poi < kPoiCount; ++poi) frame[static_cast<std::size_t>(poi)] = base_position(poi);
      if (shared >= 0) {
        const int left_moving = cfg.left[0] == shared ? cfg.left[1] : cfg.left[0];
        const int right_moving = cfg.right[0] == shared ? cfg.right[1] : cfg.right[0];
        frame[static_cast<std::size_t>(left_moving)] = offset_y(base_position(shared), -dl);
        frame[static_cast<std::size_t>(right_moving)] = offset_y(base_position(shared), dr);
      } else {
        frame[static_cast<std::size_t>(cfg.left[0])] = offset_y(base_position(cfg.left[1]), dl);
        frame[static_cast<std::size_t>(cfg.right[0])] = offset_y(base_position(cfg.right[1]), dr);
      }
      rec.frames.push_back(frame);
    }
    m.exercises.emplace(exercise, std::move(rec));
  }
  return m;
}

std::string generate_raw_measurement(const GradeArchetype& archetype, std::uint64_t seed) {
  return serialize_measurement(generate_measurement(archetype, seed, "synthetic"));
}

std::vector<FunctionalDatum> planted_spectrum_cohort(const std::vector<double>& variances, int n,
                                                     std::uint64_t seed) {
  if (variances.empty()) fail(ErrorCategory::config, "planted spectrum needs at least one mode");
  for (std::size_t j = 0; j < variances.size(); ++j) {
    if (!(variances[j] > 0.0)) fail(ErrorCategory::config, "planted variances must be positive");
    if (j > 0 && variances[j] > variances[j - 1])
      fail(ErrorCategory::config, "planted variances must be non-increasing");
  }
  const auto basis = make_basis(4, equispaced_interior_knots(9));
  const Eigen::Index k = basis->size();
  const auto modes = static_cast<Eigen::Index>(variances.size());
  if (modes > k)
    fail(ErrorCategory::config, "more planted modes than basis dimensions");
  if (n <= static_cast<int>(modes))
    fail(ErrorCategory::config, "need more curves than planted modes");

  // W-orthonormal mode directions via Gram-Schmidt in the basis inner product
  const Eigen::MatrixXd w = basis->gram_matrix();
  Rng dir_rng(derive_seed(seed, "spectrum-modes"));
  Eigen::MatrixXd phi(k, modes);
  for (Eigen::Index j = 0; j < modes; ++j) {
    Eigen::VectorXd g(k);
    for (Eigen::Index r = 0; r < k; ++r) g[r] = dir_rng.gaussian();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index l = 0; l < j; ++l) g -= (phi.col(l).dot(w * g)) * phi.col(l);
    const double norm = std::sqrt(g.dot(w * g));
    if (!(norm > 1e-12)) fail(ErrorCategory::numeric, "mode directions degenerated");
    phi.col(j) = g / norm;
  }

  Rng score_rng(derive_seed(seed, "spectrum-scores"));
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(k, 0.9);
  std::vector<FunctionalDatum> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd coeffs = mean;
    for (Eigen::Index j = 0; j < modes; ++j)
      coeffs += std::sqrt(variances[static_cast<std::size_t>(j)]) * score_rng.gaussian() * phi.col(j);
    char id[32];
    std::snprintf(id, sizeof id, "sim%03d", i);
    out.push_back(FunctionalDatum{id, basis, std::move(coeffs)});
  }
  return out;
}

}  // namespace fdaclust
