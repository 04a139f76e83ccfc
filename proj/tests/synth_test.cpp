#include "fdaclust/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fdaclust/cluster.hpp"
#include "fdaclust/error.hpp"
#include "fdaclust/eval.hpp"
#include "fdaclust/fpca.hpp"
#include "fdaclust/ingest.hpp"
#include "helpers.hpp"

using namespace fdaclust;
using testutil::fails_with;

namespace {

double route_ccr(const Cohort& cohort, const std::string& route) {
  ClusterParams params;
  const RouteResult result = cluster_pipeline(cohort, route, params);
  const GradeMap map = assign_grades(result.clustering, cohort);
  return ccr(contingency(map, result.clustering, *cohort.labels()));
}

}  // namespace

TEST_CASE("a noiseless flat archetype generates exactly constant curves") {
  CohortSpec spec;
  spec.archetypes = {{1, 0.0, 0.5, 0.15}};
  spec.counts = {5};
  spec.sigma = 0.0;
  const Cohort cohort = generate_cohort(spec);
  REQUIRE(cohort.size() == 5);
  for (const auto& curve : cohort.curves())
    for (double v : curve.values()) CHECK(v == 1.0);
  REQUIRE(cohort.labels().has_value());
  for (const auto& label : *cohort.labels()) CHECK(label.adjusted == 1);
}

TEST_CASE("cohort generation is bitwise deterministic per seed") {
  CohortSpec spec = CohortSpec::default_spec();
  const std::string first = cohort_to_csv(generate_cohort(spec));
  const std::string second = cohort_to_csv(generate_cohort(spec));
  CHECK(first == second);

  spec.seed = 99;
  CHECK(cohort_to_csv(generate_cohort(spec)) != first);
}

TEST_CASE("the default cohort is recovered by every route") {
  const CohortSpec spec = CohortSpec::default_spec();
  REQUIRE(spec.counts == std::vector<int>(4, 30));
  const Cohort cohort = generate_cohort(spec);
  REQUIRE(cohort.size() == 120);

  for (const std::string& route : route_names()) {
    CAPTURE(route);
    ClusterParams params;
    const RouteResult result = cluster_pipeline(cohort, route, params);
    const GradeMap map = assign_grades(result.clustering, cohort);
    const ContingencyTable table = contingency(map, result.clustering, *cohort.labels());
    CHECK(ccr(table) >= 0.95);
    CHECK(approx_ccr(table) >= ccr(table));
  }
}

TEST_CASE("harder noise cannot improve recovery") {
  const std::vector<double> sigmas = {0.02, 0.15, 0.5};
  std::vector<double> mean_ccr;
  for (double sigma : sigmas) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CohortSpec spec = CohortSpec::default_spec();
      spec.sigma = sigma;
      spec.seed = seed;
      total += route_ccr(generate_cohort(spec), "fpc-kmeans");
    }
    mean_ccr.push_back(total / 10.0);
  }
  CHECK(mean_ccr[0] >= mean_ccr[1]);
  CHECK(mean_ccr[1] >= mean_ccr[2]);
  CHECK(mean_ccr[0] > mean_ccr[2]);
}

TEST_CASE("synthetic raw measurements honor the archetype") {
  const GradeArchetype flat{1, 0.0, 0.5, 0.15};
  const GradeArchetype deep{6, 0.5, 0.5, 0.15};

  SUBCASE("zero depth keeps both sides in lockstep") {
    const RawMeasurement raw = parse_measurement(generate_raw_measurement(flat, 3), "m1");
    for (const std::string& exercise : exercise_names()) {
      const SampledCurve curve = symmetry_indicator(raw, exercise);
      for (double v : curve.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("the indicator dips to one minus the depth") {
    const RawMeasurement raw = parse_measurement(generate_raw_measurement(deep, 4), "m2");
    const SampledCurve curve = symmetry_indicator(raw, exercise_names().front());
    const double low = *std::min_element(curve.values().begin(), curve.values().end());
    CHECK(std::abs(low - 0.5) <= 0.02);
  }

  SUBCASE("text round-trips through the parser") {
    const std::string text = generate_raw_measurement(deep, 5);
    CHECK(serialize_measurement(parse_measurement(text, "m3")) == text);
  }

  SUBCASE("a depth so deep a side would reverse is rejected") {
    CHECK(fails_with(ErrorCategory::config, [] {
      generate_raw_measurement({6, 1.0, 0.5, 0.15}, 0);
    }));
  }
}

TEST_CASE("planted spectra surface through FPCA") {
  SUBCASE("one mode carries all the variance") {
    const auto data = planted_spectrum_cohort({2.0}, 80, 11);
    const FpcaModel model = fit_fpca(data);
    CHECK(explained_variance(model)[0] >= 0.99);
  }

  SUBCASE("a six-step ladder is recovered mode for mode") {
    const std::vector<double> planted = {3.0, 2.2, 1.6, 1.2, 1.0, 1.0};
    const auto data = planted_spectrum_cohort(planted, 400, 12);
    const FpcaModel model = fit_fpca(data);
    REQUIRE(model.eigenvalues.size() >= 6);
    for (std::size_t j = 0; j < planted.size(); ++j) {
      CAPTURE(j);
      CHECK(std::abs(model.eigenvalues[static_cast<Eigen::Index>(j)] - planted[j]) <=
            0.15 * planted[j]);
    }
    for (Eigen::Index j = 6; j < model.eigenvalues.size(); ++j)
      CHECK(model.eigenvalues[j] <= 1e-10);
    CHECK(choose_q(model, 0.95) == 6);
  }

  SUBCASE("invalid spectra are rejected") {
    CHECK(fails_with(ErrorCategory::config, [] { planted_spectrum_cohort({}, 10, 0); }));
    CHECK(fails_with(ErrorCategory::config,
                     [] { planted_spectrum_cohort({1.0, 2.0}, 10, 0); }));
    CHECK(fails_with(ErrorCategory::config,
                     [] { planted_spectrum_cohort({1.0, -0.5}, 10, 0); }));
    CHECK(fails_with(ErrorCategory::config, [] {
      planted_spectrum_cohort(std::vector<double>(14, 1.0), 20, 0);
    }));
    CHECK(fails_with(ErrorCategory::config, [] { planted_spectrum_cohort({1.0}, 1, 0); }));
  }
}

TEST_CASE("cohort specs validate their recipe") {
  const CohortSpec good = CohortSpec::default_spec();
  CHECK_NOTHROW(validate(good));
  CHECK(good == CohortSpec::default_spec());

  auto broken = [&](auto&& mutate) {
    CohortSpec spec = CohortSpec::default_spec();
    mutate(spec);
    return fails_with(ErrorCategory::config, [&] { validate(spec); });
  };

  CHECK(broken([](CohortSpec& s) { s.archetypes.clear(); }));
  CHECK(broken([](CohortSpec& s) { s.counts.pop_back(); }));
  CHECK(broken([](CohortSpec& s) { s.counts[0] = 0; }));
  CHECK(broken([](CohortSpec& s) { s.sigma = -0.1; }));
  CHECK(broken([](CohortSpec& s) { s.depth_jitter = -0.01; }));
  CHECK(broken([](CohortSpec& s) { s.grid_size = 1; }));
  CHECK(broken([](CohortSpec& s) { s.archetypes[0].grade = 7; }));
  CHECK(broken([](CohortSpec& s) { s.archetypes[0].width = 0.0; }));
  CHECK(broken([](CohortSpec& s) { s.archetypes[0].center = 1.5; }));
  CHECK(broken([](CohortSpec& s) {
    s.archetypes[3].depth = 0.95;
    s.depth_jitter = 0.1;
  }));
  CHECK(broken([](CohortSpec& s) {
    std::swap(s.archetypes[0].depth, s.archetypes[1].depth);
  }));
  CHECK(broken([](CohortSpec& s) {
    s.archetypes[0].center = 0.02;
    s.center_jitter = 0.05;
  }));

  SUBCASE("the overlapping spec blurs neighbors but stays valid") {
    const CohortSpec overlap = CohortSpec::overlapping_spec();
    CHECK_NOTHROW(validate(overlap));
    CHECK(overlap.depth_jitter > 0.0);
  }
}
