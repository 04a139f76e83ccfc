#include "fdaclust/plot.hpp"

#include <string>
#include <vector>

#include "doctest.h"
#include "fdaclust/eval.hpp"
#include "fdaclust/fpca.hpp"
#include "fdaclust/synth.hpp"
#include "helpers.hpp"

using namespace fdaclust;

namespace {

struct PlotInputs {
  Cohort cohort;
  RouteResult route;
  FpcaModel model;
  ScoreMatrix scores;
};

PlotInputs plot_inputs() {
  CohortSpec spec = CohortSpec::default_spec();
  spec.counts = {6, 6, 6, 6};
  Cohort cohort = generate_cohort(spec);

  ClusterParams params;
  RouteResult route = cluster_pipeline(cohort, "ts-fuzzy", params);

  std::vector<FunctionalDatum> data;
  const auto basis = make_basis(4, equispaced_interior_knots(9));
  for (const auto& curve : cohort.curves()) data.push_back(fit(basis, curve));
  FpcaModel model = fit_fpca(data);
  ScoreMatrix score_matrix = scores(data, model, 2);
  return {std::move(cohort), std::move(route), std::move(model), std::move(score_matrix)};
}

}  // namespace

TEST_CASE("every plot kind renders a well-formed SVG") {
  const PlotInputs in = plot_inputs();

  SUBCASE("spaghetti draws one path per curve") {
    const std::string svg = spaghetti_svg(in.cohort);
    CHECK(testutil::valid_svg(svg, in.cohort.size()));
  }

  SUBCASE("cluster curves add heavy cluster means") {
    const std::string svg = cluster_curves_svg(in.cohort, in.route.clustering);
    CHECK(testutil::valid_svg(svg, in.cohort.size() + 4));
  }

  SUBCASE("membership bars stack to full height") {
    REQUIRE(in.route.fuzzy.has_value());
    const std::string svg = membership_bars_svg(in.route.fuzzy->membership, in.route.ids);
    CHECK(testutil::valid_svg(svg));
    CHECK(testutil::count_substr(svg, "<rect") >=
          static_cast<std::size_t>(in.route.fuzzy->membership.size()));
  }

  SUBCASE("the scree plot marks the threshold") {
    const std::string svg = scree_svg(in.model);
    CHECK(testutil::valid_svg(svg, 2));
  }

  SUBCASE("score scatter works with and without cluster colors") {
    CHECK(testutil::valid_svg(score_scatter_svg(in.scores)));
    CHECK(testutil::valid_svg(score_scatter_svg(in.scores, &in.route.clustering)));
    CHECK(testutil::count_substr(score_scatter_svg(in.scores), "<circle") >=
          static_cast<std::size_t>(in.scores.scores.rows()));
  }
}

TEST_CASE("degenerate inputs still render") {
  SUBCASE("a single-curve cohort") {
    std::vector<SampledCurve> curves;
    curves.push_back(testutil::constant_curve("only", 0.8));
    const Cohort cohort(std::move(curves));
    CHECK(testutil::valid_svg(spaghetti_svg(cohort)));
  }

  SUBCASE("a single-column score matrix") {
    const auto data = planted_spectrum_cohort({2.0}, 12, 3);
    const FpcaModel model = fit_fpca(data);
    const ScoreMatrix one = scores(data, model, 1);
    CHECK(testutil::valid_svg(score_scatter_svg(one)));
    CHECK(testutil::valid_svg(scree_svg(model)));
  }
}
