#include "fdaclust/config.hpp"

#include <string>
#include <vector>

#include "doctest.h"
#include "fdaclust/error.hpp"
#include "helpers.hpp"

using namespace fdaclust;
using testutil::fails_with;

namespace {

bool config_rejects(const std::string& text) {
  return fails_with(ErrorCategory::config, [&] { parse_config(text); });
}

}  // namespace

TEST_CASE("the TOML reader covers the config surface") {
  const TomlTable table = TomlTable::parse(R"(# top comment
title = "fdaclust"   # trailing comment
[pipeline]
k = 4
q_threshold = 0.95
registration = true
seed = 42
[synth]
depths = [0.05, 0.2, 0.4, 0.7]
counts = [30, 30, 30, 30]
)");

  CHECK(table.has("title"));
  CHECK(table.get_string("title") == "fdaclust");
  CHECK(table.get_int("pipeline.k") == 4);
  CHECK(table.get_number("pipeline.q_threshold") == 0.95);
  CHECK(table.get_bool("pipeline.registration"));
  CHECK(table.get_uint("pipeline.seed") == 42);
  CHECK(table.get_array("synth.depths") == std::vector<double>{0.05, 0.2, 0.4, 0.7});
  CHECK(table.get_int_array("synth.counts") == std::vector<int>{30, 30, 30, 30});
  CHECK(!table.has("pipeline.route"));
  CHECK(table.keys().size() == 7);

  SUBCASE("missing keys and type mismatches are config errors") {
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_int("pipeline.route"); }));
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_int("title"); }));
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_string("pipeline.k"); }));
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_bool("pipeline.k"); }));
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_array("pipeline.k"); }));
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_int("pipeline.q_threshold"); }));
    CHECK(fails_with(ErrorCategory::config, [&] { table.get_uint("title"); }));
  }

  SUBCASE("non-integral array entries cannot load as integers") {
    CHECK(fails_with(ErrorCategory::config,
                     [&] { table.get_int_array("synth.depths"); }));
  }

  SUBCASE("malformed text is a parse error") {
    CHECK(fails_with(ErrorCategory::parse, [] { TomlTable::parse("[unclosed\nk = 1\n"); }));
    CHECK(fails_with(ErrorCategory::parse, [] { TomlTable::parse("just words\n"); }));
    CHECK(fails_with(ErrorCategory::parse, [] { TomlTable::parse("k =\n"); }));
    CHECK(fails_with(ErrorCategory::parse, [] { TomlTable::parse("s = \"open\n"); }));
    CHECK(fails_with(ErrorCategory::parse, [] { TomlTable::parse("a = [1, 2\n"); }));
    CHECK(fails_with(ErrorCategory::parse, [] { TomlTable::parse("k = 1\nk = 2\n"); }));
  }
}

TEST_CASE("the annotated default config parses back to the defaults") {
  const PipelineConfig parsed = parse_config(default_config_toml());
  CHECK(parsed == default_config());
  CHECK(parse_config("") == default_config());

  SUBCASE("defaults mirror the reference analysis") {
    const PipelineConfig cfg = default_config();
    CHECK(cfg.indicator == "symmetry");
    CHECK(cfg.exercise == "smiling");
    CHECK(cfg.registration);
    CHECK(cfg.route == "fpc-kmeans");
    CHECK(cfg.k == 4);
    CHECK(cfg.q_threshold == 0.95);
    CHECK(cfg.order == 4);
    CHECK(cfg.interior_knots == 9);
    CHECK(cfg.fuzzifier == 2.0);
    CHECK(cfg.linkage == Linkage::ward);
    CHECK(cfg.covariance == CovarianceModel::bic_best);
    CHECK(!cfg.window.has_value());
    CHECK(!cfg.q_override.has_value());
    CHECK(cfg.synth.seed == cfg.seed);
    CHECK(cfg.synth.grid_size == cfg.grid_size);
  }

  SUBCASE("the configured basis matches the defaults") {
    const auto basis = default_config().make_configured_basis();
    CHECK(basis->size() == 13);
  }
}

TEST_CASE("config overrides land in the right fields") {
  const PipelineConfig cfg = parse_config(R"([pipeline]
indicator = "speed"
exercise = "blowing"
route = "ts-dtw"
seed = 7
[basis]
order = 5
interior_knots = 6
smoothing_lambda = 0.5
[cluster]
m = 1.8
linkage = "average"
covariance = "full"
window = 10
[synth]
grades = [1, 3, 6]
depths = [0.1, 0.3, 0.6]
centers = [0.4, 0.5, 0.6]
widths = [0.1, 0.15, 0.2]
counts = [5, 6, 7]
sigma = 0.05
depth_jitter = 0.02
)");

  CHECK(cfg.indicator == "speed");
  CHECK(cfg.exercise == "blowing");
  CHECK(cfg.route == "ts-dtw");
  CHECK(cfg.seed == 7);
  CHECK(cfg.order == 5);
  CHECK(cfg.interior_knots == 6);
  CHECK(cfg.smoothing_lambda == 0.5);
  CHECK(cfg.fuzzifier == 1.8);
  CHECK(cfg.linkage == Linkage::average);
  CHECK(cfg.covariance == CovarianceModel::full);
  CHECK(cfg.window == 10);
  REQUIRE(cfg.synth.archetypes.size() == 3);
  CHECK(cfg.synth.archetypes[1].grade == 3);
  CHECK(cfg.synth.archetypes[1].depth == 0.3);
  CHECK(cfg.synth.archetypes[2].center == 0.6);
  CHECK(cfg.synth.archetypes[0].width == 0.1);
  CHECK(cfg.synth.counts == std::vector<int>{5, 6, 7});
  CHECK(cfg.synth.sigma == 0.05);
  CHECK(cfg.synth.depth_jitter == 0.02);
  CHECK(cfg.synth.seed == 7);

  SUBCASE("cluster_params carries the knobs downstream") {
    const ClusterParams params = cfg.cluster_params();
    CHECK(params.k == cfg.k);
    CHECK(params.seed == cfg.seed);
    CHECK(params.fuzzifier == cfg.fuzzifier);
    CHECK(params.window == cfg.window);
    CHECK(params.linkage == cfg.linkage);
    CHECK(params.covariance == cfg.covariance);
    CHECK(params.smoothing_lambda == cfg.smoothing_lambda);
    REQUIRE(params.basis != nullptr);
    CHECK(params.basis->size() == 11);
  }
}

TEST_CASE("contradictory or out-of-range settings are rejected") {
  CHECK(config_rejects("[pipeline]\nnope = 1\n"));
  CHECK(config_rejects("[pipeline]\nindicator = \"velocity\"\n"));
  CHECK(config_rejects("[pipeline]\nexercise = \"sneezing\"\n"));
  CHECK(config_rejects("[pipeline]\nlandmarks = 2\n"));
  CHECK(config_rejects("[pipeline]\nroute = \"fpc-dbscan\"\n"));
  CHECK(config_rejects("[pipeline]\nk = 0\n"));
  CHECK(config_rejects("[pipeline]\nq_threshold = 0.0\n"));
  CHECK(config_rejects("[pipeline]\nq_threshold = 1.5\n"));
  CHECK(config_rejects("[pipeline]\ngrid_size = 1\n"));
  CHECK(config_rejects("[pipeline]\nseed = -1\n"));
  CHECK(config_rejects("[basis]\norder = 1\n"));
  CHECK(config_rejects("[basis]\ninterior_knots = -1\n"));
  CHECK(config_rejects("[basis]\nsmoothing_lambda = -0.5\n"));
  CHECK(config_rejects("[cluster]\nm = 1.0\n"));
  CHECK(config_rejects("[cluster]\nrestarts = 0\n"));
  CHECK(config_rejects("[cluster]\nmax_iter = 0\n"));
  CHECK(config_rejects("[cluster]\nlinkage = \"median\"\n"));
  CHECK(config_rejects("[cluster]\ncovariance = \"spherical\"\n"));
  CHECK(config_rejects("[cluster]\nwindow = 5\n"));
  CHECK(config_rejects("[cluster]\nq = 3\n[pipeline]\nroute = \"ts-dtw\"\n"));
  CHECK(config_rejects("[cluster]\nq = 0\n[pipeline]\nroute = \"fpc-gmm\"\n"));
  CHECK(config_rejects("[synth]\ndepths = [0.1, 0.2]\n"));
  CHECK(config_rejects("[synth]\nsigma = -0.01\n"));

  SUBCASE("a window is accepted on the dtw route, forced q on fpc routes") {
    const PipelineConfig dtw =
        parse_config("[pipeline]\nroute = \"ts-dtw\"\n[cluster]\nwindow = 5\n");
    CHECK(dtw.window == 5);
    const PipelineConfig forced =
        parse_config("[pipeline]\nroute = \"fpc-gmm\"\n[cluster]\nq = 3\n");
    CHECK(forced.q_override == 3);
  }
}
