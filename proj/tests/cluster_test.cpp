#include "fdaclust/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fdaclust/error.hpp"
#include "fdaclust/rng.hpp"
#include "fdaclust/synth.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fdaclust;
using testutil::fails_with;

namespace {

Eigen::MatrixXd column_points(const std::vector<double>& xs) {
  Eigen::MatrixXd items(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) items(static_cast<Eigen::Index>(i), 0) = xs[i];
  return items;
}

std::vector<double> random_sequence(Rng& rng, std::size_t max_len) {
  std::vector<double> seq(1 + rng.below(max_len));
  for (double& v : seq) v = rng.gaussian();
  return seq;
}

/// Exact minimum of the k = 2 means objective by enumerating every split.
double best_two_partition_objective(const Eigen::MatrixXd& items) {
  const Eigen::Index n = items.rows();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Eigen::RowVectorXd mean_a = Eigen::RowVectorXd::Zero(items.cols());
    Eigen::RowVectorXd mean_b = Eigen::RowVectorXd::Zero(items.cols());
    int count_a = 0, count_b = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        mean_a += items.row(i);
        ++count_a;
      } else {
        mean_b += items.row(i);
        ++count_b;
      }
    }
    mean_a /= count_a;
    mean_b /= count_b;
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      objective += (items.row(i) - (mask & (1u << i) ? mean_a : mean_b)).squaredNorm();
    best = std::min(best, objective / static_cast<double>(n));
  }
  return best;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> forward, backward;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (forward.count(a[i]) && forward[a[i]] != b[i]) return false;
    if (backward.count(b[i]) && backward[b[i]] != a[i]) return false;
    forward[a[i]] = b[i];
    backward[b[i]] = a[i];
  }
  return true;
}

}  // namespace

TEST_CASE("dtw distance agrees with exhaustive path enumeration") {
  CHECK(dtw_distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);

  const std::vector<double> a = {0.0, 0.0, 1.0, 0.0};
  const std::vector<double> b = {0.0, 1.0, 0.0, 0.0};
  CHECK(dtw_distance(a, b) ==
        doctest::Approx(testutil::dtw_brute_force(a, b)).epsilon(1e-12));

  SUBCASE("random short pairs match the oracle exactly") {
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
      const std::vector<double> x = random_sequence(rng, 5);
      const std::vector<double> y = random_sequence(rng, 5);
      CHECK(std::abs(dtw_distance(x, y) - testutil::dtw_brute_force(x, y)) <= 1e-12);
    }
  }

  SUBCASE("dtw is symmetric") {
    Rng rng(18);
    for (int trial = 0; trial < 40; ++trial) {
      const std::vector<double> x = random_sequence(rng, 12);
      const std::vector<double> y = random_sequence(rng, 12);
      CHECK(dtw_distance(x, y) == dtw_distance(y, x));
    }
  }

  SUBCASE("a wide band reproduces the unconstrained distance") {
    Rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<double> x = random_sequence(rng, 8);
      const std::vector<double> y = random_sequence(rng, 8);
      const int wide = static_cast<int>(std::max(x.size(), y.size()));
      CHECK(dtw_distance(x, y, wide) == doctest::Approx(dtw_distance(x, y)).epsilon(1e-14));
    }
  }

  SUBCASE("degenerate inputs are rejected") {
    CHECK(fails_with(ErrorCategory::domain, [] { dtw_distance({}, {1.0}); }));
    CHECK(fails_with(ErrorCategory::domain, [] { dtw_distance({1.0, 2.0, 3.0}, {1.0}, 1); }));
  }
}

TEST_CASE("distance matrices are symmetric with a zero diagonal") {
  SUBCASE("one item gives the 1x1 zero matrix") {
    const DistanceMatrix d = euclidean_distance_matrix(Eigen::MatrixXd::Random(1, 3));
    REQUIRE(d.size() == 1);
    CHECK(d.values(0, 0) == 0.0);
  }

  SUBCASE("duplicate items sit at distance zero") {
    Eigen::MatrixXd items(3, 2);
    items << 1.0, 2.0, 1.0, 2.0, 5.0, 0.0;
    const DistanceMatrix d = euclidean_distance_matrix(items);
    CHECK(d.values(0, 1) == 0.0);
    CHECK(d.values(0, 2) > 0.0);
    CHECK((d.values - d.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("the functional metric matches dense-grid trapezoid distances") {
    const auto basis = make_basis(4, equispaced_interior_knots(9));
    Rng rng(23);
    std::vector<FunctionalDatum> data;
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd coeffs(basis->size());
      for (int k = 0; k < coeffs.size(); ++k) coeffs(k) = rng.gaussian();
      data.push_back({"f" + std::to_string(i), basis, coeffs});
    }
    const DistanceMatrix d = l2_distance_matrix(data);
    CHECK(d.metric == DistanceMetric::l2_functional);

    const int g = 200001;
    const Eigen::MatrixXd values = testutil::values_on_dense_grid(data, g);
    const Eigen::VectorXd w = testutil::trapezoid_weights(g);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      for (Eigen::Index j = 0; j < d.size(); ++j) {
        const Eigen::VectorXd diff = (values.row(i) - values.row(j)).transpose();
        const double grid_distance = std::sqrt((diff.array().square() * w.array()).sum());
        CHECK(std::abs(d.values(i, j) - grid_distance) <= 1e-8);
      }
    }
  }

  SUBCASE("dtw matrices carry the dtw tag") {
    const DistanceMatrix d = dtw_distance_matrix(Eigen::MatrixXd::Random(4, 6));
    CHECK(d.metric == DistanceMetric::dtw);
    CHECK(d.values.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((d.values - d.values.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("kmeans recovers exact optima on small inputs") {
  SUBCASE("k = 1 returns the mean") {
    Eigen::MatrixXd items(4, 2);
    items << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    const Clustering c = kmeans(items, 1, 0);
    CHECK(c.sizes == std::vector<int>{4});
    CHECK(c.centers.rows() == 1);
    CHECK((c.centers.row(0) - Eigen::RowVector2d(0.5, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("two tight pairs match the enumerated optimum") {
    const Eigen::MatrixXd items = column_points({0.0, 0.5, 10.0, 10.5});
    const Clustering c = kmeans(items, 2, 1);
    CHECK(c.labels[0] == c.labels[1]);
    CHECK(c.labels[2] == c.labels[3]);
    CHECK(c.labels[0] != c.labels[2]);
    CHECK(c.objective == doctest::Approx(best_two_partition_objective(items)).epsilon(1e-12));
  }

  SUBCASE("k = n drives the objective to zero") {
    const Eigen::MatrixXd items = column_points({0.0, 1.0, 2.0, 5.0});
    const Clustering c = kmeans(items, 4, 2);
    CHECK(c.objective == 0.0);
    CHECK(c.sizes == std::vector<int>(4, 1));
  }

  SUBCASE("k > n is a domain error") {
    CHECK(fails_with(ErrorCategory::domain,
                     [] { kmeans(column_points({0.0, 1.0}), 3, 0); }));
  }

  SUBCASE("the objective trace never increases") {
    Rng rng(29);
    Eigen::MatrixXd items(40, 3);
    for (Eigen::Index i = 0; i < items.rows(); ++i)
      for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian();
    const Clustering c = kmeans(items, 4, 7);
    REQUIRE(!c.objective_trace.empty());
    for (std::size_t i = 1; i < c.objective_trace.size(); ++i)
      CHECK(c.objective_trace[i] <= c.objective_trace[i - 1] + 1e-12);
    CHECK(c.objective == doctest::Approx(c.objective_trace.back()));
  }

  SUBCASE("identical seeds give identical results, scaling leaves partitions alone") {
    Rng rng(31);
    Eigen::MatrixXd items(25, 2);
    for (Eigen::Index i = 0; i < items.rows(); ++i)
      for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian();
    const Clustering first = kmeans(items, 3, 11);
    const Clustering second = kmeans(items, 3, 11);
    CHECK(first.labels == second.labels);
    CHECK(first.objective == second.objective);
    CHECK((first.centers - second.centers).cwiseAbs().maxCoeff() == 0.0);

    const Clustering scaled = kmeans((3.7 * items).eval(), 3, 11);
    CHECK(same_partition(first.labels, scaled.labels));
  }
}

TEST_CASE("fuzzy c-means produces calibrated memberships") {
  SUBCASE("the midpoint between two symmetric groups splits evenly") {
    const Eigen::MatrixXd items = column_points({-1.0, -1.0, 1.0, 1.0, 0.0});
    const FuzzyClustering f = fuzzy_cmeans(items, 2, 2.0, 3);
    CHECK(f.membership(4, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(f.membership(4, 1) == doctest::Approx(0.5).epsilon(1e-6));
  }

  SUBCASE("an item on a center belongs to it fully") {
    const Eigen::MatrixXd items = column_points({0.0, 1.0});
    const FuzzyClustering f = fuzzy_cmeans(items, 2, 2.0, 4);
    for (Eigen::Index i = 0; i < 2; ++i)
      CHECK(f.membership.row(i).maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("rows sum to one and hard labels match kmeans on separated blobs") {
    Rng rng(37);
    Eigen::MatrixXd items(30, 2);
    for (Eigen::Index i = 0; i < items.rows(); ++i) {
      const double cx = i < 15 ? 0.0 : 20.0;
      items(i, 0) = cx + 0.5 * rng.gaussian();
      items(i, 1) = 0.5 * rng.gaussian();
    }
    const FuzzyClustering f = fuzzy_cmeans(items, 2, 2.0, 5);
    for (Eigen::Index i = 0; i < items.rows(); ++i)
      CHECK(std::abs(f.membership.row(i).sum() - 1.0) <= 1e-9);
    const Clustering km = kmeans(items, 2, 5);
    CHECK(same_partition(f.hard.labels, km.labels));

    REQUIRE(!f.hard.objective_trace.empty());
    for (std::size_t i = 1; i < f.hard.objective_trace.size(); ++i)
      CHECK(f.hard.objective_trace[i] <= f.hard.objective_trace[i - 1] + 1e-12);
  }

  SUBCASE("a fuzzifier at or below one is a domain error") {
    CHECK(fails_with(ErrorCategory::domain,
                     [] { fuzzy_cmeans(column_points({0.0, 1.0}), 2, 1.0, 0); }));
  }
}

TEST_CASE("hierarchical clustering follows the hand-worked merge traces") {
  SUBCASE("complete linkage separates the obvious gap") {
    const DistanceMatrix d = euclidean_distance_matrix(column_points({0.0, 1.0, 10.0}));
    const Clustering c = hierarchical(d, Linkage::complete, 2);
    CHECK(c.labels == std::vector<int>{1, 1, 2});
  }

  SUBCASE("cutting at k = n gives singletons") {
    const DistanceMatrix d = euclidean_distance_matrix(column_points({0.0, 1.0, 10.0}));
    const Clustering c = hierarchical(d, Linkage::complete, 3);
    CHECK(c.sizes == std::vector<int>(3, 1));
  }

  SUBCASE("average linkage reproduces the manual six-point trace") {
    const DistanceMatrix d =
        euclidean_distance_matrix(column_points({0.0, 1.0, 3.0, 7.0, 20.0, 25.0}));
    const Dendrogram tree = hierarchical_dendrogram(d, Linkage::average);
    REQUIRE(tree.merges.size() == 5);

    const std::vector<Merge> expected = {
        {0, 1, 1.0}, {2, 6, 2.5}, {4, 5, 5.0}, {3, 7, 17.0 / 3.0}, {8, 9, 19.75}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(tree.merges[i].left == expected[i].left);
      CHECK(tree.merges[i].right == expected[i].right);
      CHECK(tree.merges[i].height == doctest::Approx(expected[i].height).epsilon(1e-12));
    }
  }

  SUBCASE("k > n is a domain error") {
    const DistanceMatrix d = euclidean_distance_matrix(column_points({0.0, 1.0}));
    CHECK(fails_with(ErrorCategory::domain, [&] { hierarchical(d, Linkage::ward, 3); }));
  }

  SUBCASE("scaling the data leaves the cut partition unchanged") {
    Rng rng(41);
    Eigen::MatrixXd items(20, 2);
    for (Eigen::Index i = 0; i < items.rows(); ++i)
      for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian();
    const Clustering plain = hierarchical(euclidean_distance_matrix(items), Linkage::average, 4);
    const Clustering scaled =
        hierarchical(euclidean_distance_matrix((2.5 * items).eval()), Linkage::average, 4);
    CHECK(same_partition(plain.labels, scaled.labels));
  }
}

TEST_CASE("pam finds the optimal medoids on enumerable inputs") {
  SUBCASE("one from each tight pair, total cost two") {
    const DistanceMatrix d = euclidean_distance_matrix(column_points({0.0, 1.0, 10.0, 11.0}));
    const Clustering c = pam(d, 2, 0);
    CHECK(c.objective == doctest::Approx(2.0).epsilon(1e-12));
    REQUIRE(c.medoids.size() == 2);
    const int low = std::min(c.medoids[0], c.medoids[1]);
    const int high = std::max(c.medoids[0], c.medoids[1]);
    CHECK(low <= 1);
    CHECK(high >= 2);
    CHECK(c.labels[0] == c.labels[1]);
    CHECK(c.labels[2] == c.labels[3]);
  }

  SUBCASE("k = n costs nothing") {
    const DistanceMatrix d = euclidean_distance_matrix(column_points({0.0, 1.0, 2.0}));
    const Clustering c = pam(d, 3, 0);
    CHECK(c.objective == 0.0);
    CHECK(std::set<int>(c.medoids.begin(), c.medoids.end()).size() == 3);
  }

  SUBCASE("duplicating the dataset keeps the medoid positions") {
    Rng rng(43);
    std::vector<double> xs;
    for (int i = 0; i < 8; ++i) xs.push_back(rng.gaussian() + (i < 4 ? 0.0 : 12.0));
    std::vector<double> doubled = xs;
    doubled.insert(doubled.end(), xs.begin(), xs.end());

    const Clustering plain = pam(euclidean_distance_matrix(column_points(xs)), 2, 0);
    const Clustering twice = pam(euclidean_distance_matrix(column_points(doubled)), 2, 0);
    std::set<double> plain_spots, twice_spots;
    for (int m : plain.medoids) plain_spots.insert(xs[static_cast<std::size_t>(m)]);
    for (int m : twice.medoids) twice_spots.insert(doubled[static_cast<std::size_t>(m)]);
    CHECK(plain_spots == twice_spots);
  }

  SUBCASE("scaling distances leaves the partition unchanged") {
    Rng rng(47);
    Eigen::MatrixXd items(18, 2);
    for (Eigen::Index i = 0; i < items.rows(); ++i)
      for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian();
    const Clustering plain = pam(euclidean_distance_matrix(items), 3, 1);
    const Clustering scaled = pam(euclidean_distance_matrix((4.0 * items).eval()), 3, 1);
    CHECK(same_partition(plain.labels, scaled.labels));
  }
}

TEST_CASE("gaussian mixture EM estimates components and stays monotone") {
  SUBCASE("a single component is the sample mean and MLE covariance") {
    Rng rng(53);
    Eigen::MatrixXd items(25, 2);
    for (Eigen::Index i = 0; i < items.rows(); ++i)
      for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian() + j;
    const Eigen::RowVectorXd mean = items.colwise().mean();
    const Eigen::MatrixXd centered = items.rowwise() - mean;
    const Eigen::MatrixXd mle_cov =
        centered.transpose() * centered / static_cast<double>(items.rows());

    const auto [hard_full, model_full] = gmm_em(items, 1, CovarianceModel::full, 0);
    CHECK(hard_full.sizes == std::vector<int>{25});
    CHECK((model_full.means.row(0) - mean).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((model_full.covariances[0] - mle_cov).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(model_full.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

    const auto [hard_diag, model_diag] = gmm_em(items, 1, CovarianceModel::diagonal, 0);
    const Eigen::MatrixXd diag_cov = mle_cov.diagonal().asDiagonal();
    CHECK((model_diag.covariances[0] - diag_cov).cwiseAbs().maxCoeff() <= 1e-9);
  }

  SUBCASE("far-apart spherical blobs are labeled by origin") {
    Rng rng(59);
    Eigen::MatrixXd items(40, 2);
    for (Eigen::Index i = 0; i < items.rows(); ++i) {
      const double cx = i < 20 ? 0.0 : 10.0;
      items(i, 0) = cx + 0.3 * rng.gaussian();
      items(i, 1) = (i < 20 ? 0.0 : 10.0) + 0.3 * rng.gaussian();
    }
    const auto [hard, model] = gmm_em(items, 2, CovarianceModel::bic_best, 1);
    CHECK(hard.sizes == std::vector<int>{20, 20});
    for (Eigen::Index i = 1; i < 20; ++i) CHECK(hard.labels[static_cast<std::size_t>(i)] == hard.labels[0]);
    for (Eigen::Index i = 21; i < 40; ++i) CHECK(hard.labels[static_cast<std::size_t>(i)] == hard.labels[20]);
    CHECK(hard.labels[0] != hard.labels[20]);
    CHECK(!model.regularized);
  }

  SUBCASE("the log-likelihood trace never decreases") {
    Rng rng(61);
    for (int run = 0; run < 5; ++run) {
      Eigen::MatrixXd items(30, 3);
      for (Eigen::Index i = 0; i < items.rows(); ++i)
        for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian();
      const auto [hard, model] = gmm_em(items, 3, CovarianceModel::diagonal,
                                        static_cast<std::uint64_t>(run));
      REQUIRE(model.loglik_trace.size() >= 1);
      for (std::size_t i = 1; i < model.loglik_trace.size(); ++i) {
        const double slack = 1e-7 * std::max(1.0, std::abs(model.loglik_trace[i - 1]));
        CHECK(model.loglik_trace[i] >= model.loglik_trace[i - 1] - slack);
      }
      CHECK(model.bic == doctest::Approx(-2.0 * model.loglik +
                                         (3 * 3 + 3 * 3 + 2) * std::log(30.0))
                             .epsilon(1e-12));
    }
  }
}

TEST_CASE("cluster_pipeline dispatches routes deterministically") {
  const Cohort cohort = generate_cohort(CohortSpec::default_spec());
  ClusterParams params;
  params.basis = make_basis(4, equispaced_interior_knots(9));

  SUBCASE("every route yields a valid 4-way clustering twice over") {
    for (const std::string& route : route_names()) {
      const RouteResult first = cluster_pipeline(cohort, route, params);
      CHECK(first.clustering.k == 4);
      CHECK(first.clustering.route == route);
      CHECK_NOTHROW(validate(first.clustering));
      CHECK(first.distances.size() == static_cast<Eigen::Index>(cohort.size()));

      const RouteResult second = cluster_pipeline(cohort, route, params);
      CHECK(clustering_to_json(second.clustering) == clustering_to_json(first.clustering));
    }
  }

  SUBCASE("fuzzy memberships land beside the hard labels") {
    const RouteResult result = cluster_pipeline(cohort, "ts-fuzzy", params);
    REQUIRE(result.fuzzy.has_value());
    const Eigen::MatrixXd& u = result.fuzzy->membership;
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      CHECK(std::abs(u.row(i).sum() - 1.0) <= 1e-9);
    const std::string csv = membership_to_csv(result.ids, u);
    CHECK(csv.rfind("id,u1,u2,u3,u4\n", 0) == 0);
    CHECK(testutil::count_substr(csv, "\n") == cohort.size() + 1);
  }

  SUBCASE("forcing q overrides the variance threshold") {
    ClusterParams forced = params;
    forced.q_override = 6;
    const RouteFeatures features = route_features(cohort, "fpc-kmeans", forced);
    CHECK(features.q_used == 6);
    CHECK(features.features.cols() == 6);
  }

  SUBCASE("k = 1 puts every item in one cluster") {
    ClusterParams single = params;
    single.k = 1;
    const RouteResult result = cluster_pipeline(cohort, "fpc-kmeans", single);
    CHECK(result.clustering.sizes == std::vector<int>{static_cast<int>(cohort.size())});
  }

  SUBCASE("unknown routes and contradictory windows are config errors") {
    CHECK(fails_with(ErrorCategory::config, [&] { cluster_pipeline(cohort, "nope", params); }));
    ClusterParams windowed = params;
    windowed.window = 5;
    CHECK(fails_with(ErrorCategory::config,
                     [&] { cluster_pipeline(cohort, "fpc-kmeans", windowed); }));
  }

  SUBCASE("clustering JSON round-trips") {
    const RouteResult result = cluster_pipeline(cohort, "ts-dtw", params);
    const Clustering back = clustering_from_json(clustering_to_json(result.clustering));
    CHECK(back.route == result.clustering.route);
    CHECK(back.k == result.clustering.k);
    CHECK(back.seed == result.clustering.seed);
    CHECK(back.labels == result.clustering.labels);
    CHECK(back.sizes == result.clustering.sizes);
    CHECK(back.medoids == result.clustering.medoids);
    CHECK(back.objective == result.clustering.objective);
    CHECK(back.params == result.clustering.params);
  }

  SUBCASE("hand-built clusterings are validated") {
    Clustering broken;
    broken.k = 2;
    broken.labels = {1, 1, 1};
    broken.sizes = {3, 0};
    CHECK(fails_with(ErrorCategory::data, [&] { validate(broken); }));
  }
}
