#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fdaclust/bspline.hpp"
#include "fdaclust/curve.hpp"

namespace fdaclust {

enum class DistanceMetric { euclidean_grid, l2_functional, dtw };

const char* to_string(DistanceMetric metric);

/// Symmetric pairwise distances with a zero diagonal, tagged with the metric
/// they were computed under.
struct DistanceMatrix {
  Eigen::MatrixXd values;
  DistanceMetric metric = DistanceMetric::euclidean_grid;

  Eigen::Index size() const { return values.rows(); }
};

/// Dynamic time warping distance between two sequences: minimal cumulative
/// squared pointwise cost over monotone alignments (diagonal/up/left steps),
/// square-rooted. `window` is a Sakoe-Chiba band half-width restricting the
/// alignment to |i - j| <= window; it must be at least |len(a) - len(b)|.
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                    std::optional<int> window = std::nullopt);

DistanceMatrix euclidean_distance_matrix(const Eigen::MatrixXd& rows);
DistanceMatrix dtw_distance_matrix(const Eigen::MatrixXd& rows,
                                   std::optional<int> window = std::nullopt);
/// d^2(f, g) = (a_f - a_g)^T W (a_f - a_g) with W the basis Gram matrix.
DistanceMatrix l2_distance_matrix(const std::vector<FunctionalDatum>& data);

/// Hard partition of n items into k nonempty clusters. Labels are 1-based.
/// `centers` holds one feature row per cluster for centroid methods and is
/// empty for distance-only methods (hierarchical, PAM); PAM records the
/// medoid item indices instead. `objective_trace` logs the objective after
/// every iteration of the winning run.
struct Clustering {
  std::string route;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> labels;
  std::vector<int> sizes;
  double objective = 0.0;
  int iterations = 0;
  Eigen::MatrixXd centers;
  std::vector<int> medoids;
  std::vector<double> objective_trace;
  std::map<std::string, std::string> params;
};

/// Throws unless every cluster is nonempty, sizes sum to n, and every label
/// lies in 1..k.
void validate(const Clustering& clustering);

struct FuzzyClustering {
  Clustering hard;
  Eigen::MatrixXd membership;
  double fuzzifier = 2.0;
};

enum class Linkage { single, complete, average, ward };

Linkage linkage_from_string(const std::string& name);
const char* to_string(Linkage linkage);

/// One agglomerative merge. Leaves are 0..n-1; the i-th merge creates node
/// n + i. Heights are on the input distance scale (Ward updates run on
/// squared distances internally; recorded heights are their square roots).
struct Merge {
  int left = 0;
  int right = 0;
  double height = 0.0;
};

struct Dendrogram {
  std::vector<Merge> merges;
};

enum class CovarianceModel { diagonal, full, bic_best };

CovarianceModel covariance_from_string(const std::string& name);
const char* to_string(CovarianceModel model);

struct GmmModel {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;
  std::vector<Eigen::MatrixXd> covariances;
  bool diagonal = true;
  std::vector<double> loglik_trace;
  double loglik = 0.0;
  double bic = 0.0;
  bool regularized = false;
};

/// Lloyd iterations from distance-weighted (k-means++) seeding; the best of
/// `restarts` independently seeded runs is returned. Objective is
/// (1/n) sum of squared distances to the assigned center. An empty cluster is
/// repaired by moving in the point farthest from its own center.
Clustering kmeans(const Eigen::MatrixXd& items, int k, std::uint64_t seed, int max_iter = 100,
                  int restarts = 10);

/// Alternating membership/center updates with fuzzifier m; stops when no
/// membership moves by more than `tol`. A point coinciding with a center gets
/// full membership there.
FuzzyClustering fuzzy_cmeans(const Eigen::MatrixXd& items, int k, double m, std::uint64_t seed,
                             int max_iter = 200, double tol = 1e-9);

/// Full agglomerative merge trace under the given linkage, ties broken by
/// lowest cluster index pair.
Dendrogram hierarchical_dendrogram(const DistanceMatrix& dist, Linkage linkage);

/// Cuts the dendrogram at k clusters. Objective is the height of the last
/// merge performed; clusters are numbered 1..k by smallest member index.
Clustering hierarchical(const DistanceMatrix& dist, Linkage linkage, int k);

/// Partitioning around medoids: greedy BUILD then best-improvement SWAP.
/// Objective is the total distance of items to their nearest medoid. The
/// procedure is deterministic; `seed` is recorded for provenance only.
Clustering pam(const DistanceMatrix& dist, int k, std::uint64_t seed, int max_iter = 100);

/// Gaussian-mixture EM with log-sum-exp responsibilities, best of `n_init`
/// seeded starts (clean runs outrank regularized ones, then higher
/// log-likelihood wins). `bic_best` fits both covariance families and keeps
/// the lower BIC. A collapsing covariance (per-dimension generalized
/// variance det^(1/d) below 1e-12) is regularized by adding 1e-6 * trace/d
/// to its diagonal and flagged.
std::pair<Clustering, GmmModel> gmm_em(const Eigen::MatrixXd& items, int k,
                                       CovarianceModel covariance, std::uint64_t seed,
                                       int max_iter = 500, double tol = 1e-8, int n_init = 10);

struct ClusterParams {
  int k = 4;
  std::uint64_t seed = 0;
  int max_iter = 200;
  int restarts = 10;
  double fuzzifier = 2.0;
  double tol = 1e-9;
  std::optional<int> window;
  Linkage linkage = Linkage::ward;
  CovarianceModel covariance = CovarianceModel::bic_best;
  double q_threshold = 0.95;
  std::optional<int> q_override;
  double smoothing_lambda = 0.0;
  std::shared_ptr<const BSplineBasis> basis;
};

/// Everything a route produced: the hard clustering, soft memberships and
/// mixture model where applicable, the feature rows the route clustered, and
/// the distance matrix on that feature space (used for silhouettes).
struct RouteResult {
  Clustering clustering;
  std::optional<FuzzyClustering> fuzzy;
  std::optional<GmmModel> gmm;
  Eigen::MatrixXd features;
  DistanceMatrix distances;
  std::vector<std::string> ids;
  int q_used = 0;
};

const std::vector<std::string>& route_names();

/// Feature rows a route clusters plus the matching distance matrix: grid
/// curves under DTW (ts-dtw) or euclidean (ts-fuzzy), basis coefficients
/// (basis-coeff), or FPC scores (fpc-*). q_used is the retained score count
/// for fpc-* routes and 0 otherwise.
struct RouteFeatures {
  Eigen::MatrixXd features;
  DistanceMatrix distances;
  int q_used = 0;
};

RouteFeatures route_features(const Cohort& cohort, const std::string& route,
                             const ClusterParams& params);

/// Dispatches a registered, grid-resampled cohort to one route:
///   ts-dtw       DTW distance matrix, then PAM
///   ts-fuzzy     fuzzy c-means on the grid curves
///   basis-coeff  Gaussian-mixture EM on the basis coefficients
///   fpc-kmeans / fpc-hier / fpc-pam / fpc-gmm
///                FPC scores at q = choose_q(q_threshold), then the named
///                algorithm (params.q_override forces q)
/// The algorithm seed is derived from params.seed and the route name, so
/// routes stay independent under a shared base seed.
RouteResult cluster_pipeline(const Cohort& cohort, const std::string& route,
                             const ClusterParams& params);

std::string clustering_to_json(const Clustering& clustering);
Clustering clustering_from_json(const std::string& text);

std::string membership_to_csv(const std::vector<std::string>& ids,
                              const Eigen::MatrixXd& membership);

}  // namespace fdaclust
