#pragma once

#include <string>
#include <vector>

#include "fdaclust/cluster.hpp"
#include "fdaclust/curve.hpp"
#include "fdaclust/fpca.hpp"

namespace fdaclust {

/// Every curve of the cohort as one path over the shared grid.
std::string spaghetti_svg(const Cohort& cohort);

/// Cohort curves colored by hard cluster, with the per-cluster mean drawn
/// heavy.
std::string cluster_curves_svg(const Cohort& cohort, const Clustering& clustering);

/// One stacked bar per item; segment heights are the fuzzy memberships.
std::string membership_bars_svg(const Eigen::MatrixXd& membership,
                                const std::vector<std::string>& ids);

/// Eigenvalue scree next to the cumulative explained-variance curve with the
/// 95% line marked.
std::string scree_svg(const FpcaModel& model);

/// Pairwise scatter matrix of the score columns, colored by cluster when one
/// is given.
std::string score_scatter_svg(const ScoreMatrix& scores, const Clustering* clustering = nullptr);

}  // namespace fdaclust
