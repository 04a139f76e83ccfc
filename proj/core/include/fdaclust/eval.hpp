#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdaclust/cluster.hpp"
#include "fdaclust/curve.hpp"

namespace fdaclust {

/// Adjusted grade ladder, ordered healthiest to worst.
inline constexpr std::array<int, 4> kGradeLadder = {1, 2, 3, 6};

/// Position of an adjusted grade on the ladder (0..3).
int ladder_position(int grade);

/// Bijection cluster id -> adjusted grade. Clusters ranked by mean symmetry
/// level, descending: the most symmetric cluster becomes grade 1, the least
/// symmetric grade 6. Ties break toward the lower cluster id.
struct GradeMap {
  std::vector<int> grade_of_cluster;
  std::vector<double> mean_symmetry;

  int grade(int cluster_id) const;
};

GradeMap assign_grades(const Clustering& clustering, const Cohort& cohort);

/// 4x4 counts; rows = assigned grade, columns = clinician adjusted grade,
/// both in ladder order (1, 2, 3, 6).
struct ContingencyTable {
  Eigen::Matrix4i counts = Eigen::Matrix4i::Zero();

  int total() const { return counts.sum(); }
  bool operator==(const ContingencyTable&) const = default;
};

ContingencyTable contingency(const GradeMap& map, const Clustering& clustering,
                             const std::vector<HBGrade>& labels);

/// Fraction of items whose assigned grade matches the clinician grade.
double ccr(const ContingencyTable& table);

/// Fraction whose assigned and clinician grades sit at most one step apart
/// on the ladder, so grade 1 also accepts 2, and grade 3 accepts 2, 3, 6.
double approx_ccr(const ContingencyTable& table);

struct SilhouetteResult {
  std::vector<double> widths;
  double mean = 0.0;
};

/// s(i) = (b(i) - a(i)) / max(a(i), b(i)); members of singleton clusters
/// score 0.
SilhouetteResult silhouette(const Clustering& clustering, const DistanceMatrix& dist);

/// Spearman rank correlation with averaged tie ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct AnalysisReport {
  std::string route;
  int k = 0;
  int n = 0;
  double ccr = 0.0;
  double approx_ccr = 0.0;
  double mean_silhouette = 0.0;
  std::vector<int> cluster_sizes;
  std::vector<int> grade_of_cluster;
  ContingencyTable table;

  bool operator==(const AnalysisReport&) const = default;
};

AnalysisReport report(const Clustering& clustering, const GradeMap& map,
                      const ContingencyTable& table, double mean_silhouette);

std::string report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const std::string& text);

/// One row per report: route, CCR, approximate CCR, mean silhouette width.
std::string report_table_text(const std::vector<AnalysisReport>& reports);

std::string contingency_to_csv(const ContingencyTable& table);

}  // namespace fdaclust
