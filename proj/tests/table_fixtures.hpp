#pragma once

// Curated 4x4 contingency fixtures, one per clustering route, with their
// hand-checked classification rates (diagonal sum / 120). They anchor the
// evaluation metrics to known input/output pairs, and the first one doubles
// as the shipped end-to-end evaluation fixture under tests/data/dtw-route/.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "fdaclust/cluster.hpp"
#include "fdaclust/curve.hpp"
#include "fdaclust/eval.hpp"

namespace testutil {

struct ContingencyFixture {
  const char* route;
  std::array<std::array<int, 4>, 4> counts;  // rows assigned, columns labeled
  double ccr;
};

inline const std::vector<ContingencyFixture>& contingency_fixtures() {
  static const std::vector<ContingencyFixture> fixtures = {
      {"ts-dtw", {{{33, 16, 8, 0}, {21, 3, 6, 2}, {2, 1, 6, 8}, {1, 0, 3, 10}}}, 0.4333},
      {"ts-fuzzy", {{{31, 16, 8, 0}, {17, 0, 4, 1}, {2, 0, 2, 6}, {7, 4, 9, 13}}}, 0.3833},
      {"basis-coeff", {{{31, 15, 4, 0}, {18, 3, 6, 2}, {5, 2, 7, 2}, {3, 0, 6, 16}}}, 0.475},
      {"fpc-hier", {{{32, 16, 9, 0}, {17, 2, 3, 2}, {2, 0, 2, 6}, {6, 2, 9, 12}}}, 0.4},
      {"fpc-kmeans", {{{43, 16, 10, 0}, {1, 0, 2, 5}, {12, 4, 10, 9}, {1, 0, 1, 6}}}, 0.4917},
      {"fpc-pam", {{{28, 15, 4, 0}, {19, 1, 8, 1}, {2, 0, 1, 6}, {8, 4, 10, 13}}}, 0.3583},
      {"fpc-gmm", {{{27, 8, 7, 0}, {15, 7, 3, 0}, {13, 5, 7, 7}, {2, 0, 6, 13}}}, 0.45},
  };
  return fixtures;
}

inline fdaclust::ContingencyTable to_table(const ContingencyFixture& fixture) {
  fdaclust::ContingencyTable table;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      table.counts(r, c) = fixture.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return table;
}

/// The ts-dtw fixture rendered as pipeline artifacts: a 120-curve cohort of
/// constant symmetry levels (descending per cluster, so grade assignment maps
/// cluster c to the c-th ladder grade), raw labels realizing the fixture's
/// columns, and the matching stored clustering.
struct EvaluationFixture {
  std::string cohort_csv;
  std::string labels_csv;
  std::string clustering_json;
};

inline EvaluationFixture dtw_route_fixture() {
  const ContingencyFixture& fixture = contingency_fixtures().front();
  const std::array<double, 4> level = {0.95, 0.9, 0.7, 0.5};
  const std::array<int, 4> raw_of_column = {1, 2, 3, 6};

  std::vector<fdaclust::SampledCurve> curves;
  std::vector<fdaclust::HBGrade> labels;
  fdaclust::Clustering clustering;
  clustering.route = fixture.route;
  clustering.k = 4;

  int item = 0;
  for (int cluster = 0; cluster < 4; ++cluster) {
    for (int column = 0; column < 4; ++column) {
      const int count = fixture.counts[static_cast<std::size_t>(cluster)][static_cast<std::size_t>(column)];
      for (int rep = 0; rep < count; ++rep) {
        char id[16];
        std::snprintf(id, sizeof id, "m%03d", ++item);
        std::vector<double> times, values;
        for (int j = 0; j < 5; ++j) {
          times.push_back(j / 4.0);
          values.push_back(level[static_cast<std::size_t>(cluster)]);
        }
        curves.emplace_back(id, std::move(times), std::move(values));
        labels.push_back(fdaclust::HBGrade::from_raw(raw_of_column[static_cast<std::size_t>(column)]));
        clustering.labels.push_back(cluster + 1);
      }
    }
  }
  clustering.sizes.assign(4, 0);
  for (int label : clustering.labels) ++clustering.sizes[static_cast<std::size_t>(label - 1)];

  const fdaclust::Cohort cohort(std::move(curves), labels);
  return {fdaclust::cohort_to_csv(cohort), fdaclust::labels_to_csv(cohort),
          fdaclust::clustering_to_json(clustering)};
}

}  // namespace testutil
