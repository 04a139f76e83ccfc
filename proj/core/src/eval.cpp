#include "fdaclust/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fdaclust/error.hpp"

namespace fdaclust {

int ladder_position(int grade) {
  for (std::size_t p = 0; p < kGradeLadder.size(); ++p)
    if (kGradeLadder[p] == grade) return static_cast<int>(p);
  fail(ErrorCategory::domain, "grade " + std::to_string(grade) + " is not on the adjusted ladder");
}

int GradeMap::grade(int cluster_id) const {
  if (cluster_id < 1 || cluster_id > static_cast<int>(grade_of_cluster.size()))
    fail(ErrorCategory::domain, "cluster id " + std::to_string(cluster_id) + " outside the map");
  return grade_of_cluster[static_cast<std::size_t>(cluster_id - 1)];
}

GradeMap assign_grades(const Clustering& clustering, const Cohort& cohort) {
  if (clustering.k != static_cast<int>(kGradeLadder.size()))
    fail(ErrorCategory::domain, "grade assignment needs k = 4 clusters, clustering has k = " +
                                    std::to_string(clustering.k));
  if (clustering.labels.size() != cohort.size())
    fail(ErrorCategory::data, "clustering and cohort sizes disagree");

  const Eigen::MatrixXd values = cohort.values_on_grid();
  GradeMap map;
  map.mean_symmetry.assign(static_cast<std::size_t>(clustering.k), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(clustering.k), 0);
  for (std::size_t i = 0; i < clustering.labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(clustering.labels[i] - 1);
    map.mean_symmetry[c] += values.row(static_cast<Eigen::Index>(i)).mean();
    ++counts[c];
  }
  for (std::size_t c = 0; c < map.mean_symmetry.size(); ++c)
    map.mean_symmetry[c] /= static_cast<double>(counts[c]);

  std::vector<int> order(map.mean_symmetry.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return map.mean_symmetry[static_cast<std::size_t>(a)] >
           map.mean_symmetry[static_cast<std::size_t>(b)];
  });
  map.grade_of_cluster.assign(map.mean_symmetry.size(), 0);
  for (std::size_t rank = 0; rank < order.size(); ++rank)
    map.grade_of_cluster[static_cast<std::size_t>(order[rank])] = kGradeLadder[rank];
  return map;
}

ContingencyTable contingency(const GradeMap& map, const Clustering& clustering,
                             const std::vector<HBGrade>& labels) {
  if (labels.size() != clustering.labels.size())
    fail(ErrorCategory::data, "every item needs a clinician label");
  ContingencyTable table;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int row = ladder_position(map.grade(clustering.labels[i]));
    const int col = ladder_position(labels[i].adjusted);
    ++table.counts(row, col);
  }
  return table;
}

double ccr(const ContingencyTable& table) {
  const int n = table.total();
  if (n < 1) fail(ErrorCategory::data, "empty contingency table");
  return static_cast<double>(table.counts.trace()) / static_cast<double>(n);
}

double approx_ccr(const ContingencyTable& table) {
  const int n = table.total();
  if (n < 1) fail(ErrorCategory::data, "empty contingency table");
  int hits = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (std::abs(i - j) <= 1) hits += table.counts(i, j);
  return static_cast<double>(hits) / static_cast<double>(n);
}

SilhouetteResult silhouette(const Clustering& clustering, const DistanceMatrix& dist) {
  if (clustering.k < 2) fail(ErrorCategory::domain, "silhouette needs at least 2 clusters");
  const auto n = static_cast<Eigen::Index>(clustering.labels.size());
  if (dist.size() != n) fail(ErrorCategory::data, "distance matrix and clustering sizes disagree");

  SilhouetteResult out;
  out.widths.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = clustering.labels[static_cast<std::size_t>(i)];
    if (clustering.sizes[static_cast<std::size_t>(own - 1)] < 2) continue;

    double a = 0.0;
    std::vector<double> other_sum(static_cast<std::size_t>(clustering.k), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const int cj = clustering.labels[static_cast<std::size_t>(j)];
      if (cj == own)
        a += dist.values(i, j);
      else
        other_sum[static_cast<std::size_t>(cj - 1)] += dist.values(i, j);
    }
    a /= static_cast<double>(clustering.sizes[static_cast<std::size_t>(own - 1)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 1; c <= clustering.k; ++c) {
      if (c == own) continue;
      b = std::min(b, other_sum[static_cast<std::size_t>(c - 1)] /
                          static_cast<double>(clustering.sizes[static_cast<std::size_t>(c - 1)]));
    }
    const double denom = std::max(a, b);
    out.widths[static_cast<std::size_t>(i)] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  out.mean = std::accumulate(out.widths.begin(), out.widths.end(), 0.0) /
             static_cast<double>(out.widths.size());
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorCategory::data, "sequences of unequal length");
  if (x.size() < 2) fail(ErrorCategory::domain, "correlation needs at least 2 observations");
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y))
    fail(ErrorCategory::domain, "correlation is undefined for a constant sequence");

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

AnalysisReport report(const Clustering& clustering, const GradeMap& map,
                      const ContingencyTable& table, double mean_silhouette) {
  if (table.total() != static_cast<int>(clustering.labels.size()))
    fail(ErrorCategory::data, "contingency table and clustering cover different cohorts");
  AnalysisReport out;
  out.route = clustering.route;
  out.k = clustering.k;
  out.n = table.total();
  out.ccr = ccr(table);
  out.approx_ccr = approx_ccr(table);
  out.mean_silhouette = mean_silhouette;
  out.cluster_sizes = clustering.sizes;
  out.grade_of_cluster = map.grade_of_cluster;
  out.table = table;
  return out;
}

std::string report_to_json(const AnalysisReport& report) {
  nlohmann::json j;
  j["route"] = report.route;
  j["k"] = report.k;
  j["n"] = report.n;
  j["ccr"] = report.ccr;
  j["approx_ccr"] = report.approx_ccr;
  j["mean_silhouette"] = report.mean_silhouette;
  j["cluster_sizes"] = report.cluster_sizes;
  j["grade_of_cluster"] = report.grade_of_cluster;
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) row.push_back(report.table.counts(i, c));
    rows.push_back(std::move(row));
  }
  j["contingency"] = std::move(rows);
  return j.dump(2) + "\n";
}

AnalysisReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("report JSON: ") + e.what());
  }
  AnalysisReport out;
  try {
    out.route = j.at("route").get<std::string>();
    out.k = j.at("k").get<int>();
    out.n = j.at("n").get<int>();
    out.ccr = j.at("ccr").get<double>();
    out.approx_ccr = j.at("approx_ccr").get<double>();
    out.mean_silhouette = j.at("mean_silhouette").get<double>();
    out.cluster_sizes = j.at("cluster_sizes").get<std::vector<int>>();
    out.grade_of_cluster = j.at("grade_of_cluster").get<std::vector<int>>();
    const auto rows = j.at("contingency").get<std::vector<std::vector<int>>>();
    if (rows.size() != 4) fail(ErrorCategory::schema, "contingency must have 4 rows");
    for (int i = 0; i < 4; ++i) {
      if (rows[static_cast<std::size_t>(i)].size() != 4)
        fail(ErrorCategory::schema, "contingency must have 4 columns");
      for (int c = 0; c < 4; ++c)
        out.table.counts(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::schema, std::string("report JSON: ") + e.what());
  }
  return out;
}

std::string report_table_text(const std::vector<AnalysisReport>& reports) {
  std::string out = "route         ccr     approx_ccr  silhouette\n";
  char line[96];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-13s %.4f  %.4f      %.4f\n", r.route.c_str(), r.ccr,
                  r.approx_ccr, r.mean_silhouette);
    out += line;
  }
  return out;
}

std::string contingency_to_csv(const ContingencyTable& table) {
  std::string out = "assigned_grade";
  for (int grade : kGradeLadder) out += ",HB" + std::to_string(grade);
  out += '\n';
  for (int i = 0; i < 4; ++i) {
    out += "HB" + std::to_string(kGradeLadder[static_cast<std::size_t>(i)]);
    for (int c = 0; c < 4; ++c) out += ',' + std::to_string(table.counts(i, c));
    out += '\n';
  }
  return out;
}

}  // namespace fdaclust
