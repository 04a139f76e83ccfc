#include "fdaclust/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "fdaclust/error.hpp"
#include "fdaclust/fpca.hpp"
#include "fdaclust/rng.hpp"
#include "text_util.hpp"

namespace fdaclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int worker_count(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("FDACLUST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) hw = std::min(hw, static_cast<unsigned>(v));
  }
  return static_cast<int>(std::min<std::size_t>(hw, std::max<std::size_t>(jobs, 1)));
}

void validate_distance_matrix(const DistanceMatrix& dist) {
  const auto& d = dist.values;
  if (d.rows() == 0 || d.rows() != d.cols())
    fail(ErrorCategory::data, "distance matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) fail(ErrorCategory::data, "distance matrix diagonal must be zero");
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      if (d(i, j) < 0.0) fail(ErrorCategory::data, "negative distance entry");
      if (std::abs(d(i, j) - d(j, i)) > 1e-12)
        fail(ErrorCategory::data, "distance matrix is not symmetric");
    }
  }
}

void check_k(int k, Eigen::Index n) {
  if (k < 1) fail(ErrorCategory::domain, "k must be at least 1");
  if (k > n)
    fail(ErrorCategory::domain,
         "k = " + std::to_string(k) + " exceeds item count " + std::to_string(n));
}

void check_trace_non_increasing(const std::vector<double>& trace, const char* what) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1] + 1e-9 * std::max(1.0, std::abs(trace[i - 1])))
      fail(ErrorCategory::numeric, std::string(what) + " objective increased between iterations");
}

/// Distance-weighted seeding: first pick uniform, each later pick with
/// probability proportional to the squared distance to the nearest pick.
std::vector<Eigen::Index> seed_centers(const Eigen::MatrixXd& items, int k, Rng& rng) {
  const Eigen::Index n = items.rows();
  std::vector<Eigen::Index> picked;
  picked.reserve(static_cast<std::size_t>(k));
  picked.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd dist2 = (items.rowwise() - items.row(picked[0])).rowwise().squaredNorm();
  while (static_cast<int>(picked.size()) < k) {
    Eigen::Index next = -1;
    const double total = dist2.sum();
    if (total > 0.0) {
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (u < acc) {
          next = i;
          break;
        }
      }
      if (next < 0)
        for (Eigen::Index i = n - 1; i >= 0 && next < 0; --i)
          if (dist2[i] > 0.0) next = i;
    }
    if (next < 0) {
      // every remaining point coincides with a picked center
      for (Eigen::Index i = 0; i < n && next < 0; ++i)
        if (std::find(picked.begin(), picked.end(), i) == picked.end()) next = i;
    }
    picked.push_back(next);
    dist2 = dist2.cwiseMin((items.rowwise() - items.row(next)).rowwise().squaredNorm());
  }
  return picked;
}

std::vector<int> count_sizes(const std::vector<int>& labels0, int k) {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int c : labels0) ++sizes[static_cast<std::size_t>(c)];
  return sizes;
}

void finish_labels(Clustering& out, std::vector<int> labels0) {
  out.labels.resize(labels0.size());
  for (std::size_t i = 0; i < labels0.size(); ++i) out.labels[i] = labels0[i] + 1;
  out.sizes = count_sizes(labels0, out.k);
}

struct LloydRun {
  std::vector<int> labels0;
  Eigen::MatrixXd centers;
  double objective = kInf;
  std::vector<double> trace;
  int iterations = 0;
};

LloydRun lloyd(const Eigen::MatrixXd& items, int k, Rng& rng, int max_iter) {
  const Eigen::Index n = items.rows();
  LloydRun run;
  run.centers.resize(k, items.cols());
  const auto init = seed_centers(items, k, rng);
  for (int c = 0; c < k; ++c) run.centers.row(c) = items.row(init[static_cast<std::size_t>(c)]);

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> prev;
  for (int iter = 0; iter < max_iter; ++iter) {
    prev = labels;
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double best = kInf;
      for (int c = 0; c < k; ++c) {
        const double d2 = (items.row(i) - run.centers.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          arg = c;
        }
      }
      labels[static_cast<std::size_t>(i)] = arg;
    }
    auto sizes = count_sizes(labels, k);
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d2 = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(l)] < 2) continue;
        const double d2 = (items.row(i) - run.centers.row(l)).squaredNorm();
        if (d2 > far_d2) {
          far_d2 = d2;
          far = i;
        }
      }
      --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
    }
    run.centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) run.centers.row(labels[static_cast<std::size_t>(i)]) += items.row(i);
    for (int c = 0; c < k; ++c) run.centers.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      obj += (items.row(i) - run.centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    obj /= static_cast<double>(n);
    run.trace.push_back(obj);
    run.iterations = iter + 1;
    if (labels == prev) break;
  }
  check_trace_non_increasing(run.trace, "k-means");
  run.labels0 = std::move(labels);
  run.objective = run.trace.back();
  return run;
}

}  // namespace

const char* to_string(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::euclidean_grid: return "euclidean-grid";
    case DistanceMetric::l2_functional: return "l2-functional";
    case DistanceMetric::dtw: return "dtw";
  }
  return "?";
}

double dtw_distance(const std::vector<double>& a, const std::vector<double>& b,
                    std::optional<int> window) {
  if (a.empty() || b.empty()) fail(ErrorCategory::domain, "DTW of an empty sequence");
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  if (window) {
    if (*window < 0) fail(ErrorCategory::domain, "Sakoe-Chiba window must be nonnegative");
    if (*window < std::abs(n - m))
      fail(ErrorCategory::domain, "Sakoe-Chiba window " + std::to_string(*window) +
                                      " is infeasible for lengths " + std::to_string(n) + " and " +
                                      std::to_string(m));
  }
  std::vector<double> prev(static_cast<std::size_t>(m) + 1, kInf);
  std::vector<double> cur(static_cast<std::size_t>(m) + 1, kInf);
  prev[0] = 0.0;
  for (int i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), kInf);
    int jlo = 1;
    int jhi = m;
    if (window) {
      jlo = std::max(jlo, i - *window);
      jhi = std::min(jhi, i + *window);
    }
    for (int j = jlo; j <= jhi; ++j) {
      const double diff = a[static_cast<std::size_t>(i - 1)] - b[static_cast<std::size_t>(j - 1)];
      const double below = std::min({prev[static_cast<std::size_t>(j - 1)],
                                     prev[static_cast<std::size_t>(j)],
                                     cur[static_cast<std::size_t>(j - 1)]});
      cur[static_cast<std::size_t>(j)] = diff * diff + below;
    }
    std::swap(prev, cur);
  }
  return std::sqrt(prev[static_cast<std::size_t>(m)]);
}

DistanceMatrix euclidean_distance_matrix(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n == 0) fail(ErrorCategory::data, "distance matrix of an empty item set");
  DistanceMatrix out;
  out.metric = DistanceMetric::euclidean_grid;
  out.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (rows.row(i) - rows.row(j)).norm();
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  return out;
}

DistanceMatrix dtw_distance_matrix(const Eigen::MatrixXd& rows, std::optional<int> window) {
  const Eigen::Index n = rows.rows();
  if (n == 0) fail(ErrorCategory::data, "distance matrix of an empty item set");
  std::vector<std::vector<double>> seqs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    seqs[static_cast<std::size_t>(i)].assign(rows.row(i).begin(), rows.row(i).end());
  DistanceMatrix out;
  out.metric = DistanceMetric::dtw;
  out.values = Eigen::MatrixXd::Zero(n, n);
  const auto fill_row = [&](Eigen::Index i) {
    for (Eigen::Index j = i + 1; j < n; ++j)
      out.values(i, j) =
          dtw_distance(seqs[static_cast<std::size_t>(i)], seqs[static_cast<std::size_t>(j)], window);
  };
  const int workers = worker_count(static_cast<std::size_t>(n));
  if (workers <= 1 || n < 8) {
    for (Eigen::Index i = 0; i < n; ++i) fill_row(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (Eigen::Index i = w; i < n; i += workers) fill_row(i);
      });
    for (auto& t : pool) t.join();
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) out.values(j, i) = out.values(i, j);
  return out;
}

DistanceMatrix l2_distance_matrix(const std::vector<FunctionalDatum>& data) {
  if (data.empty()) fail(ErrorCategory::data, "distance matrix of an empty item set");
  for (std::size_t i = 1; i < data.size(); ++i)
    if (!(*data[i].basis == *data[0].basis))
      fail(ErrorCategory::data, "functional data mix different bases (datum '" + data[i].id + "')");
  const Eigen::MatrixXd w = data[0].basis->gram_matrix();
  const auto n = static_cast<Eigen::Index>(data.size());
  DistanceMatrix out;
  out.metric = DistanceMetric::l2_functional;
  out.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::VectorXd diff =
          data[static_cast<std::size_t>(i)].coeffs - data[static_cast<std::size_t>(j)].coeffs;
      const double d = std::sqrt(std::max(0.0, diff.dot(w * diff)));
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  return out;
}

void validate(const Clustering& clustering) {
  if (clustering.k < 1) fail(ErrorCategory::data, "clustering has k < 1");
  const auto n = clustering.labels.size();
  if (n == 0) fail(ErrorCategory::data, "clustering has no labels");
  if (clustering.sizes.size() != static_cast<std::size_t>(clustering.k))
    fail(ErrorCategory::data, "clustering sizes/k mismatch");
  std::vector<int> counted(static_cast<std::size_t>(clustering.k), 0);
  for (int l : clustering.labels) {
    if (l < 1 || l > clustering.k)
      fail(ErrorCategory::data, "cluster label " + std::to_string(l) + " outside 1.." +
                                    std::to_string(clustering.k));
    ++counted[static_cast<std::size_t>(l - 1)];
  }
  for (int c = 0; c < clustering.k; ++c) {
    if (counted[static_cast<std::size_t>(c)] != clustering.sizes[static_cast<std::size_t>(c)])
      fail(ErrorCategory::data, "recorded cluster sizes disagree with labels");
    if (counted[static_cast<std::size_t>(c)] < 1)
      fail(ErrorCategory::data, "cluster " + std::to_string(c + 1) + " is empty");
  }
}

Clustering kmeans(const Eigen::MatrixXd& items, int k, std::uint64_t seed, int max_iter,
                  int restarts) {
  check_k(k, items.rows());
  if (max_iter < 1) fail(ErrorCategory::domain, "max_iter must be at least 1");
  if (restarts < 1) fail(ErrorCategory::domain, "restarts must be at least 1");
  LloydRun best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "kmeans-restart-" + std::to_string(r)));
    LloydRun run = lloyd(items, k, rng, max_iter);
    if (run.objective < best.objective) best = std::move(run);
  }
  Clustering out;
  out.route = "kmeans";
  out.k = k;
  out.seed = seed;
  out.centers = std::move(best.centers);
  out.objective = best.objective;
  out.iterations = best.iterations;
  out.objective_trace = std::move(best.trace);
  out.params["restarts"] = std::to_string(restarts);
  out.params["max_iter"] = std::to_string(max_iter);
  finish_labels(out, std::move(best.labels0));
  validate(out);
  return out;
}

FuzzyClustering fuzzy_cmeans(const Eigen::MatrixXd& items, int k, double m, std::uint64_t seed,
                             int max_iter, double tol) {
  check_k(k, items.rows());
  if (!(m > 1.0)) fail(ErrorCategory::domain, "fuzzifier must exceed 1");
  if (max_iter < 1) fail(ErrorCategory::domain, "max_iter must be at least 1");
  if (!(tol > 0.0)) fail(ErrorCategory::domain, "tolerance must be positive");
  const Eigen::Index n = items.rows();
  const double expo = 2.0 / (m - 1.0);

  Rng rng(derive_seed(seed, "fcm-init"));
  Eigen::MatrixXd centers(k, items.cols());
  const auto init = seed_centers(items, k, rng);
  for (int c = 0; c < k; ++c) centers.row(c) = items.row(init[static_cast<std::size_t>(c)]);

  Eigen::MatrixXd u(n, k);
  Eigen::MatrixXd prev_u;
  std::vector<double> trace;
  int iterations = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd dist(k);
      int zero = -1;
      for (int c = 0; c < k; ++c) {
        dist[c] = (items.row(i) - centers.row(c)).norm();
        if (zero < 0 && dist[c] == 0.0) zero = c;
      }
      if (zero >= 0) {
        u.row(i).setZero();
        u(i, zero) = 1.0;
        continue;
      }
      for (int c = 0; c < k; ++c) {
        double denom = 0.0;
        for (int l = 0; l < k; ++l) denom += std::pow(dist[c] / dist[l], expo);
        u(i, c) = 1.0 / denom;
      }
    }
    const Eigen::MatrixXd um = u.array().pow(m);
    for (int c = 0; c < k; ++c) {
      const double denom = um.col(c).sum();
      if (denom > 0.0) centers.row(c) = (um.col(c).transpose() * items) / denom;
    }
    double obj = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c)
        obj += um(i, c) * (items.row(i) - centers.row(c)).squaredNorm();
    trace.push_back(obj);
    iterations = iter + 1;
    if (iter > 0 && (u - prev_u).cwiseAbs().maxCoeff() < tol) break;
    prev_u = u;
  }
  check_trace_non_increasing(trace, "fuzzy c-means");
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(u.row(i).sum() - 1.0) > 1e-9)
      fail(ErrorCategory::numeric, "membership row does not sum to 1");

  std::vector<int> labels0(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int arg = 0;
    for (int c = 1; c < k; ++c)
      if (u(i, c) > u(i, arg)) arg = c;
    labels0[static_cast<std::size_t>(i)] = arg;
  }
  auto sizes = count_sizes(labels0, k);
  for (int c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index take = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (sizes[static_cast<std::size_t>(labels0[static_cast<std::size_t>(i)])] >= 2 &&
          u(i, c) > best) {
        best = u(i, c);
        take = i;
      }
    --sizes[static_cast<std::size_t>(labels0[static_cast<std::size_t>(take)])];
    labels0[static_cast<std::size_t>(take)] = c;
    sizes[static_cast<std::size_t>(c)] = 1;
  }

  FuzzyClustering out;
  out.fuzzifier = m;
  out.membership = std::move(u);
  out.hard.route = "fuzzy-cmeans";
  out.hard.k = k;
  out.hard.seed = seed;
  out.hard.centers = std::move(centers);
  out.hard.objective = trace.back();
  out.hard.iterations = iterations;
  out.hard.objective_trace = std::move(trace);
  out.hard.params["m"] = detail::format_double(m);
  out.hard.params["tol"] = detail::format_double(tol);
  finish_labels(out.hard, std::move(labels0));
  validate(out.hard);
  return out;
}

Linkage linkage_from_string(const std::string& name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  if (name == "ward") return Linkage::ward;
  fail(ErrorCategory::config, "unknown linkage '" + name + "'; expected single, complete, average, or ward");
}

const char* to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
    case Linkage::ward: return "ward";
  }
  return "?";
}

Dendrogram hierarchical_dendrogram(const DistanceMatrix& dist, Linkage linkage) {
  validate_distance_matrix(dist);
  const Eigen::Index n = dist.size();
  Eigen::MatrixXd work = dist.values;
  if (linkage == Linkage::ward) work = work.array().square();

  std::vector<bool> active(static_cast<std::size_t>(n), true);
  std::vector<int> node(static_cast<std::size_t>(n));
  std::vector<double> csize(static_cast<std::size_t>(n), 1.0);
  for (Eigen::Index i = 0; i < n; ++i) node[static_cast<std::size_t>(i)] = static_cast<int>(i);

  Dendrogram out;
  out.merges.reserve(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
  for (Eigen::Index step = 0; step + 1 < n; ++step) {
    Eigen::Index bi = -1, bj = -1;
    double best = kInf;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (work(i, j) < best) {
          best = work(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    const double height = linkage == Linkage::ward ? std::sqrt(std::max(0.0, best)) : best;
    const int left = std::min(node[static_cast<std::size_t>(bi)], node[static_cast<std::size_t>(bj)]);
    const int right = std::max(node[static_cast<std::size_t>(bi)], node[static_cast<std::size_t>(bj)]);
    out.merges.push_back({left, right, height});

    const double na = csize[static_cast<std::size_t>(bi)];
    const double nb = csize[static_cast<std::size_t>(bj)];
    for (Eigen::Index l = 0; l < n; ++l) {
      if (!active[static_cast<std::size_t>(l)] || l == bi || l == bj) continue;
      const double dal = work(bi, l);
      const double dbl_ = work(bj, l);
      double merged = 0.0;
      switch (linkage) {
        case Linkage::single: merged = std::min(dal, dbl_); break;
        case Linkage::complete: merged = std::max(dal, dbl_); break;
        case Linkage::average: merged = (na * dal + nb * dbl_) / (na + nb); break;
        case Linkage::ward: {
          const double nl = csize[static_cast<std::size_t>(l)];
          merged = ((na + nl) * dal + (nb + nl) * dbl_ - nl * best) / (na + nb + nl);
          break;
        }
      }
      work(bi, l) = merged;
      work(l, bi) = merged;
    }
    csize[static_cast<std::size_t>(bi)] = na + nb;
    node[static_cast<std::size_t>(bi)] = static_cast<int>(n + step);
    active[static_cast<std::size_t>(bj)] = false;
  }
  return out;
}

Clustering hierarchical(const DistanceMatrix& dist, Linkage linkage, int k) {
  const Eigen::Index n = dist.size();
  check_k(k, n);
  const Dendrogram dendro = hierarchical_dendrogram(dist, linkage);

  std::vector<int> parent(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = static_cast<int>(i);
  const auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  // a representative leaf for every dendrogram node
  std::vector<int> leaf_of(static_cast<std::size_t>(2 * n - 1));
  for (Eigen::Index i = 0; i < n; ++i) leaf_of[static_cast<std::size_t>(i)] = static_cast<int>(i);
  const int cuts = static_cast<int>(n) - k;
  for (int t = 0; t < cuts; ++t) {
    const auto& merge = dendro.merges[static_cast<std::size_t>(t)];
    const int a = find(leaf_of[static_cast<std::size_t>(merge.left)]);
    const int b = find(leaf_of[static_cast<std::size_t>(merge.right)]);
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    leaf_of[static_cast<std::size_t>(n) + static_cast<std::size_t>(t)] = std::min(a, b);
  }

  // number clusters 1..k by smallest member index
  std::map<int, int> cluster_of_root;
  std::vector<int> labels0(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int root = find(static_cast<int>(i));
    labels0[static_cast<std::size_t>(i)] =
        cluster_of_root.emplace(root, static_cast<int>(cluster_of_root.size())).first->second;
  }

  Clustering out;
  out.route = "hierarchical";
  out.k = k;
  out.objective = cuts > 0 ? dendro.merges[static_cast<std::size_t>(cuts - 1)].height : 0.0;
  out.iterations = cuts;
  out.params["linkage"] = to_string(linkage);
  finish_labels(out, std::move(labels0));
  validate(out);
  return out;
}

Clustering pam(const DistanceMatrix& dist, int k, std::uint64_t seed, int max_iter) {
  validate_distance_matrix(dist);
  const Eigen::Index n = dist.size();
  check_k(k, n);
  if (max_iter < 1) fail(ErrorCategory::domain, "max_iter must be at least 1");
  const auto& d = dist.values;

  // BUILD: start from the most central item, then greedily add the item
  // with the largest cost reduction.
  std::vector<int> medoids;
  std::vector<bool> is_medoid(static_cast<std::size_t>(n), false);
  {
    Eigen::Index first = 0;
    double best = kInf;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double total = d.row(i).sum();
      if (total < best) {
        best = total;
        first = i;
      }
    }
    medoids.push_back(static_cast<int>(first));
    is_medoid[static_cast<std::size_t>(first)] = true;
  }
  Eigen::VectorXd dnear = d.col(medoids[0]);
  while (static_cast<int>(medoids.size()) < k) {
    Eigen::Index pick = -1;
    double best_gain = -1.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (is_medoid[static_cast<std::size_t>(c)]) continue;
      double gain = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) gain += std::max(0.0, dnear[j] - d(j, c));
      if (gain > best_gain) {
        best_gain = gain;
        pick = c;
      }
    }
    medoids.push_back(static_cast<int>(pick));
    is_medoid[static_cast<std::size_t>(pick)] = true;
    dnear = dnear.cwiseMin(d.col(pick));
  }

  std::vector<int> nearest_pos(static_cast<std::size_t>(n));
  Eigen::VectorXd dsecond(n);
  const auto recompute_near = [&] {
    for (Eigen::Index j = 0; j < n; ++j) {
      int pos = 0;
      double d1 = kInf, d2 = kInf;
      for (int p = 0; p < static_cast<int>(medoids.size()); ++p) {
        const double dd = d(j, medoids[static_cast<std::size_t>(p)]);
        if (dd < d1) {
          d2 = d1;
          d1 = dd;
          pos = p;
        } else if (dd < d2) {
          d2 = dd;
        }
      }
      nearest_pos[static_cast<std::size_t>(j)] = pos;
      dnear[j] = d1;
      dsecond[j] = d2;
    }
  };
  recompute_near();

  std::vector<double> trace = {dnear.sum()};
  int swaps = 0;
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    int best_pos = -1;
    Eigen::Index best_h = -1;
    double best_delta = -1e-12;
    for (int p = 0; p < k; ++p) {
      for (Eigen::Index h = 0; h < n; ++h) {
        if (is_medoid[static_cast<std::size_t>(h)]) continue;
        double delta = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (nearest_pos[static_cast<std::size_t>(j)] == p)
            delta += std::min(dsecond[j], d(j, h)) - dnear[j];
          else
            delta += std::min(0.0, d(j, h) - dnear[j]);
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_pos = p;
          best_h = h;
        }
      }
    }
    if (best_pos < 0) break;
    is_medoid[static_cast<std::size_t>(medoids[static_cast<std::size_t>(best_pos)])] = false;
    medoids[static_cast<std::size_t>(best_pos)] = static_cast<int>(best_h);
    is_medoid[static_cast<std::size_t>(best_h)] = true;
    recompute_near();
    trace.push_back(dnear.sum());
    ++swaps;
  }
  check_trace_non_increasing(trace, "PAM");

  std::vector<int> labels0(nearest_pos.begin(), nearest_pos.end());
  for (int p = 0; p < k; ++p) labels0[static_cast<std::size_t>(medoids[static_cast<std::size_t>(p)])] = p;

  Clustering out;
  out.route = "pam";
  out.k = k;
  out.seed = seed;
  out.medoids = medoids;
  out.objective = trace.back();
  out.iterations = swaps;
  out.objective_trace = std::move(trace);
  finish_labels(out, std::move(labels0));
  validate(out);
  return out;
}

CovarianceModel covariance_from_string(const std::string& name) {
  if (name == "diagonal") return CovarianceModel::diagonal;
  if (name == "full") return CovarianceModel::full;
  if (name == "bic_best") return CovarianceModel::bic_best;
  fail(ErrorCategory::config, "unknown covariance model '" + name + "'; expected diagonal, full, or bic_best");
}

const char* to_string(CovarianceModel model) {
  switch (model) {
    case CovarianceModel::diagonal: return "diagonal";
    case CovarianceModel::full: return "full";
    case CovarianceModel::bic_best: return "bic_best";
  }
  return "?";
}

namespace {

struct EmRun {
  GmmModel model;
  Eigen::MatrixXd resp;
};

/// Adds 1e-6 * trace/d to the diagonal until the generalized variance (the
/// determinant) clears 1e-12. Returns true when regularization was applied.
/// Collapse test and repair. A covariance counts as collapsed when its
/// generalized variance per dimension, det(cov)^(1/d), drops below 1e-12 (a
/// raw determinant threshold would scale like the d-th power of the data
/// scale and flag tight but healthy clusters) or when its smallest variance
/// direction falls 10 orders of magnitude under its average one, which is
/// where the quadratic form stops being numerically trustworthy. Repair adds
/// 1e-6 * trace/d to the diagonal, escalating until health returns.
bool ensure_well_conditioned(Eigen::MatrixXd& cov, bool diagonal, double fallback_scale) {
  const auto dim = cov.rows();
  const auto healthy = [&] {
    double logdet = 0.0;
    double min_var = 0.0;
    if (diagonal) {
      if (!(cov.diagonal().array() > 0.0).all()) return false;
      logdet = cov.diagonal().array().log().sum();
      min_var = cov.diagonal().minCoeff();
    } else {
      const Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) return false;
      double min_pivot = kInf;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double pivot = llt.matrixL()(i, i);
        if (!(pivot > 0.0)) return false;
        logdet += 2.0 * std::log(pivot);
        min_pivot = std::min(min_pivot, pivot);
      }
      min_var = min_pivot * min_pivot;
    }
    const double per_dim_det = std::exp(logdet / static_cast<double>(dim));
    return per_dim_det >= 1e-12 && min_var >= 1e-10 * cov.trace() / static_cast<double>(dim);
  };

  if (!cov.allFinite()) {
    // A component starved of responsibility can produce a non-finite
    // scatter; its parameters no longer matter, they only need to stay
    // usable, so reset it to the data scale.
    cov = fallback_scale * Eigen::MatrixXd::Identity(dim, dim);
    if (diagonal) {
      const Eigen::VectorXd d = cov.diagonal();
      cov = d.asDiagonal();
    }
    return true;
  }
  if (healthy()) return false;
  for (int attempt = 0; attempt < 64; ++attempt) {
    double bump = 1e-6 * cov.trace() / static_cast<double>(dim);
    if (!(bump > 0.0)) bump = 1e-6 * fallback_scale;
    if (!(bump > 0.0)) bump = 1e-12;
    cov.diagonal().array() += bump * std::pow(10.0, attempt);
    if (healthy()) return true;
  }
  fail(ErrorCategory::numeric, "covariance regularization failed to restore conditioning");
}

EmRun em_once(const Eigen::MatrixXd& items, int k, bool diagonal, Rng& rng, int max_iter,
              double tol) {
  const Eigen::Index n = items.rows();
  const Eigen::Index dim = items.cols();
  const Eigen::RowVectorXd data_mean = items.colwise().mean();
  const Eigen::MatrixXd centered = items.rowwise() - data_mean;
  Eigen::MatrixXd data_cov = centered.transpose() * centered / static_cast<double>(n);
  if (diagonal) {
    const Eigen::VectorXd d = data_cov.diagonal();
    data_cov = d.asDiagonal();
  }
  const double fallback_scale = std::max(data_cov.trace() / static_cast<double>(dim), 1e-6);

  EmRun run;
  GmmModel& model = run.model;
  model.diagonal = diagonal;
  model.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  model.means.resize(k, dim);
  const auto init = seed_centers(items, k, rng);
  for (int c = 0; c < k; ++c) model.means.row(c) = items.row(init[static_cast<std::size_t>(c)]);

  // Localize the start: hard-assign every point to its nearest seeded mean
  // and give each component the mean and covariance of its members. Seeding
  // all components with the pooled covariance instead makes the initial
  // metric discount exactly the directions that separate the clusters.
  model.covariances.assign(static_cast<std::size_t>(k), data_cov);
  {
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      int arg = 0;
      double best = (items.row(i) - model.means.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d2 = (items.row(i) - model.means.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          arg = c;
        }
      }
      members[static_cast<std::size_t>(arg)].push_back(i);
    }
    for (int c = 0; c < k; ++c) {
      const auto& idx = members[static_cast<std::size_t>(c)];
      model.weights[c] = std::max<double>(static_cast<double>(idx.size()), 1.0);
      if (idx.size() < 2) continue;
      Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(dim);
      for (Eigen::Index i : idx) mu += items.row(i);
      mu /= static_cast<double>(idx.size());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
      for (Eigen::Index i : idx) {
        const Eigen::RowVectorXd diff = items.row(i) - mu;
        cov += diff.transpose() * diff;
      }
      cov /= static_cast<double>(idx.size());
      if (diagonal) {
        const Eigen::VectorXd d = cov.diagonal();
        cov = d.asDiagonal();
      }
      model.means.row(c) = mu;
      model.covariances[static_cast<std::size_t>(c)] = std::move(cov);
    }
    model.weights /= model.weights.sum();
  }
  for (auto& cov : model.covariances)
    model.regularized |= ensure_well_conditioned(cov, diagonal, fallback_scale);

  Eigen::MatrixXd logresp(n, k);
  double prev_ll = -kInf;
  const double log2pi = std::log(2.0 * std::acos(-1.0));
  for (int iter = 0; iter < max_iter; ++iter) {
    for (int c = 0; c < k; ++c) {
      const auto& cov = model.covariances[static_cast<std::size_t>(c)];
      const Eigen::MatrixXd diff = items.rowwise() - model.means.row(c);
      Eigen::VectorXd quad(n);
      double logdet = 0.0;
      if (diagonal) {
        const Eigen::VectorXd var = cov.diagonal();
        logdet = var.array().log().sum();
        quad = (diff.array().square().matrix() * var.cwiseInverse().asDiagonal()).rowwise().sum();
      } else {
        const Eigen::LLT<Eigen::MatrixXd> llt(cov);
        for (Eigen::Index i = 0; i < dim; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        const Eigen::MatrixXd z = llt.matrixL().solve(diff.transpose());
        quad = z.colwise().squaredNorm().transpose();
      }
      const double offset =
          std::log(model.weights[c]) - 0.5 * (static_cast<double>(dim) * log2pi + logdet);
      logresp.col(c) = (offset - 0.5 * quad.array()).matrix();
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double rowmax = logresp.row(i).maxCoeff();
      const double lse = rowmax + std::log((logresp.row(i).array() - rowmax).exp().sum());
      logresp.row(i).array() -= lse;
      ll += lse;
    }
    // Regularization perturbs the model off the EM path and can leave a
    // covariance ill-conditioned enough for the log-likelihood to wobble at
    // float precision, so the guarantee is only enforced on clean runs.
    if (iter > 0 && !model.regularized &&
        ll + 1e-7 * std::max(1.0, std::abs(prev_ll)) < prev_ll)
      fail(ErrorCategory::numeric, "EM log-likelihood decreased between iterations");
    model.loglik_trace.push_back(ll);
    const bool converged = iter > 0 && std::abs(ll - prev_ll) < tol * std::max(1.0, std::abs(ll));
    prev_ll = ll;
    if (converged || iter + 1 == max_iter) break;

    const Eigen::MatrixXd resp = logresp.array().exp();
    for (int c = 0; c < k; ++c) {
      const double nc = std::max(resp.col(c).sum(), 1e-12);
      model.weights[c] = nc / static_cast<double>(n);
      model.means.row(c) = resp.col(c).transpose() * items / nc;
      const Eigen::MatrixXd diff = items.rowwise() - model.means.row(c);
      Eigen::MatrixXd cov =
          diff.transpose() * resp.col(c).asDiagonal() * diff / nc;
      if (diagonal) {
        const Eigen::VectorXd d = cov.diagonal();
        cov = d.asDiagonal();
      }
      model.regularized |= ensure_well_conditioned(cov, diagonal, fallback_scale);
      model.covariances[static_cast<std::size_t>(c)] = std::move(cov);
    }
    model.weights /= model.weights.sum();
  }
  model.loglik = prev_ll;
  const double p = static_cast<double>(k - 1) + static_cast<double>(k) * dim +
                   static_cast<double>(k) * (diagonal ? static_cast<double>(dim)
                                                      : static_cast<double>(dim) * (dim + 1) / 2.0);
  model.bic = -2.0 * model.loglik + p * std::log(static_cast<double>(n));
  run.resp = logresp.array().exp();
  return run;
}

std::pair<Clustering, GmmModel> gmm_family(const Eigen::MatrixXd& items, int k, bool diagonal,
                                           std::uint64_t seed, int max_iter, double tol,
                                           int n_init) {
  const char* family = diagonal ? "diagonal" : "full";
  EmRun best;
  bool have = false;
  for (int i = 0; i < n_init; ++i) {
    Rng rng(derive_seed(seed, std::string("gmm-") + family + "-init-" + std::to_string(i)));
    EmRun run = em_once(items, k, diagonal, rng, max_iter, tol);
    // A run that needed covariance repair sits at a likelihood singularity,
    // so its loglik is not comparable; any clean run outranks it.
    const bool better =
        !have || (run.model.regularized != best.model.regularized
                      ? !run.model.regularized
                      : run.model.loglik > best.model.loglik);
    if (better) {
      best = std::move(run);
      have = true;
    }
  }

  const Eigen::Index n = items.rows();
  std::vector<int> labels0(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int arg = 0;
    for (int c = 1; c < k; ++c)
      if (best.resp(i, c) > best.resp(i, arg)) arg = c;
    labels0[static_cast<std::size_t>(i)] = arg;
  }
  auto sizes = count_sizes(labels0, k);
  for (int c = 0; c < k; ++c) {
    if (sizes[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index take = -1;
    double strongest = -1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (sizes[static_cast<std::size_t>(labels0[static_cast<std::size_t>(i)])] >= 2 &&
          best.resp(i, c) > strongest) {
        strongest = best.resp(i, c);
        take = i;
      }
    --sizes[static_cast<std::size_t>(labels0[static_cast<std::size_t>(take)])];
    labels0[static_cast<std::size_t>(take)] = c;
    sizes[static_cast<std::size_t>(c)] = 1;
  }

  Clustering out;
  out.route = "gmm";
  out.k = k;
  out.seed = seed;
  out.centers = best.model.means;
  out.objective = -best.model.loglik;
  out.iterations = static_cast<int>(best.model.loglik_trace.size());
  out.objective_trace.reserve(best.model.loglik_trace.size());
  for (double ll : best.model.loglik_trace) out.objective_trace.push_back(-ll);
  out.params["covariance"] = family;
  out.params["n_init"] = std::to_string(n_init);
  out.params["bic"] = detail::format_double(best.model.bic);
  out.params["regularized"] = best.model.regularized ? "true" : "false";
  finish_labels(out, std::move(labels0));
  validate(out);
  return {std::move(out), std::move(best.model)};
}

}  // namespace

std::pair<Clustering, GmmModel> gmm_em(const Eigen::MatrixXd& items, int k,
                                       CovarianceModel covariance, std::uint64_t seed,
                                       int max_iter, double tol, int n_init) {
  check_k(k, items.rows());
  if (items.cols() < 1) fail(ErrorCategory::data, "GMM needs at least 1 feature dimension");
  if (max_iter < 1) fail(ErrorCategory::domain, "max_iter must be at least 1");
  if (!(tol > 0.0)) fail(ErrorCategory::domain, "tolerance must be positive");
  if (n_init < 1) fail(ErrorCategory::domain, "n_init must be at least 1");
  if (covariance == CovarianceModel::diagonal)
    return gmm_family(items, k, true, seed, max_iter, tol, n_init);
  if (covariance == CovarianceModel::full)
    return gmm_family(items, k, false, seed, max_iter, tol, n_init);
  auto diag = gmm_family(items, k, true, seed, max_iter, tol, n_init);
  auto full = gmm_family(items, k, false, seed, max_iter, tol, n_init);
  return full.second.bic < diag.second.bic ? std::move(full) : std::move(diag);
}

const std::vector<std::string>& route_names() {
  static const std::vector<std::string> names = {
      "ts-dtw", "ts-fuzzy", "basis-coeff", "fpc-kmeans", "fpc-hier", "fpc-pam", "fpc-gmm"};
  return names;
}

RouteFeatures route_features(const Cohort& cohort, const std::string& route,
                             const ClusterParams& params) {
  const auto& names = route_names();
  if (std::find(names.begin(), names.end(), route) == names.end()) {
    std::string expect;
    for (const auto& name : names) expect += (expect.empty() ? "" : ", ") + name;
    fail(ErrorCategory::config, "unknown route '" + route + "'; expected one of " + expect);
  }
  if (params.window && route != "ts-dtw")
    fail(ErrorCategory::config, "a DTW window applies only to the ts-dtw route");

  RouteFeatures out;
  if (route == "ts-dtw") {
    out.features = cohort.values_on_grid();
    out.distances = dtw_distance_matrix(out.features, params.window);
    return out;
  }
  if (route == "ts-fuzzy") {
    out.features = cohort.values_on_grid();
    out.distances = euclidean_distance_matrix(out.features);
    return out;
  }

  const auto basis = params.basis ? params.basis : make_basis(4, equispaced_interior_knots(9));
  std::vector<FunctionalDatum> data;
  data.reserve(cohort.size());
  for (const auto& curve : cohort.curves()) data.push_back(fit(basis, curve, params.smoothing_lambda));

  if (route == "basis-coeff") {
    out.features.resize(static_cast<Eigen::Index>(data.size()), basis->size());
    for (std::size_t i = 0; i < data.size(); ++i)
      out.features.row(static_cast<Eigen::Index>(i)) = data[i].coeffs.transpose();
    out.distances = euclidean_distance_matrix(out.features);
    return out;
  }

  const FpcaModel model = fit_fpca(data);
  const int q = params.q_override ? *params.q_override : choose_q(model, params.q_threshold);
  const ScoreMatrix sm = scores(data, model, q);
  out.q_used = q;
  out.features = sm.scores;
  out.distances = euclidean_distance_matrix(out.features);
  return out;
}

RouteResult cluster_pipeline(const Cohort& cohort, const std::string& route,
                             const ClusterParams& params) {
  RouteFeatures rf = route_features(cohort, route, params);

  RouteResult out;
  out.ids = cohort.ids();
  out.features = std::move(rf.features);
  out.distances = std::move(rf.distances);
  out.q_used = rf.q_used;
  const std::uint64_t algo_seed = derive_seed(params.seed, route);

  if (route == "ts-dtw") {
    out.clustering = pam(out.distances, params.k, algo_seed, params.max_iter);
    if (params.window) out.clustering.params["window"] = std::to_string(*params.window);
  } else if (route == "ts-fuzzy") {
    out.fuzzy = fuzzy_cmeans(out.features, params.k, params.fuzzifier, algo_seed, params.max_iter,
                             params.tol);
    out.clustering = out.fuzzy->hard;
  } else if (route == "basis-coeff") {
    auto [clustering, gmm] = gmm_em(out.features, params.k, params.covariance, algo_seed,
                                    params.max_iter, params.tol, params.restarts);
    out.clustering = std::move(clustering);
    out.gmm = std::move(gmm);
  } else {
    if (route == "fpc-kmeans") {
      out.clustering = kmeans(out.features, params.k, algo_seed, params.max_iter, params.restarts);
    } else if (route == "fpc-hier") {
      out.clustering = hierarchical(out.distances, params.linkage, params.k);
    } else if (route == "fpc-pam") {
      out.clustering = pam(out.distances, params.k, algo_seed, params.max_iter);
    } else {
      auto [clustering, gmm] = gmm_em(out.features, params.k, params.covariance, algo_seed,
                                      params.max_iter, params.tol, params.restarts);
      out.clustering = std::move(clustering);
      out.gmm = std::move(gmm);
    }
    out.clustering.params["q"] = std::to_string(out.q_used);
  }
  out.clustering.route = route;
  out.clustering.seed = params.seed;
  validate(out.clustering);
  return out;
}

std::string clustering_to_json(const Clustering& clustering) {
  nlohmann::json j;
  j["route"] = clustering.route;
  j["k"] = clustering.k;
  j["seed"] = clustering.seed;
  j["labels"] = clustering.labels;
  j["sizes"] = clustering.sizes;
  j["objective"] = clustering.objective;
  j["iterations"] = clustering.iterations;
  if (!clustering.medoids.empty()) j["medoids"] = clustering.medoids;
  j["params"] = clustering.params;
  return j.dump(2) + "\n";
}

Clustering clustering_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("clustering JSON: ") + e.what());
  }
  Clustering out;
  try {
    out.route = j.at("route").get<std::string>();
    out.k = j.at("k").get<int>();
    out.seed = j.at("seed").get<std::uint64_t>();
    out.labels = j.at("labels").get<std::vector<int>>();
    out.sizes = j.at("sizes").get<std::vector<int>>();
    out.objective = j.at("objective").get<double>();
    out.iterations = j.value("iterations", 0);
    if (j.contains("medoids")) out.medoids = j.at("medoids").get<std::vector<int>>();
    if (j.contains("params")) out.params = j.at("params").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::schema, std::string("clustering JSON: ") + e.what());
  }
  validate(out);
  return out;
}

std::string membership_to_csv(const std::vector<std::string>& ids,
                              const Eigen::MatrixXd& membership) {
  if (static_cast<Eigen::Index>(ids.size()) != membership.rows())
    fail(ErrorCategory::data, "membership rows and ids disagree");
  std::string out = "id";
  for (Eigen::Index c = 0; c < membership.cols(); ++c) out += ",u" + std::to_string(c + 1);
  out += '\n';
  for (Eigen::Index i = 0; i < membership.rows(); ++i) {
    out += ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < membership.cols(); ++c) {
      out += ',';
      out += detail::format_double(membership(i, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace fdaclust
