#include "fdaclust/bspline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fdaclust/error.hpp"

namespace fdaclust {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1]; exact for polynomials to degree 15,
// which covers products of second derivatives of any order <= 8 spline.
constexpr int kQuadNodes = 8;
constexpr double kGaussX[kQuadNodes] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGaussW[kQuadNodes] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

}  // namespace

NoiseModel::NoiseModel(double s) : sigma(s) {
  if (!(s >= 0.0)) fail(ErrorCategory::domain, "noise sigma must be >= 0");
}

BSplineBasis::BSplineBasis(int order, std::vector<double> interior_knots, double lo, double hi)
    : order_(order), lo_(lo), hi_(hi), interior_(std::move(interior_knots)) {
  if (order_ < 1) fail(ErrorCategory::domain, "spline order must be >= 1");
  if (!(lo_ < hi_)) fail(ErrorCategory::domain, "basis domain is empty");
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    if (interior_[i] <= lo_ || interior_[i] >= hi_)
      fail(ErrorCategory::domain, "interior knot outside open domain");
    if (i > 0 && interior_[i] <= interior_[i - 1])
      fail(ErrorCategory::domain, "interior knots not strictly increasing");
  }
  k_ = static_cast<int>(interior_.size()) + order_;
  knots_.reserve(static_cast<std::size_t>(k_ + order_));
  for (int i = 0; i < order_; ++i) knots_.push_back(lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  for (int i = 0; i < order_; ++i) knots_.push_back(hi_);
}

bool BSplineBasis::operator==(const BSplineBasis& other) const {
  return order_ == other.order_ && lo_ == other.lo_ && hi_ == other.hi_ && interior_ == other.interior_;
}

int BSplineBasis::span_of(double t) const {
  if (t < lo_ || t > hi_)
    fail(ErrorCategory::domain, "evaluation point outside basis domain");
  // span index i with knots[i] <= t < knots[i+1], in [order-1, K-1];
  // the right domain endpoint belongs to the last span
  if (t >= hi_) return k_ - 1;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  int span = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(span, order_ - 1, k_ - 1);
}

Eigen::VectorXd BSplineBasis::eval(double t) const {
  const int span = span_of(t);
  // Cox-de Boor over the order nonzero functions on this span
  std::vector<double> vals(static_cast<std::size_t>(order_), 0.0);
  std::vector<double> left(static_cast<std::size_t>(order_), 0.0);
  std::vector<double> right(static_cast<std::size_t>(order_), 0.0);
  vals[0] = 1.0;
  for (int j = 1; j < order_; ++j) {
    left[static_cast<std::size_t>(j)] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double tmp = denom > 0.0 ? vals[static_cast<std::size_t>(r)] / denom : 0.0;
      vals[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
      saved = left[static_cast<std::size_t>(j - r)] * tmp;
    }
    vals[static_cast<std::size_t>(j)] = saved;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k_);
  for (int j = 0; j < order_; ++j) out[span - order_ + 1 + j] = vals[static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd BSplineBasis::eval_derivatives(double t, int nder) const {
  const int span = span_of(t);
  const int p = order_ - 1;  // polynomial degree
  const int n = std::min(nder, p);

  // knot-difference triangle (The NURBS Book, A2.3)
  Eigen::MatrixXd ndu(order_, order_);
  std::vector<double> left(static_cast<std::size_t>(order_), 0.0);
  std::vector<double> right(static_cast<std::size_t>(order_), 0.0);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double tmp = ndu(j, r) > 0.0 ? ndu(r, j - 1) / ndu(j, r) : 0.0;
      ndu(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
      saved = left[static_cast<std::size_t>(j - r)] * tmp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(nder + 1, k_);
  for (int j = 0; j <= p; ++j) ders(0, span - p + j) = ndu(j, p);

  Eigen::MatrixXd a(2, order_);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int kd = 1; kd <= n; ++kd) {
      double d = 0.0;
      const int rk = r - kd, pk = p - kd;
      if (r >= kd) {
        a(s2, 0) = ndu(pk + 1, rk) > 0.0 ? a(s1, 0) / ndu(pk + 1, rk) : 0.0;
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = r - 1 <= pk ? kd - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = ndu(pk + 1, rk + j) > 0.0 ? (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j) : 0.0;
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, kd) = ndu(pk + 1, r) > 0.0 ? -a(s1, kd - 1) / ndu(pk + 1, r) : 0.0;
        d += a(s2, kd) * ndu(r, pk);
      }
      ders(kd, span - p + r) = d;
      std::swap(s1, s2);
    }
  }

  double factor = static_cast<double>(p);
  for (int kd = 1; kd <= n; ++kd) {
    ders.row(kd) *= factor;
    factor *= static_cast<double>(p - kd);
  }
  return ders;
}

Eigen::MatrixXd BSplineBasis::gram_matrix() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k_, k_);
  std::vector<double> breaks;
  breaks.push_back(lo_);
  breaks.insert(breaks.end(), interior_.begin(), interior_.end());
  breaks.push_back(hi_);
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int q = 0; q < kQuadNodes; ++q) {
      const Eigen::VectorXd bv = eval(mid + half * kGaussX[q]);
      w.selfadjointView<Eigen::Upper>().rankUpdate(bv, half * kGaussW[q]);
    }
  }
  return w.selfadjointView<Eigen::Upper>();
}

Eigen::MatrixXd BSplineBasis::penalty_matrix() const {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(k_, k_);
  if (order_ < 3) return r;  // second derivative vanishes identically
  std::vector<double> breaks;
  breaks.push_back(lo_);
  breaks.insert(breaks.end(), interior_.begin(), interior_.end());
  breaks.push_back(hi_);
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int q = 0; q < kQuadNodes; ++q) {
      const Eigen::VectorXd d2 = eval_derivatives(mid + half * kGaussX[q], 2).row(2);
      r.selfadjointView<Eigen::Upper>().rankUpdate(d2, half * kGaussW[q]);
    }
  }
  return r.selfadjointView<Eigen::Upper>();
}

std::shared_ptr<const BSplineBasis> make_basis(int order, std::vector<double> interior_knots,
                                               double lo, double hi) {
  return std::make_shared<const BSplineBasis>(order, std::move(interior_knots), lo, hi);
}

std::vector<double> equispaced_interior_knots(int count) {
  if (count < 0) fail(ErrorCategory::domain, "interior knot count must be >= 0");
  std::vector<double> knots(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    knots[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) / (count + 1);
  return knots;
}

double FunctionalDatum::eval(double t) const { return basis->eval(t).dot(coeffs); }

Eigen::VectorXd FunctionalDatum::eval_on_grid(const std::vector<double>& grid) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) out[static_cast<Eigen::Index>(i)] = eval(grid[i]);
  return out;
}

FunctionalDatum fit(const std::shared_ptr<const BSplineBasis>& basis, const SampledCurve& curve,
                    double smoothing_lambda) {
  if (smoothing_lambda < 0.0) fail(ErrorCategory::domain, "smoothing lambda must be >= 0");
  const int k = basis->size();
  const auto m = static_cast<Eigen::Index>(curve.size());
  if (smoothing_lambda == 0.0 && m < k)
    fail(ErrorCategory::data, "curve '" + curve.id() + "': " + std::to_string(m) +
                                  " observations cannot determine " + std::to_string(k) +
                                  " coefficients without smoothing");

  Eigen::MatrixXd design(m, k);
  for (Eigen::Index j = 0; j < m; ++j)
    design.row(j) = basis->eval(curve.times()[static_cast<std::size_t>(j)]).transpose();
  const Eigen::Map<const Eigen::VectorXd> rhs(curve.values().data(), m);

  if (smoothing_lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
      fail(ErrorCategory::numeric, "curve '" + curve.id() +
                                       "': rank-deficient design; use smoothing_lambda > 0");
    return FunctionalDatum{curve.id(), basis, qr.solve(rhs)};
  }

  // augment the design with sqrt(lambda) * C where R = C^T C, then one QR
  const Eigen::MatrixXd penalty = basis->penalty_matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(penalty);
  const Eigen::VectorXd evals = es.eigenvalues();
  const double emax = std::max(evals.maxCoeff(), 0.0);
  std::vector<int> keep;
  for (int i = 0; i < k; ++i)
    if (evals[i] > emax * 1e-14) keep.push_back(i);
  Eigen::MatrixXd aug(m + static_cast<Eigen::Index>(keep.size()), k);
  aug.topRows(m) = design;
  for (std::size_t r = 0; r < keep.size(); ++r)
    aug.row(m + static_cast<Eigen::Index>(r)) =
        std::sqrt(smoothing_lambda * evals[keep[r]]) * es.eigenvectors().col(keep[r]).transpose();
  Eigen::VectorXd aug_rhs = Eigen::VectorXd::Zero(aug.rows());
  aug_rhs.head(m) = rhs;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
  qr.setThreshold(1e-12);
  if (qr.rank() < k)
    fail(ErrorCategory::numeric, "curve '" + curve.id() + "': rank-deficient penalized design");
  return FunctionalDatum{curve.id(), basis, qr.solve(aug_rhs)};
}

std::string functional_data_to_json(const std::vector<FunctionalDatum>& data) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : data) {
    nlohmann::json rec;
    rec["id"] = d.id;
    rec["basis"] = {{"order", d.basis->order()}, {"interior_knots", d.basis->interior_knots()}};
    rec["coeffs"] = std::vector<double>(d.coeffs.data(), d.coeffs.data() + d.coeffs.size());
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

std::vector<FunctionalDatum> functional_data_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("functional data JSON: ") + e.what());
  }
  if (!arr.is_array()) fail(ErrorCategory::schema, "functional data JSON must be an array");
  std::vector<FunctionalDatum> out;
  std::shared_ptr<const BSplineBasis> shared;
  for (const auto& rec : arr) {
    try {
      const int order = rec.at("basis").at("order").get<int>();
      auto knots = rec.at("basis").at("interior_knots").get<std::vector<double>>();
      BSplineBasis candidate(order, knots);
      if (!shared || !(*shared == candidate)) shared = make_basis(order, std::move(knots));
      auto coeffs = rec.at("coeffs").get<std::vector<double>>();
      if (static_cast<int>(coeffs.size()) != shared->size())
        fail(ErrorCategory::schema, "coefficient count does not match basis size");
      FunctionalDatum d{rec.at("id").get<std::string>(), shared,
                        Eigen::Map<const Eigen::VectorXd>(coeffs.data(),
                                                          static_cast<Eigen::Index>(coeffs.size()))};
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCategory::schema, std::string("functional data record: ") + e.what());
    }
  }
  return out;
}

}  // namespace fdaclust
