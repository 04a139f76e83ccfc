#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "fdaclust/curve.hpp"

namespace fdaclust {

/// Gaussian observation noise e_ij ~ N(0, sigma^2).
struct NoiseModel {
  double sigma = 0.0;
  explicit NoiseModel(double s);
};

/// Clamped B-spline basis on a closed interval. order = polynomial degree + 1;
/// basis size K = #interior_knots + order. Boundary knots repeat order-fold,
/// so the basis interpolates at the domain endpoints.
class BSplineBasis {
 public:
  BSplineBasis(int order, std::vector<double> interior_knots, double lo = 0.0, double hi = 1.0);

  int order() const { return order_; }
  int size() const { return k_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& interior_knots() const { return interior_; }
  const std::vector<double>& knots() const { return knots_; }

  /// (beta_1(t), ..., beta_K(t)); nonnegative, sums to 1.
  Eigen::VectorXd eval(double t) const;

  /// Rows 0..nder of basis derivative values at t ((nder+1) x K).
  Eigen::MatrixXd eval_derivatives(double t, int nder) const;

  /// W[k][l] = integral of beta_k beta_l over the domain, per-span
  /// Gauss-Legendre; symmetric positive definite.
  Eigen::MatrixXd gram_matrix() const;

  /// R[k][l] = integral of beta_k'' beta_l''; the roughness penalty.
  Eigen::MatrixXd penalty_matrix() const;

  bool operator==(const BSplineBasis& other) const;

 private:
  int span_of(double t) const;

  int order_;
  int k_;
  double lo_, hi_;
  std::vector<double> interior_;
  std::vector<double> knots_;  // clamped, length K + order
};

std::shared_ptr<const BSplineBasis> make_basis(int order, std::vector<double> interior_knots,
                                               double lo = 0.0, double hi = 1.0);

/// count equally spaced interior knots strictly inside [0, 1].
std::vector<double> equispaced_interior_knots(int count);

/// One curve as K expansion coefficients against a shared basis.
struct FunctionalDatum {
  std::string id;
  std::shared_ptr<const BSplineBasis> basis;
  Eigen::VectorXd coeffs;

  double eval(double t) const;
  Eigen::VectorXd eval_on_grid(const std::vector<double>& grid) const;
};

/// Least-squares basis representation of a sampled curve. smoothing_lambda
/// scales a second-derivative roughness penalty; 0 is plain least squares.
/// Solved through an orthogonal factorization of the (augmented) design.
FunctionalDatum fit(const std::shared_ptr<const BSplineBasis>& basis, const SampledCurve& curve,
                    double smoothing_lambda = 0.0);

// JSON persistence: [{id, basis: {order, interior_knots}, coeffs}, ...]
std::string functional_data_to_json(const std::vector<FunctionalDatum>& data);
std::vector<FunctionalDatum> functional_data_from_json(const std::string& text);

}  // namespace fdaclust
