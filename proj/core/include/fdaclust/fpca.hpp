#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "fdaclust/bspline.hpp"

namespace fdaclust {

/// Spectrum of the sample covariance operator in coefficient space.
/// Eigenfunctions are L2-orthonormal (Gram-matrix inner product) and their
/// sign is fixed so results are reproducible.
struct FpcaModel {
  std::shared_ptr<const BSplineBasis> basis;
  Eigen::VectorXd mean_coeffs;
  Eigen::VectorXd eigenvalues;          // non-increasing, >= 0
  Eigen::MatrixXd eigenfunction_coeffs; // K x q_max, one column per component
  int q_max = 0;

  /// <f, g> = f_coeffs^T W g_coeffs for functions on this basis.
  Eigen::MatrixXd gram;
};

struct ScoreMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd scores;  // n x q
  Eigen::VectorXd column_variances;
};

/// Coefficient-wise average; all data must share one basis.
FunctionalDatum mean_function(const std::vector<FunctionalDatum>& data);

/// Solves the symmetric eigenproblem of W^{1/2} S W^{1/2} with
/// S = A^T A / (n - 1) over centered coefficients A, then maps the
/// eigenvectors back through W^{-1/2}. Sample normalization 1/(n-1);
/// eigenvalues below 1e-12 * lambda_1 are truncated to zero.
FpcaModel fit_fpca(const std::vector<FunctionalDatum>& data);

/// Projection scores C_ij = (a_i - mean)^T W f_j for the first q components.
ScoreMatrix scores(const std::vector<FunctionalDatum>& data, const FpcaModel& model, int q);

/// mean + sum_{j<=q} C_j f_j in coefficient space.
FunctionalDatum reconstruct(const FpcaModel& model, const Eigen::VectorXd& score_row, int q,
                            const std::string& id = "reconstruction");

/// Cumulative eigenvalue fractions of the total variance.
std::vector<double> explained_variance(const FpcaModel& model);

/// Smallest q whose cumulative explained variance reaches the threshold.
int choose_q(const FpcaModel& model, double threshold);

// Persistence: JSON model {basis, mean_coeffs, eigenvalues,
// eigenfunction_coeffs}; scores as CSV with header id,pc1..pcq.
std::string fpca_model_to_json(const FpcaModel& model);
FpcaModel fpca_model_from_json(const std::string& text);
std::string scores_to_csv(const ScoreMatrix& m);
ScoreMatrix scores_from_csv(const std::string& text);

}  // namespace fdaclust
