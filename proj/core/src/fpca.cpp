#include "fdaclust/fpca.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fdaclust/error.hpp"
#include "text_util.hpp"

namespace fdaclust {

namespace {

void require_shared_basis(const std::vector<FunctionalDatum>& data) {
  for (std::size_t i = 1; i < data.size(); ++i)
    if (!(*data[i].basis == *data[0].basis))
      fail(ErrorCategory::data, "functional data mix different bases (datum '" + data[i].id + "')");
}

Eigen::MatrixXd coefficient_matrix(const std::vector<FunctionalDatum>& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index k = data[0].coeffs.size();
  Eigen::MatrixXd a(n, k);
  for (Eigen::Index i = 0; i < n; ++i) a.row(i) = data[static_cast<std::size_t>(i)].coeffs.transpose();
  return a;
}

/// Flip each column so its largest-magnitude entry is positive; ties go to
/// the lowest index.
void fix_signs(Eigen::MatrixXd& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const double mag = std::abs(columns(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (columns(arg, j) < 0.0) columns.col(j) = -columns.col(j);
  }
}

}  // namespace

FunctionalDatum mean_function(const std::vector<FunctionalDatum>& data) {
  if (data.empty()) fail(ErrorCategory::data, "mean of an empty collection");
  require_shared_basis(data);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(data[0].coeffs.size());
  for (const auto& d : data) mean += d.coeffs;
  mean /= static_cast<double>(data.size());
  return FunctionalDatum{"mean", data[0].basis, std::move(mean)};
}

FpcaModel fit_fpca(const std::vector<FunctionalDatum>& data) {
  if (data.size() < 2) fail(ErrorCategory::data, "FPCA needs at least 2 curves");
  require_shared_basis(data);
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index k = data[0].coeffs.size();

  FpcaModel model;
  model.basis = data[0].basis;
  model.gram = model.basis->gram_matrix();

  Eigen::MatrixXd a = coefficient_matrix(data);
  model.mean_coeffs = a.colwise().mean();
  a.rowwise() -= model.mean_coeffs.transpose();
  const Eigen::MatrixXd s = a.transpose() * a / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> wes(model.gram);
  if (wes.info() != Eigen::Success || wes.eigenvalues().minCoeff() <= 0.0)
    fail(ErrorCategory::numeric, "Gram matrix is not positive definite");
  const Eigen::VectorXd wroot = wes.eigenvalues().cwiseSqrt();
  const Eigen::MatrixXd whalf =
      wes.eigenvectors() * wroot.asDiagonal() * wes.eigenvectors().transpose();
  const Eigen::MatrixXd winvhalf =
      wes.eigenvectors() * wroot.cwiseInverse().asDiagonal() * wes.eigenvectors().transpose();

  Eigen::MatrixXd m = whalf * s * whalf;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> mes(m);
  if (mes.info() != Eigen::Success) fail(ErrorCategory::numeric, "eigensolve failed");

  // ascending from Eigen; reverse, clamp noise, truncate; variance at
  // centering-round-off scale (relative to the mean function's squared norm)
  // counts as zero so that constant cohorts yield an empty spectrum
  Eigen::VectorXd evals = mes.eigenvalues().reverse();
  Eigen::MatrixXd evecs = mes.eigenvectors().rowwise().reverse();
  const double mean_norm2 = model.mean_coeffs.dot(model.gram * model.mean_coeffs);
  const double floor = std::max(1e-12 * std::max(evals[0], 0.0), 1e-20 * mean_norm2);
  for (Eigen::Index j = 0; j < evals.size(); ++j)
    if (evals[j] < floor) evals[j] = 0.0;

  int q_max = 0;
  const int cap = static_cast<int>(std::min<Eigen::Index>(n - 1, k));
  while (q_max < cap && evals[q_max] > 0.0) ++q_max;

  model.eigenvalues = evals.head(q_max);
  model.eigenfunction_coeffs = winvhalf * evecs.leftCols(q_max);
  fix_signs(model.eigenfunction_coeffs);
  model.q_max = q_max;
  return model;
}

ScoreMatrix scores(const std::vector<FunctionalDatum>& data, const FpcaModel& model, int q) {
  if (q < 0 || q > model.q_max)
    fail(ErrorCategory::domain, "q = " + std::to_string(q) + " out of range 0.." + std::to_string(model.q_max));
  require_shared_basis(data);
  if (!(*data[0].basis == *model.basis)) fail(ErrorCategory::data, "data basis differs from model basis");

  Eigen::MatrixXd a = coefficient_matrix(data);
  a.rowwise() -= model.mean_coeffs.transpose();
  ScoreMatrix out;
  for (const auto& d : data) out.ids.push_back(d.id);
  out.scores = a * model.gram * model.eigenfunction_coeffs.leftCols(q);
  if (out.scores.rows() > 1) {
    const Eigen::RowVectorXd mean = out.scores.colwise().mean();
    out.column_variances = ((out.scores.rowwise() - mean).colwise().squaredNorm() /
                            static_cast<double>(out.scores.rows() - 1))
                               .transpose();
  } else {
    out.column_variances = Eigen::VectorXd::Zero(q);
  }
  return out;
}

FunctionalDatum reconstruct(const FpcaModel& model, const Eigen::VectorXd& score_row, int q,
                            const std::string& id) {
  if (q < 0 || q > model.q_max)
    fail(ErrorCategory::domain, "q = " + std::to_string(q) + " out of range 0.." + std::to_string(model.q_max));
  if (score_row.size() < q) fail(ErrorCategory::domain, "score row shorter than q");
  Eigen::VectorXd coeffs = model.mean_coeffs;
  if (q > 0) coeffs += model.eigenfunction_coeffs.leftCols(q) * score_row.head(q);
  return FunctionalDatum{id, model.basis, std::move(coeffs)};
}

std::vector<double> explained_variance(const FpcaModel& model) {
  const double total = model.eigenvalues.sum();
  if (!(total > 0.0)) fail(ErrorCategory::data, "degenerate cohort: all eigenvalues are zero");
  std::vector<double> cumulative(static_cast<std::size_t>(model.eigenvalues.size()));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < model.eigenvalues.size(); ++j) {
    acc += model.eigenvalues[j];
    cumulative[static_cast<std::size_t>(j)] = acc / total;
  }
  return cumulative;
}

int choose_q(const FpcaModel& model, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    fail(ErrorCategory::domain, "explained-variance threshold must be in (0, 1]");
  const auto cumulative = explained_variance(model);
  for (std::size_t j = 0; j < cumulative.size(); ++j)
    if (cumulative[j] >= threshold) return static_cast<int>(j) + 1;
  return static_cast<int>(cumulative.size());
}

std::string fpca_model_to_json(const FpcaModel& model) {
  nlohmann::json j;
  j["basis"] = {{"order", model.basis->order()}, {"interior_knots", model.basis->interior_knots()}};
  j["mean_coeffs"] =
      std::vector<double>(model.mean_coeffs.data(), model.mean_coeffs.data() + model.mean_coeffs.size());
  j["eigenvalues"] =
      std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
  nlohmann::json funcs = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.eigenfunction_coeffs.cols(); ++c) {
    const auto col = model.eigenfunction_coeffs.col(c);
    funcs.push_back(std::vector<double>(col.data(), col.data() + col.size()));
  }
  j["eigenfunction_coeffs"] = std::move(funcs);
  return j.dump(2) + "\n";
}

FpcaModel fpca_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("FPCA model JSON: ") + e.what());
  }
  FpcaModel model;
  try {
    model.basis = make_basis(j.at("basis").at("order").get<int>(),
                             j.at("basis").at("interior_knots").get<std::vector<double>>());
    const auto mean = j.at("mean_coeffs").get<std::vector<double>>();
    const auto evals = j.at("eigenvalues").get<std::vector<double>>();
    model.mean_coeffs = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.eigenvalues =
        Eigen::Map<const Eigen::VectorXd>(evals.data(), static_cast<Eigen::Index>(evals.size()));
    const auto funcs = j.at("eigenfunction_coeffs").get<std::vector<std::vector<double>>>();
    model.q_max = static_cast<int>(funcs.size());
    model.eigenfunction_coeffs.resize(model.basis->size(), model.q_max);
    for (int c = 0; c < model.q_max; ++c) {
      if (static_cast<int>(funcs[static_cast<std::size_t>(c)].size()) != model.basis->size())
        fail(ErrorCategory::schema, "eigenfunction coefficient length mismatch");
      model.eigenfunction_coeffs.col(c) = Eigen::Map<const Eigen::VectorXd>(
          funcs[static_cast<std::size_t>(c)].data(), model.basis->size());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::schema, std::string("FPCA model JSON: ") + e.what());
  }
  model.gram = model.basis->gram_matrix();
  return model;
}

std::string scores_to_csv(const ScoreMatrix& m) {
  std::string out = "id";
  for (Eigen::Index j = 0; j < m.scores.cols(); ++j) out += ",pc" + std::to_string(j + 1);
  out += '\n';
  for (Eigen::Index i = 0; i < m.scores.rows(); ++i) {
    out += m.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.scores.cols(); ++j) {
      out += ',';
      out += detail::format_double(m.scores(i, j));
    }
    out += '\n';
  }
  return out;
}

ScoreMatrix scores_from_csv(const std::string& text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty() || detail::split(lines[0], ',').front() != "id")
    fail(ErrorCategory::schema, "scores CSV must start with header id,pc1,...");
  const auto header = detail::split(lines[0], ',');
  const auto q = static_cast<Eigen::Index>(header.size()) - 1;
  ScoreMatrix out;
  out.scores.resize(static_cast<Eigen::Index>(lines.size()) - 1, q);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cols = detail::split(lines[i], ',');
    if (static_cast<Eigen::Index>(cols.size()) != q + 1)
      fail(ErrorCategory::parse, "scores CSV line " + std::to_string(i + 1) + ": column count mismatch");
    out.ids.emplace_back(detail::trim(cols[0]));
    for (Eigen::Index j = 0; j < q; ++j)
      out.scores(static_cast<Eigen::Index>(i) - 1, j) = detail::parse_double(
          cols[static_cast<std::size_t>(j) + 1], ErrorCategory::parse, "scores CSV line " + std::to_string(i + 1));
  }
  if (out.scores.rows() > 1) {
    const Eigen::RowVectorXd mean = out.scores.colwise().mean();
    out.column_variances = ((out.scores.rowwise() - mean).colwise().squaredNorm() /
                            static_cast<double>(out.scores.rows() - 1))
                               .transpose();
  } else {
    out.column_variances = Eigen::VectorXd::Zero(q);
  }
  return out;
}

}  // namespace fdaclust
