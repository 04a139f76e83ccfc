#include "fdaclust/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fdaclust/error.hpp"
#include "fdaclust/fpca.hpp"

namespace fdaclust {

namespace {

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                          "#66ccee", "#aa3377", "#bbbbbb", "#222222"};

const char* color_of(int index) { return kPalette[index % 8]; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

/// One rectangular data panel inside the SVG pixel plane.
class Panel {
 public:
  Panel(double px, double py, double width, double height) : px_(px), py_(py), w_(width), h_(height) {}

  void set_range(double x0, double x1, double y0, double y1) {
    const auto pad = [](double& lo, double& hi) {
      if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
      } else {
        const double p = 0.05 * (hi - lo);
        lo -= p;
        hi += p;
      }
    };
    pad(x0, x1);
    pad(y0, y1);
    x0_ = x0;
    x1_ = x1;
    y0_ = y0;
    y1_ = y1;
  }

  double x(double v) const { return px_ + (v - x0_) / (x1_ - x0_) * w_; }
  double y(double v) const { return py_ + h_ - (v - y0_) / (y1_ - y0_) * h_; }

  void frame(std::string& svg) const {
    svg += "<path d=\"M " + fmt(px_) + " " + fmt(py_) + " L " + fmt(px_) + " " + fmt(py_ + h_) +
           " L " + fmt(px_ + w_) + " " + fmt(py_ + h_) + "\" fill=\"none\" stroke=\"#333333\" "
           "stroke-width=\"1\"/>\n";
  }

  void path(std::string& svg, const std::vector<std::pair<double, double>>& points,
            const char* color, double width) const {
    if (points.empty()) return;
    std::string d = "M " + fmt(x(points[0].first)) + " " + fmt(y(points[0].second));
    for (std::size_t i = 1; i < points.size(); ++i)
      d += " L " + fmt(x(points[i].first)) + " " + fmt(y(points[i].second));
    svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           fmt(width) + "\"/>\n";
  }

  void dot(std::string& svg, double vx, double vy, const char* color) const {
    svg += "<circle cx=\"" + fmt(x(vx)) + "\" cy=\"" + fmt(y(vy)) +
           "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
  }

  void bar(std::string& svg, double vx0, double vx1, double vy0, double vy1,
           const char* color) const {
    svg += "<rect x=\"" + fmt(x(vx0)) + "\" y=\"" + fmt(y(vy1)) + "\" width=\"" +
           fmt(x(vx1) - x(vx0)) + "\" height=\"" + fmt(y(vy0) - y(vy1)) + "\" fill=\"" + color +
           "\"/>\n";
  }

  void hline(std::string& svg, double vy, const char* color) const {
    svg += "<path d=\"M " + fmt(px_) + " " + fmt(y(vy)) + " L " + fmt(px_ + w_) + " " +
           fmt(y(vy)) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  }

  void corner_labels(std::string& svg) const {
    label(svg, px_, py_ + h_ + 14.0, fmt(x0_));
    label(svg, px_ + w_ - 28.0, py_ + h_ + 14.0, fmt(x1_));
    label(svg, px_ - 34.0, py_ + h_, fmt(y0_));
    label(svg, px_ - 34.0, py_ + 10.0, fmt(y1_));
  }

  void title(std::string& svg, const std::string& text) const {
    label(svg, px_, py_ - 6.0, text);
  }

  double left() const { return px_; }
  double top() const { return py_; }
  double width() const { return w_; }
  double height() const { return h_; }

 private:
  static void label(std::string& svg, double px, double py, const std::string& text) {
    svg += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(py) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">" + escape(text) +
           "</text>\n";
  }

  double px_, py_, w_, h_;
  double x0_ = 0.0, x1_ = 1.0, y0_ = 0.0, y1_ = 1.0;
};

std::string svg_open(double width, double height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "width=\"" +
         fmt(width) + "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
         fmt(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

std::vector<std::pair<double, double>> curve_points(const std::vector<double>& grid,
                                                    const Eigen::MatrixXd& values,
                                                    Eigen::Index row) {
  std::vector<std::pair<double, double>> points;
  points.reserve(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    points.emplace_back(grid[j], values(row, static_cast<Eigen::Index>(j)));
  return points;
}

}  // namespace

std::string spaghetti_svg(const Cohort& cohort) {
  const Eigen::MatrixXd values = cohort.values_on_grid();
  const auto& grid = cohort.grid();
  Panel panel(56.0, 28.0, 640.0, 420.0);
  panel.set_range(grid.front(), grid.back(), values.minCoeff(), values.maxCoeff());

  std::string svg = svg_open(720.0, 480.0);
  panel.frame(svg);
  panel.corner_labels(svg);
  panel.title(svg, "cohort curves (n = " + std::to_string(cohort.size()) + ")");
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    panel.path(svg, curve_points(grid, values, i), "#44777788", 1.0);
  svg += "</svg>\n";
  return svg;
}

std::string cluster_curves_svg(const Cohort& cohort, const Clustering& clustering) {
  if (clustering.labels.size() != cohort.size())
    fail(ErrorCategory::data, "clustering and cohort sizes disagree");
  const Eigen::MatrixXd values = cohort.values_on_grid();
  const auto& grid = cohort.grid();
  Panel panel(56.0, 28.0, 640.0, 420.0);
  panel.set_range(grid.front(), grid.back(), values.minCoeff(), values.maxCoeff());

  std::string svg = svg_open(720.0, 480.0);
  panel.frame(svg);
  panel.corner_labels(svg);
  panel.title(svg, "curves by cluster (k = " + std::to_string(clustering.k) + ")");
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    panel.path(svg, curve_points(grid, values, i),
               color_of(clustering.labels[static_cast<std::size_t>(i)] - 1), 0.8);
  for (int c = 1; c <= clustering.k; ++c) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(values.cols());
    int count = 0;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      if (clustering.labels[static_cast<std::size_t>(i)] == c) {
        mean += values.row(i);
        ++count;
      }
    mean /= static_cast<double>(count);
    std::vector<std::pair<double, double>> points;
    for (std::size_t j = 0; j < grid.size(); ++j)
      points.emplace_back(grid[j], mean[static_cast<Eigen::Index>(j)]);
    panel.path(svg, points, color_of(c - 1), 3.0);
  }
  svg += "</svg>\n";
  return svg;
}

std::string membership_bars_svg(const Eigen::MatrixXd& membership,
                                const std::vector<std::string>& ids) {
  const Eigen::Index n = membership.rows();
  if (n == 0) fail(ErrorCategory::data, "membership matrix is empty");
  if (static_cast<Eigen::Index>(ids.size()) != n)
    fail(ErrorCategory::data, "membership rows and ids disagree");
  Panel panel(56.0, 28.0, 640.0, 420.0);
  panel.set_range(0.0, static_cast<double>(n), 0.0, 1.0);

  std::string svg = svg_open(720.0, 480.0);
  panel.title(svg, "membership degrees (" + std::to_string(n) + " items)");
  for (Eigen::Index i = 0; i < n; ++i) {
    double base = 0.0;
    for (Eigen::Index c = 0; c < membership.cols(); ++c) {
      const double top = base + membership(i, c);
      panel.bar(svg, static_cast<double>(i) + 0.08, static_cast<double>(i) + 0.92, base, top,
                color_of(static_cast<int>(c)));
      base = top;
    }
  }
  panel.frame(svg);
  panel.corner_labels(svg);
  svg += "</svg>\n";
  return svg;
}

std::string scree_svg(const FpcaModel& model) {
  const Eigen::Index q = model.eigenvalues.size();
  if (q == 0) fail(ErrorCategory::data, "model has no components to plot");
  const auto cumulative = explained_variance(model);

  std::string svg = svg_open(960.0, 440.0);
  Panel scree(56.0, 40.0, 380.0, 340.0);
  scree.set_range(1.0, static_cast<double>(q), 0.0, model.eigenvalues.maxCoeff());
  scree.frame(svg);
  scree.corner_labels(svg);
  scree.title(svg, "eigenvalue scree");
  std::vector<std::pair<double, double>> points;
  for (Eigen::Index j = 0; j < q; ++j) points.emplace_back(static_cast<double>(j + 1), model.eigenvalues[j]);
  scree.path(svg, points, kPalette[0], 1.5);
  for (const auto& [px, py] : points) scree.dot(svg, px, py, kPalette[0]);

  Panel cum(540.0, 40.0, 380.0, 340.0);
  cum.set_range(1.0, static_cast<double>(q), 0.0, 1.0);
  cum.frame(svg);
  cum.corner_labels(svg);
  cum.title(svg, "cumulative explained variance");
  points.clear();
  for (Eigen::Index j = 0; j < q; ++j)
    points.emplace_back(static_cast<double>(j + 1), cumulative[static_cast<std::size_t>(j)]);
  cum.path(svg, points, kPalette[1], 1.5);
  for (const auto& [px, py] : points) cum.dot(svg, px, py, kPalette[1]);
  cum.hline(svg, 0.95, "#555555");

  svg += "</svg>\n";
  return svg;
}

std::string score_scatter_svg(const ScoreMatrix& scores, const Clustering* clustering) {
  const Eigen::Index q = scores.scores.cols();
  const Eigen::Index n = scores.scores.rows();
  if (q == 0 || n == 0) fail(ErrorCategory::data, "score matrix is empty");
  if (clustering && static_cast<Eigen::Index>(clustering->labels.size()) != n)
    fail(ErrorCategory::data, "clustering and score matrix sizes disagree");

  const double cell = 150.0;
  const double gap = 14.0;
  const double margin = 48.0;
  const double side = margin * 2 + static_cast<double>(q) * cell + static_cast<double>(q - 1) * gap;
  std::string svg = svg_open(side, side);

  for (Eigen::Index row = 0; row < q; ++row) {
    for (Eigen::Index col = 0; col < q; ++col) {
      Panel panel(margin + static_cast<double>(col) * (cell + gap),
                  margin + static_cast<double>(row) * (cell + gap), cell, cell);
      if (row == col) {
        panel.set_range(0.0, 1.0, 0.0, 1.0);
        panel.frame(svg);
        panel.title(svg, "pc" + std::to_string(row + 1));
        continue;
      }
      panel.set_range(scores.scores.col(col).minCoeff(), scores.scores.col(col).maxCoeff(),
                      scores.scores.col(row).minCoeff(), scores.scores.col(row).maxCoeff());
      panel.frame(svg);
      for (Eigen::Index i = 0; i < n; ++i) {
        const char* color =
            clustering ? color_of(clustering->labels[static_cast<std::size_t>(i)] - 1) : kPalette[0];
        panel.dot(svg, scores.scores(i, col), scores.scores(i, row), color);
      }
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace fdaclust
