#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace dtrkit::svg {

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

struct LineSeries {
  std::string label;
  std::vector<double> y;  // NaN leaves a gap
};

struct HLine {
  std::string label;
  double y = 0.0;
};

/// Tukey boxes: quartiles, whiskers to the furthest point within 1.5 IQR,
/// remaining points drawn individually.
void write_boxplot(std::ostream& os, const std::string& title, const std::vector<BoxGroup>& groups);

void write_line(std::ostream& os, const std::string& title, const std::vector<std::string>& x_labels,
                const std::vector<LineSeries>& series, const std::vector<HLine>& hlines = {});

/// One cell per entry; values are clamped to [lo, hi] and mapped to a
/// blue-white-red scale. NaN cells are grey.
void write_heatmap(std::ostream& os, const std::string& title, const Eigen::MatrixXd& m, double lo = -1.0,
                   double hi = 1.0);

void write_histogram(std::ostream& os, const std::string& title, const std::map<double, std::size_t>& counts);

/// Strict upper triangle from `upper`, strict lower triangle from `lower`,
/// diagonal from `upper`.
Eigen::MatrixXd compose_triangles(const Eigen::MatrixXd& upper, const Eigen::MatrixXd& lower);

/// Fill colour used by write_heatmap, as #rrggbb.
std::string heat_color(double v, double lo, double hi);

}  // namespace dtrkit::svg
