#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dtrkit::csv {

/// Splits one CSV line on commas. Quoting is not supported; none of the
/// formats read here need it.
std::vector<std::string> split(std::string_view line);

std::string_view trim(std::string_view s);

/// Reads all non-empty lines, checks the header matches `expected` exactly
/// and returns the data rows split into fields.
std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 const std::vector<std::string>& expected);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Shortest round-trip representation, at most 17 significant digits.
std::string format_double(double v);

/// Square matrix with a label header row and column.
void write_labeled_matrix(std::ostream& os, const Eigen::MatrixXd& m,
                          const std::vector<std::string>& labels);

}  // namespace dtrkit::csv
