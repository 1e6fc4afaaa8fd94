#pragma once

#include <string>

#include "rrp/dataset.hpp"

namespace rrp {

/// Reads a dataset from a UTF-8 CSV file with header x1,...,xd,y.
/// Non-finite or non-numeric cells are rejected with the (row, column)
/// coordinates in the message.
Dataset load_csv(const std::string& path);

/// Reads prediction inputs: header x1,...,xd with an optional trailing y
/// column that is ignored.
Eigen::MatrixXd load_csv_features(const std::string& path);

/// Writes a dataset in the same format, LF line endings, full double
/// precision.
void save_csv(const std::string& path, const Dataset& data);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace rrp
