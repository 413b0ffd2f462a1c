#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qvf {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<Index>;

// Count data: one sample per row, one node per column. Values are stored as
// doubles but are exact integers for every discrete family, so cell grouping
// can compare them with operator==.
using CountMatrix = Matrix;

}  // namespace qvf
