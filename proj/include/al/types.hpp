#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace al {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using IndexList = std::vector<std::size_t>;
using Seed = std::uint64_t;

/// Rows of `source` picked by `rows`, in that order.
Matrix gather_rows(const Matrix& source, const IndexList& rows);

}  // namespace al
