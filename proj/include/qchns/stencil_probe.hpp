#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "qchns/grid.hpp"

namespace qchns {

/// Applies a stacked-field linear operator; slot s of the input/output holds
/// one nx-by-ny field. Unknown ordering is cell-major per slot:
/// index = slot * nx * ny + j * nx + i.
using StackedOp =
    std::function<void(const std::vector<Array2d>& in, std::vector<Array2d>& out)>;

/// Assemble the matrix of a local stencil operator by probing with colored
/// unit fields. All stencils used here have per-axis reach <= radius, so
/// seeds spaced 2*radius+2 apart never interact and each probe recovers one
/// full column set. The result is exactly the matrix of `op`.
Eigen::SparseMatrix<double> probe_stencil_matrix(const Grid& g, int in_slots, int out_slots,
                                                 int radius, const StackedOp& op);

}  // namespace qchns
