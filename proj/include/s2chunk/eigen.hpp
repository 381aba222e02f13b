#pragma once

#include "s2chunk/matrix.hpp"

#include <vector>

namespace s2chunk {

struct EigenDecomposition {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column k is the eigenvector of values[k]
    int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps until every off-diagonal entry is at most `tolerance` (scaled by
/// max(1, |A|_max)). Eigenvectors are orthonormal and sign-normalized so that the
/// first nonzero component is positive. Throws NumericalError when `max_sweeps`
/// is exhausted and std::invalid_argument for non-square or asymmetric input.
EigenDecomposition symmetric_eigendecomposition(const Matrix& a, double tolerance = 1e-10,
                                                int max_sweeps = 100);

}  // namespace s2chunk
