#include "s2chunk/eigen.hpp"

#include "s2chunk/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace s2chunk {

namespace {

double max_off_diagonal(const Matrix& a) {
    double m = 0.0;
    for (std::size_t p = 0; p < a.rows(); ++p)
        for (std::size_t q = p + 1; q < a.cols(); ++q) m = std::max(m, std::abs(a(p, q)));
    return m;
}

// A <- J^T A J and V <- V J for the rotation in the (p, q) plane that zeroes A(p, q).
// `vt` holds V transposed so both updated vectors are contiguous rows.
void rotate(Matrix& a, Matrix& vt, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    double t;
    if (std::abs(theta) > 1e150) {
        t = 0.5 / theta;
    } else {
        t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    }
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const std::size_t n = a.rows();

    const double app = a(p, p) - t * apq;
    const double aqq = a(q, q) + t * apq;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == p || k == q) continue;
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = a(p, k) = c * akp - s * akq;
        a(k, q) = a(q, k) = s * akp + c * akq;
    }
    a(p, p) = app;
    a(q, q) = aqq;
    a(p, q) = a(q, p) = 0.0;

    auto vp = vt.row(p);
    auto vq = vt.row(q);
    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = vp[k];
        const double vkq = vq[k];
        vp[k] = c * vkp - s * vkq;
        vq[k] = s * vkp + c * vkq;
    }
}

}  // namespace

EigenDecomposition symmetric_eigendecomposition(const Matrix& input, double tolerance,
                                                int max_sweeps) {
    if (input.rows() != input.cols()) {
        throw std::invalid_argument("eigendecomposition requires a square matrix");
    }
    if (!(tolerance > 0.0)) {
        throw std::invalid_argument("eigendecomposition tolerance must be positive");
    }
    const std::size_t n = input.rows();
    const double scale = std::max(1.0, input.max_abs());
    if (!input.is_symmetric(1e-9 * scale)) {
        throw std::invalid_argument("eigendecomposition requires a symmetric matrix");
    }

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));
    Matrix vt = Matrix::identity(n);

    const double threshold = tolerance * scale;
    int sweeps = 0;
    while (max_off_diagonal(a) > threshold) {
        if (sweeps == max_sweeps) {
            throw NumericalError("Jacobi eigendecomposition did not converge in " +
                                 std::to_string(max_sweeps) + " sweeps");
        }
        // Entries already within tolerance are left for later sweeps to settle.
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) > threshold) rotate(a, vt, p, q);
            }
        }
        ++sweeps;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    EigenDecomposition out;
    out.sweeps = sweeps;
    out.values.reserve(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.values.push_back(a(src, src));
        double sign = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(vt(src, i)) > 1e-12) {
                sign = vt(src, i) > 0.0 ? 1.0 : -1.0;
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = sign * vt(src, i);
    }
    return out;
}

}  // namespace s2chunk
