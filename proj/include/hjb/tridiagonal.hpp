#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "hjb/errors.hpp"

namespace hjb {

/**
 * Thomas elimination for lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i].
 * lower[0] and upper[n-1] are ignored. No pivoting: intended for diagonally
 * dominant systems.
 */
inline std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                             std::span<const double> upper, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n) {
        throw InvalidArgument("solve_tridiagonal: band and rhs sizes differ");
    }
    if (n == 0) return {};

    std::vector<double> c(n);
    std::vector<double> d(n);
    double pivot = diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw InternalError("solve_tridiagonal: zero pivot at row 0");
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * c[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot)) {
            throw InternalError("solve_tridiagonal: singular system at row " + std::to_string(i));
        }
        c[i] = (i + 1 < n) ? upper[i] / pivot : 0.0;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    return x;
}

}  // namespace hjb
