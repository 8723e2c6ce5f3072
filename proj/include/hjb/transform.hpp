#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hjb/domain.hpp"
#include "hjb/errors.hpp"
#include "hjb/field.hpp"

namespace hjb {

/// z = -2 sigma^2 ln u. Requires u > 0 at every inside node.
template <StructuredGrid G>
ScalarField<G> value_function(const ScalarField<G>& u, double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgument("value_function: sigma must be positive");
    const double scale = -2.0 * sigma * sigma;
    ScalarField<G> z(u.grid, 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u[k] > 0.0) {
            z[k] = scale * std::log(u[k]) + 0.0;  // no -0 when u == 1
        } else if (u.grid->is_inside(k)) {
            throw InvalidData("value_function: u must be positive at inside nodes (node " +
                              std::to_string(k) + ")");
        }
    }
    return z;
}

namespace detail {

// Second-order differences along one strided line of n samples:
// central inside, one-sided (3f0 - 4f1 + f2)/(2h) at the ends.
inline void differentiate_line(const double* f, double* out, std::size_t n, std::size_t stride, double h) {
    const double inv2h = 1.0 / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i * stride] = (f[(i + 1) * stride] - f[(i - 1) * stride]) * inv2h;
    }
    out[0] = (4.0 * (f[stride] - f[0]) - (f[2 * stride] - f[0])) * inv2h;
    const std::size_t e = (n - 1) * stride;
    out[e] = (4.0 * (f[e] - f[e - stride]) - (f[e] - f[e - 2 * stride])) * inv2h;
}

}  // namespace detail

/// Finite-difference gradient over the whole grid (mask ignored in 2D).
inline VectorField<Grid1D> gradient(const ScalarField<Grid1D>& f) {
    const std::size_t n = f.size();
    if (n < 3) throw InvalidArgument("gradient: need at least 3 nodes");
    VectorField<Grid1D> g{f.grid, {std::vector<double>(n)}};
    detail::differentiate_line(f.values.data(), g.components[0].data(), n, 1, f.grid->spacing());
    return g;
}

inline VectorField<MaskedGrid2D> gradient(const ScalarField<MaskedGrid2D>& f) {
    const MaskedGrid2D& grid = *f.grid;
    const std::size_t nx = grid.nx();
    const std::size_t ny = grid.ny();
    if (nx < 3 || ny < 3) throw InvalidArgument("gradient: need at least 3 nodes along each axis");
    VectorField<MaskedGrid2D> g{f.grid, {std::vector<double>(f.size()), std::vector<double>(f.size())}};
    const double h = grid.spacing();
    for (std::size_t j = 0; j < ny; ++j) {
        detail::differentiate_line(f.values.data() + j, g.components[0].data() + j, nx, ny, h);
    }
    for (std::size_t i = 0; i < nx; ++i) {
        detail::differentiate_line(f.values.data() + i * ny, g.components[1].data() + i * ny, ny, 1, h);
    }
    return g;
}

/// Minimiser of the Hamiltonian: p* = -grad(z) / 2.
template <StructuredGrid G>
ControlField<G> optimal_control(const ScalarField<G>& z) {
    ControlField<G> p = gradient(z);
    for (auto& component : p.components) {
        for (double& v : component) v *= -0.5;
    }
    return p;
}

/// Linear (1D) / bilinear (2D) interpolation of each component; zero outside the grid rectangle.
template <StructuredGrid G>
Point<G::dimension> query_control(const ControlField<G>& p, const Point<G::dimension>& at) {
    Point<G::dimension> out{};
    for (std::size_t d = 0; d < G::dimension; ++d) {
        out[d] = interpolate(*p.grid, std::span<const double>(p.components[d]), at);
    }
    return out;
}

}  // namespace hjb
