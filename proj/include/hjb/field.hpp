#pragma once

#include <algorithm>
#include <cmath>
#include <array>
#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "hjb/domain.hpp"
#include "hjb/errors.hpp"

namespace hjb {

template <class G>
concept StructuredGrid = requires(const G& g, std::size_t k) {
    { G::dimension } -> std::convertible_to<std::size_t>;
    { g.size() } -> std::convertible_to<std::size_t>;
    { g.spacing() } -> std::convertible_to<double>;
    { g.is_inside(k) } -> std::convertible_to<bool>;
    { g.is_boundary(k) } -> std::convertible_to<bool>;
    { g.is_interior(k) } -> std::convertible_to<bool>;
    { g.coordinates(k) } -> std::same_as<Point<G::dimension>>;
    { g.layer_depth() } -> std::same_as<std::vector<int>>;
};

/// One real value per grid node. For masked grids only inside nodes are meaningful.
template <StructuredGrid G>
struct ScalarField {
    std::shared_ptr<const G> grid;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(std::shared_ptr<const G> g, double fill)
        : grid(std::move(g)), values(grid->size(), fill) {}
    ScalarField(std::shared_ptr<const G> g, std::vector<double> v)
        : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid->size()) {
            throw InvalidArgument("ScalarField: value count does not match grid size");
        }
    }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t k) const { return values[k]; }
    double& operator[](std::size_t k) { return values[k]; }
};

/// Per-node vector with one component array per spatial dimension.
template <StructuredGrid G>
struct VectorField {
    static constexpr std::size_t dimension = G::dimension;

    std::shared_ptr<const G> grid;
    std::array<std::vector<double>, G::dimension> components;

    Point<G::dimension> at_node(std::size_t k) const {
        Point<G::dimension> v{};
        for (std::size_t d = 0; d < G::dimension; ++d) v[d] = components[d][k];
        return v;
    }
};

/// Feedback control sampled on a grid; queried off-grid by interpolation.
template <StructuredGrid G>
using ControlField = VectorField<G>;

template <StructuredGrid G>
bool same_grid(const ScalarField<G>& lhs, const ScalarField<G>& rhs) {
    if (!lhs.grid || !rhs.grid) return false;
    return lhs.grid == rhs.grid || *lhs.grid == *rhs.grid;
}

namespace detail {

// Locate x in a uniform ascending axis: returns cell index and weight of the
// right node, or false when x lies outside [axis.front(), axis.back()].
inline bool locate(std::span<const double> axis, double x, std::size_t& cell, double& weight) {
    if (!(x >= axis.front() && x <= axis.back())) return false;
    const double h = axis[1] - axis[0];
    auto i = static_cast<std::ptrdiff_t>(std::floor((x - axis.front()) / h));
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(axis.size()) - 2);
    // Nudge across cell edges that the division put on the wrong side.
    if (x < axis[static_cast<std::size_t>(i)] && i > 0) --i;
    if (x > axis[static_cast<std::size_t>(i) + 1] &&
        i + 2 < static_cast<std::ptrdiff_t>(axis.size())) {
        ++i;
    }
    cell = static_cast<std::size_t>(i);
    weight = (x - axis[cell]) / (axis[cell + 1] - axis[cell]);
    weight = std::clamp(weight, 0.0, 1.0);
    return true;
}

}  // namespace detail

/// Piecewise-linear interpolation of node values; zero outside [0, length].
inline double interpolate(const Grid1D& grid, std::span<const double> values, const Point<1>& at) {
    std::size_t i = 0;
    double w = 0.0;
    if (!detail::locate(grid.nodes(), at[0], i, w)) return 0.0;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

/// Bilinear interpolation over the full rectangle (mask ignored); zero outside it.
inline double interpolate(const MaskedGrid2D& grid, std::span<const double> values, const Point<2>& at) {
    std::size_t i = 0;
    std::size_t j = 0;
    double wx = 0.0;
    double wy = 0.0;
    if (!detail::locate(grid.x_axis(), at[0], i, wx)) return 0.0;
    if (!detail::locate(grid.y_axis(), at[1], j, wy)) return 0.0;
    const double f00 = values[grid.index(i, j)];
    const double f01 = values[grid.index(i, j + 1)];
    const double f10 = values[grid.index(i + 1, j)];
    const double f11 = values[grid.index(i + 1, j + 1)];
    return (1.0 - wx) * ((1.0 - wy) * f00 + wy * f01) + wx * ((1.0 - wy) * f10 + wy * f11);
}

template <StructuredGrid G>
double interpolate(const ScalarField<G>& f, const Point<G::dimension>& at) {
    return interpolate(*f.grid, f.values, at);
}

}  // namespace hjb
