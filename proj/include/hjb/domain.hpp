#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hjb/errors.hpp"

namespace hjb {

template <std::size_t Dim>
using Point = std::array<double, Dim>;

/**
 * Uniform grid on [0, length] with n nodes.
 *
 * The two end nodes are the Dirichlet boundary; every node lies in the
 * closed interval, so all of them count as "inside".
 */
class Grid1D {
public:
    static constexpr std::size_t dimension = 1;

    Grid1D(std::size_t n, double length) : length_(length) {
        if (n < 3) {
            throw InvalidArgument("Grid1D: need at least 3 nodes, got " + std::to_string(n));
        }
        if (!(length > 0.0) || !std::isfinite(length)) {
            throw InvalidArgument("Grid1D: length must be positive and finite");
        }
        // Same construction as numpy.linspace: start + i*step, last node pinned.
        const double step = length / static_cast<double>(n - 1);
        nodes_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            nodes_[i] = static_cast<double>(i) * step;
        }
        nodes_.back() = length;
        h_ = nodes_[1] - nodes_[0];
    }

    std::size_t size() const { return nodes_.size(); }
    double spacing() const { return h_; }
    double length() const { return length_; }
    std::span<const double> nodes() const { return nodes_; }
    double node(std::size_t i) const { return nodes_[i]; }

    bool is_inside(std::size_t k) const { return k < nodes_.size(); }
    bool is_boundary(std::size_t k) const { return k == 0 || k + 1 == nodes_.size(); }
    bool is_interior(std::size_t k) const { return is_inside(k) && !is_boundary(k); }

    Point<1> coordinates(std::size_t k) const { return {nodes_[k]}; }

    /// Layers of nodes between k and the nearest boundary node (boundary = 0).
    std::vector<int> layer_depth() const {
        std::vector<int> depth(size());
        for (std::size_t k = 0; k < size(); ++k) {
            depth[k] = static_cast<int>(std::min(k, size() - 1 - k));
        }
        return depth;
    }

    friend bool operator==(const Grid1D& lhs, const Grid1D& rhs) {
        return lhs.length_ == rhs.length_ && lhs.nodes_.size() == rhs.nodes_.size();
    }

private:
    double length_;
    double h_ = 0.0;
    std::vector<double> nodes_;
};

inline Grid1D build_interval_grid(std::size_t n, double length) { return Grid1D(n, length); }

/// Axis-aligned ellipse (y1/a)^2 + (y2/b)^2 < 1 centred at the origin.
struct EllipseSpec {
    double a = 1.0;
    double b = 1.0;

    EllipseSpec() = default;
    EllipseSpec(double semi_a, double semi_b) : a(semi_a), b(semi_b) {
        if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
            throw InvalidArgument("EllipseSpec: semi-axes must be positive");
        }
    }

    double level(const Point<2>& y) const {
        const double s = y[0] / a;
        const double t = y[1] / b;
        return s * s + t * t;
    }

    bool contains(const Point<2>& y) const { return level(y) < 1.0; }

    /// Boundary point along the ray from the origin at angle theta.
    Point<2> boundary_point(double theta) const {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double t = 1.0 / std::sqrt((c / a) * (c / a) + (s / b) * (s / b));
        return {t * c, t * s};
    }

    friend bool operator==(const EllipseSpec&, const EllipseSpec&) = default;
};

/// A point of the domain that stopping rules are measured from.
class ReferencePoint {
public:
    ReferencePoint(const Point<2>& x0, const EllipseSpec& spec) : x0_(x0) {
        if (!spec.contains(x0)) {
            throw InvalidArgument("ReferencePoint: x0 must lie strictly inside the ellipse");
        }
    }

    const Point<2>& point() const { return x0_; }

private:
    Point<2> x0_;
};

/**
 * Uniform lattice over the bounding rectangle of an ellipse with an
 * inside / boundary / interior classification.
 *
 * Node (i, j) has coordinates (x_axis[i], y_axis[j]) and flat index i*ny + j,
 * so the first index runs along y1 (meshgrid "ij" ordering). A node is inside
 * iff the strict ellipse inequality holds; an inside node is boundary iff one
 * of its four axis neighbours is not inside (off-lattice counts as not
 * inside). Boundary nodes carry the Dirichlet value.
 */
class MaskedGrid2D {
public:
    static constexpr std::size_t dimension = 2;

    MaskedGrid2D(const EllipseSpec& spec, double h) : ellipse_(spec), h_(h) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw InvalidArgument("MaskedGrid2D: spacing must be positive");
        }
        if (h >= std::min(spec.a, spec.b)) {
            throw InvalidArgument("MaskedGrid2D: spacing must be smaller than both semi-axes");
        }
        x_axis_ = centred_axis(spec.a, h);
        y_axis_ = centred_axis(spec.b, h);
        inside_.assign(x_axis_.size() * y_axis_.size(), 0);
        for (std::size_t i = 0; i < nx(); ++i) {
            for (std::size_t j = 0; j < ny(); ++j) {
                inside_[index(i, j)] = ellipse_.contains({x_axis_[i], y_axis_[j]}) ? 1 : 0;
            }
        }
        boundary_ = classify_boundary(inside_, nx(), ny());
    }

    const EllipseSpec& ellipse() const { return ellipse_; }
    double spacing() const { return h_; }
    std::size_t nx() const { return x_axis_.size(); }
    std::size_t ny() const { return y_axis_.size(); }
    std::size_t size() const { return inside_.size(); }
    std::span<const double> x_axis() const { return x_axis_; }
    std::span<const double> y_axis() const { return y_axis_; }

    std::size_t index(std::size_t i, std::size_t j) const { return i * ny() + j; }
    std::size_t row(std::size_t k) const { return k / ny(); }
    std::size_t col(std::size_t k) const { return k % ny(); }

    bool is_inside(std::size_t k) const { return inside_[k] != 0; }
    bool is_boundary(std::size_t k) const { return boundary_[k] != 0; }
    bool is_interior(std::size_t k) const { return inside_[k] != 0 && boundary_[k] == 0; }

    /// Inside test with off-lattice indices treated as outside.
    bool inside_at(std::ptrdiff_t i, std::ptrdiff_t j) const {
        if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(nx()) ||
            j >= static_cast<std::ptrdiff_t>(ny())) {
            return false;
        }
        return is_inside(index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }

    Point<2> coordinates(std::size_t k) const { return {x_axis_[row(k)], y_axis_[col(k)]}; }

    std::span<const std::uint8_t> inside_mask() const { return inside_; }
    std::span<const std::uint8_t> boundary_mask() const { return boundary_; }

    std::size_t count_inside() const { return count(inside_); }
    std::size_t count_boundary() const { return count(boundary_); }
    std::size_t count_interior() const { return count_inside() - count_boundary(); }

    /// Boundary-layer classification of an arbitrary inside mask on an nx-by-ny lattice.
    static std::vector<std::uint8_t> classify_boundary(std::span<const std::uint8_t> inside,
                                                       std::size_t nx, std::size_t ny) {
        std::vector<std::uint8_t> boundary(inside.size(), 0);
        auto in = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
            if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(nx) ||
                j >= static_cast<std::ptrdiff_t>(ny)) {
                return false;
            }
            return inside[static_cast<std::size_t>(i) * ny + static_cast<std::size_t>(j)] != 0;
        };
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) {
                const auto ii = static_cast<std::ptrdiff_t>(i);
                const auto jj = static_cast<std::ptrdiff_t>(j);
                if (!in(ii, jj)) continue;
                const bool all_neighbours_inside =
                    in(ii + 1, jj) && in(ii - 1, jj) && in(ii, jj + 1) && in(ii, jj - 1);
                boundary[i * ny + j] = all_neighbours_inside ? 0 : 1;
            }
        }
        return boundary;
    }

    /// Breadth-first 4-neighbour distance of each inside node from the boundary
    /// layer (boundary nodes 0, outside nodes -1).
    std::vector<int> layer_depth() const {
        std::vector<int> depth(size(), -1);
        std::deque<std::size_t> queue;
        for (std::size_t k = 0; k < size(); ++k) {
            if (is_boundary(k)) {
                depth[k] = 0;
                queue.push_back(k);
            }
        }
        while (!queue.empty()) {
            const std::size_t k = queue.front();
            queue.pop_front();
            const auto i = static_cast<std::ptrdiff_t>(row(k));
            const auto j = static_cast<std::ptrdiff_t>(col(k));
            const std::array<std::array<std::ptrdiff_t, 2>, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
            for (const auto& s : steps) {
                if (!inside_at(i + s[0], j + s[1])) continue;
                const std::size_t n = index(static_cast<std::size_t>(i + s[0]),
                                            static_cast<std::size_t>(j + s[1]));
                if (depth[n] < 0) {
                    depth[n] = depth[k] + 1;
                    queue.push_back(n);
                }
            }
        }
        return depth;
    }

    friend bool operator==(const MaskedGrid2D& lhs, const MaskedGrid2D& rhs) {
        return lhs.ellipse_ == rhs.ellipse_ && lhs.h_ == rhs.h_;
    }

private:
    // Symmetric about zero so that reflections of the lattice map nodes onto nodes.
    static std::vector<double> centred_axis(double half_width, double h) {
        const auto cells = static_cast<std::size_t>(std::floor(2.0 * half_width / h + 1e-9));
        std::vector<double> axis(cells + 1);
        const double centre = 0.5 * static_cast<double>(cells);
        for (std::size_t i = 0; i <= cells; ++i) {
            axis[i] = (static_cast<double>(i) - centre) * h;
        }
        return axis;
    }

    static std::size_t count(const std::vector<std::uint8_t>& mask) {
        std::size_t n = 0;
        for (auto m : mask) n += m;
        return n;
    }

    EllipseSpec ellipse_;
    double h_;
    std::vector<double> x_axis_;
    std::vector<double> y_axis_;
    std::vector<std::uint8_t> inside_;
    std::vector<std::uint8_t> boundary_;
};

inline MaskedGrid2D build_masked_grid(const EllipseSpec& spec, double h) { return MaskedGrid2D(spec, h); }

/**
 * Radius of the stopping ball around x0: the minimum distance from x0 to
 * num_points boundary samples taken at angles linspace(0, 2*pi, num_points).
 * Over-estimates the true distance only by the angular sampling error.
 */
inline double stopping_radius(const ReferencePoint& x0, const EllipseSpec& spec,
                              std::size_t num_points = 1000) {
    if (num_points < 8) {
        throw InvalidArgument("stopping_radius: need at least 8 boundary samples");
    }
    if (!spec.contains(x0.point())) {
        throw InvalidArgument("stopping_radius: reference point is not inside this ellipse");
    }
    const double step = 2.0 * std::numbers::pi / static_cast<double>(num_points - 1);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < num_points; ++k) {
        const Point<2> p = spec.boundary_point(static_cast<double>(k) * step);
        best = std::min(best, std::hypot(p[0] - x0.point()[0], p[1] - x0.point()[1]));
    }
    return best;
}

}  // namespace hjb
