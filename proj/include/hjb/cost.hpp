#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hjb/csv.hpp"
#include "hjb/domain.hpp"
#include "hjb/errors.hpp"
#include "hjb/field.hpp"

namespace hjb {

/**
 * Inventory holding cost b(y) >= 0.
 *
 * Tabulated costs are linear (1D) or bilinear (2D) interpolants of node
 * values on a uniform table, clamped to the table's extent.
 */
class CostField {
public:
    enum class Kind { constant, quadratic1d, radial2d, tabulated };

    static CostField constant(double c) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw InvalidArgument("CostField: constant cost must be finite and >= 0");
        }
        CostField f(Kind::constant);
        f.c_ = c;
        return f;
    }

    static CostField quadratic1d() { return CostField(Kind::quadratic1d); }
    static CostField radial2d() { return CostField(Kind::radial2d); }

    static CostField tabulated1d(std::vector<double> axis, std::vector<double> values) {
        check_axis(axis);
        if (values.size() != axis.size()) {
            throw InvalidArgument("CostField: table size does not match its axis");
        }
        CostField f(Kind::tabulated);
        f.dim_ = 1;
        f.x_axis_ = std::move(axis);
        f.table_ = std::move(values);
        return f;
    }

    static CostField tabulated2d(std::vector<double> x_axis, std::vector<double> y_axis,
                                 std::vector<double> values) {
        check_axis(x_axis);
        check_axis(y_axis);
        if (values.size() != x_axis.size() * y_axis.size()) {
            throw InvalidArgument("CostField: table size does not match its axes");
        }
        CostField f(Kind::tabulated);
        f.dim_ = 2;
        f.x_axis_ = std::move(x_axis);
        f.y_axis_ = std::move(y_axis);
        f.table_ = std::move(values);
        return f;
    }

    Kind kind() const { return kind_; }

    /// Required point dimension; 0 means any.
    std::size_t dimension() const { return dim_; }

    double operator()(std::span<const double> y) const {
        if (dim_ != 0 && y.size() != dim_) {
            throw InvalidArgument("CostField: expected a " + std::to_string(dim_) +
                                  "-dimensional point, got " + std::to_string(y.size()));
        }
        switch (kind_) {
            case Kind::constant:
                return c_;
            case Kind::quadratic1d:
                return y[0] * y[0];
            case Kind::radial2d:
                return y[0] * y[0] + y[1] * y[1];
            case Kind::tabulated: {
                const double v = lookup(y);
                if (!(v >= 0.0)) {
                    throw InvalidData("CostField: tabulated cost is negative (" + csv::format(v) + ")");
                }
                return v;
            }
        }
        throw InternalError("CostField: unknown kind");
    }

    /// Selector string understood by parse_cost_selector (tables report their kind only).
    std::string selector() const {
        switch (kind_) {
            case Kind::constant: return "const:" + csv::format(c_);
            case Kind::quadratic1d: return "x2";
            case Kind::radial2d: return "radial";
            case Kind::tabulated: return "table";
        }
        return "?";
    }

    /// b vanishes identically (only decidable for the constant kind).
    bool is_identically_zero() const { return kind_ == Kind::constant && c_ == 0.0; }

private:
    explicit CostField(Kind k) : kind_(k), dim_(k == Kind::quadratic1d ? 1 : k == Kind::radial2d ? 2 : 0) {}

    static void check_axis(const std::vector<double>& axis) {
        if (axis.size() < 2) throw InvalidArgument("CostField: table axis needs at least 2 nodes");
        for (std::size_t i = 1; i < axis.size(); ++i) {
            if (!(axis[i] > axis[i - 1])) {
                throw InvalidArgument("CostField: table axis must be strictly increasing");
            }
        }
    }

    static void bracket(const std::vector<double>& axis, double x, std::size_t& i, double& w) {
        x = std::clamp(x, axis.front(), axis.back());
        const auto it = std::upper_bound(axis.begin(), axis.end(), x);
        i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
        if (i + 1 >= axis.size()) i = axis.size() - 2;
        w = (x - axis[i]) / (axis[i + 1] - axis[i]);
    }

    double lookup(std::span<const double> y) const {
        std::size_t i = 0;
        double wx = 0.0;
        bracket(x_axis_, y[0], i, wx);
        if (dim_ == 1) return (1.0 - wx) * table_[i] + wx * table_[i + 1];
        std::size_t j = 0;
        double wy = 0.0;
        bracket(y_axis_, y[1], j, wy);
        const std::size_t ny = y_axis_.size();
        const double f00 = table_[i * ny + j];
        const double f01 = table_[i * ny + j + 1];
        const double f10 = table_[(i + 1) * ny + j];
        const double f11 = table_[(i + 1) * ny + j + 1];
        return (1.0 - wx) * ((1.0 - wy) * f00 + wy * f01) + wx * ((1.0 - wy) * f10 + wy * f11);
    }

    Kind kind_;
    std::size_t dim_;
    double c_ = 0.0;
    std::vector<double> x_axis_;
    std::vector<double> y_axis_;
    std::vector<double> table_;
};

inline double eval_cost(const CostField& field, std::span<const double> point) { return field(point); }

template <std::size_t D>
double eval_cost(const CostField& field, const Point<D>& point) {
    return field(std::span<const double>(point.data(), D));
}

/// Per-node b values; nodes outside the mask carry 0.
template <StructuredGrid G>
ScalarField<G> sample_on_grid(const CostField& field, std::shared_ptr<const G> grid) {
    if (field.dimension() != 0 && field.dimension() != G::dimension) {
        throw InvalidArgument("sample_on_grid: cost dimension does not match the grid");
    }
    ScalarField<G> out(grid, 0.0);
    for (std::size_t k = 0; k < grid->size(); ++k) {
        if (!grid->is_inside(k)) continue;
        out[k] = eval_cost(field, grid->coordinates(k));
    }
    return out;
}

namespace detail {

inline std::vector<double> unique_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

/**
 * Load a cost table. 1D tables have columns x,b; 2D tables y1,y2,b with rows
 * in node order (y1 outer, y2 inner), the layout of the solver output files.
 */
inline CostField load_cost_table(const std::string& path) {
    const csv::Table t = csv::read(path);
    const std::vector<double> b = t.values("b");
    if (t.has_column("y1") && t.has_column("y2")) {
        auto xs = detail::unique_sorted(t.values("y1"));
        auto ys = detail::unique_sorted(t.values("y2"));
        if (xs.size() * ys.size() != b.size()) {
            throw InvalidData("cost table '" + path + "' is not a full rectangular lattice");
        }
        return CostField::tabulated2d(std::move(xs), std::move(ys), b);
    }
    if (t.has_column("x")) {
        return CostField::tabulated1d(t.values("x"), b);
    }
    throw InvalidData("cost table '" + path + "' needs an x column or y1,y2 columns");
}

/// Parses "const:<c>", "x2", "radial" or "table:<path>".
inline CostField parse_cost_selector(std::string_view sel) {
    if (sel == "x2") return CostField::quadratic1d();
    if (sel == "radial") return CostField::radial2d();
    if (sel.starts_with("const:")) {
        const std::string num(sel.substr(6));
        std::size_t used = 0;
        double c = 0.0;
        try {
            c = std::stod(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (num.empty() || used != num.size()) {
            throw InvalidArgument("cost selector: bad constant in '" + std::string(sel) + "'");
        }
        return CostField::constant(c);
    }
    if (sel.starts_with("table:")) return load_cost_table(std::string(sel.substr(6)));
    throw InvalidArgument("cost selector: unknown '" + std::string(sel) +
                          "' (expected const:<c>, x2, radial or table:<path>)");
}

}  // namespace hjb
