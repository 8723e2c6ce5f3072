#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <type_traits>
#include <span>
#include <vector>

#include "hjb/domain.hpp"
#include "hjb/errors.hpp"
#include "hjb/field.hpp"
#include "hjb/tridiagonal.hpp"

namespace hjb {

/// Dirichlet value of the transformed problem: exp(-z0 / (2 sigma^2)).
inline double boundary_value(double sigma, double z0) {
    if (!(sigma > 0.0)) throw InvalidArgument("boundary_value: sigma must be positive");
    if (!(z0 >= 0.0)) throw InvalidArgument("boundary_value: z0 must be >= 0");
    return std::exp(-z0 / (2.0 * sigma * sigma));
}

struct SolverConfig {
    double sigma = 0.4;
    double z0 = 0.5;
    double tol = 1e-5;           ///< Gauss-Seidel: stop when the max per-sweep update is below this.
    std::size_t max_iter = 10000;

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("SolverConfig: sigma must be > 0");
        if (!(z0 >= 0.0) || !std::isfinite(z0)) throw InvalidArgument("SolverConfig: z0 must be >= 0");
        if (!(tol > 0.0)) throw InvalidArgument("SolverConfig: tol must be > 0");
        if (max_iter < 1) throw InvalidArgument("SolverConfig: max_iter must be >= 1");
    }

    double sigma4() const { return std::pow(sigma, 4); }
    double boundary() const { return boundary_value(sigma, z0); }
};

struct SolveStats {
    std::size_t iterations = 0;
    double final_update = 0.0;
    bool converged = false;
};

template <StructuredGrid G>
struct Solution {
    ScalarField<G> field;
    SolveStats stats;
};

namespace detail {

template <StructuredGrid G>
void check_cost_field(const G& grid, const ScalarField<G>& b) {
    if (!b.grid || b.size() != grid.size() || !(*b.grid == grid)) {
        throw InvalidArgument("cost field is not sampled on the solver grid");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid.is_inside(k) && !(b[k] >= 0.0 && std::isfinite(b[k]))) {
            throw InvalidData("cost field must be finite and >= 0 at every inside node");
        }
    }
}

// Interior equations u[i-1] - (2 + reaction[i]) u[i] + u[i+1] = source[i] with
// u = bc at both ends. reaction and source are already scaled by h^2.
inline ScalarField<Grid1D> dirichlet_1d(std::shared_ptr<const Grid1D> grid, double bc,
                                        std::span<const double> reaction, std::span<const double> source) {
    const std::size_t n = grid->size();
    const std::size_t m = n - 2;
    std::vector<double> lower(m, 1.0);
    std::vector<double> upper(m, 1.0);
    std::vector<double> diag(m);
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
        diag[i] = -(2.0 + reaction[i + 1]);
        rhs[i] = source[i + 1];
    }
    rhs.front() -= bc;
    rhs.back() -= bc;
    const std::vector<double> interior = solve_tridiagonal(lower, diag, upper, rhs);

    ScalarField<Grid1D> u(grid, bc);
    std::copy(interior.begin(), interior.end(), u.values.begin() + 1);
    return u;
}

// Lexicographic in-place sweeps of u <- (up + down + right + left - source) / (4 + reaction)
// over interior nodes; neighbours that are not inside contribute bc. Boundary
// and outside nodes keep their initial values.
inline Solution<MaskedGrid2D> gauss_seidel_2d(std::shared_ptr<const MaskedGrid2D> grid, double bc,
                                              std::span<const double> reaction, std::span<const double> source,
                                              double tol, std::size_t max_iter,
                                              std::optional<std::span<const double>> initial = std::nullopt) {
    const MaskedGrid2D& g = *grid;
    ScalarField<MaskedGrid2D> u(grid, bc);
    if (initial) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.is_interior(k)) u[k] = (*initial)[k];
        }
    }
    const std::size_t nx = g.nx();
    const std::size_t ny = g.ny();
    auto value = [&](std::size_t k) { return g.is_inside(k) ? u[k] : bc; };

    SolveStats stats;
    while (stats.iterations < max_iter) {
        double max_diff = 0.0;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            for (std::size_t j = 1; j + 1 < ny; ++j) {
                const std::size_t k = i * ny + j;
                if (!g.is_interior(k)) continue;
                const double up = value(k + 1);
                const double down = value(k - 1);
                const double right = value(k + ny);
                const double left = value(k - ny);
                const double u_new = (up + down + right + left - source[k]) / (4.0 + reaction[k]);
                max_diff = std::max(max_diff, std::abs(u[k] - u_new));
                u[k] = u_new;
            }
        }
        ++stats.iterations;
        stats.final_update = max_diff;
        if (!std::isfinite(max_diff)) break;
        if (max_diff < tol) {
            stats.converged = true;
            break;
        }
    }
    return {std::move(u), stats};
}

inline std::vector<double> scaled(const ScalarField<Grid1D>& f, double factor) {
    std::vector<double> out(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = factor * f[k];
    return out;
}

inline std::vector<double> scaled(const ScalarField<MaskedGrid2D>& f, double factor) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f.grid->is_inside(k)) out[k] = factor * f[k];
    }
    return out;
}

}  // namespace detail

/**
 * Central-difference solve of u'' = b u / sigma^4 on [0, L] with u = bc at
 * both ends, by tridiagonal elimination.
 */
inline ScalarField<Grid1D> solve_1d_direct(std::shared_ptr<const Grid1D> grid, const ScalarField<Grid1D>& b,
                                           const SolverConfig& cfg) {
    cfg.validate();
    detail::check_cost_field(*grid, b);
    const double h = grid->spacing();
    const auto reaction = detail::scaled(b, (h * h) / cfg.sigma4());
    const std::vector<double> source(grid->size(), 0.0);
    return detail::dirichlet_1d(grid, cfg.boundary(), reaction, source);
}

/**
 * Gauss-Seidel solve of the 5-point discretisation of Laplace(u) = b u / sigma^4
 * on a masked ellipse grid. u starts at bc everywhere; convergence is declared
 * when the largest per-sweep update drops below cfg.tol.
 */
inline Solution<MaskedGrid2D> solve_2d_gauss_seidel(std::shared_ptr<const MaskedGrid2D> grid,
                                                    const ScalarField<MaskedGrid2D>& b, const SolverConfig& cfg) {
    cfg.validate();
    detail::check_cost_field(*grid, b);
    const double h = grid->spacing();
    const auto reaction = detail::scaled(b, (h * h) / cfg.sigma4());
    const std::vector<double> source(grid->size(), 0.0);
    return detail::gauss_seidel_2d(grid, cfg.boundary(), reaction, source, cfg.tol, cfg.max_iter);
}

/// Subsolution w: Laplace(w) = b / sigma^4 with the same Dirichlet value.
inline Solution<Grid1D> solve_auxiliary(std::shared_ptr<const Grid1D> grid, const ScalarField<Grid1D>& b,
                                        const SolverConfig& cfg) {
    cfg.validate();
    detail::check_cost_field(*grid, b);
    const double h = grid->spacing();
    const auto source = detail::scaled(b, (h * h) / cfg.sigma4());
    const std::vector<double> reaction(grid->size(), 0.0);
    return {detail::dirichlet_1d(grid, cfg.boundary(), reaction, source), SolveStats{1, 0.0, true}};
}

inline Solution<MaskedGrid2D> solve_auxiliary(std::shared_ptr<const MaskedGrid2D> grid,
                                              const ScalarField<MaskedGrid2D>& b, const SolverConfig& cfg) {
    cfg.validate();
    detail::check_cost_field(*grid, b);
    const double h = grid->spacing();
    const auto source = detail::scaled(b, (h * h) / cfg.sigma4());
    const std::vector<double> reaction(grid->size(), 0.0);
    return detail::gauss_seidel_2d(grid, cfg.boundary(), reaction, source, cfg.tol, cfg.max_iter);
}

struct MonotoneOptions {
    double outer_tol = 1e-5;
    std::size_t outer_max = 200;
    /// Shift K in Laplace(z') - K z' = (b/sigma^4 - K) z. Unset: K = max(b)/sigma^4,
    /// which makes the iteration monotone. K = 0 is the plain Picard iteration.
    std::optional<double> shift;
};

template <StructuredGrid G>
double default_shift(const ScalarField<G>& b, const SolverConfig& cfg) {
    double bmax = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        if (b.grid->is_inside(k)) bmax = std::max(bmax, b[k]);
    }
    return bmax / cfg.sigma4();
}

/**
 * Monotone iteration from the supersolution z0 = bc: each step solves the
 * linear Dirichlet problem Laplace(z') - K z' = (b/sigma^4 - K) z and stops when
 * the sup-norm change falls below outer_tol. With K >= max(b)/sigma^4 the
 * iterates decrease monotonically to the solution of Laplace(u) = b u / sigma^4.
 */
template <StructuredGrid G>
Solution<G> solve_monotone_iteration(std::shared_ptr<const G> grid, const ScalarField<G>& b, const SolverConfig& cfg,
                                     const MonotoneOptions& opts = {}) {
    cfg.validate();
    detail::check_cost_field(*grid, b);
    if (!(opts.outer_tol > 0.0)) throw InvalidArgument("solve_monotone_iteration: outer_tol must be > 0");
    if (opts.outer_max < 1) throw InvalidArgument("solve_monotone_iteration: outer_max must be >= 1");
    const double shift = opts.shift.value_or(default_shift(b, cfg));
    if (!(shift >= 0.0) || !std::isfinite(shift)) {
        throw InvalidArgument("solve_monotone_iteration: shift must be finite and >= 0");
    }

    const double bc = cfg.boundary();
    const double h = grid->spacing();
    const double h2 = h * h;
    const double coupling = h2 / cfg.sigma4();
    const std::vector<double> reaction(grid->size(), h2 * shift);

    ScalarField<G> z(grid, bc);
    SolveStats stats;
    bool inner_ok = true;
    std::vector<double> source(grid->size(), 0.0);
    while (stats.iterations < opts.outer_max) {
        for (std::size_t k = 0; k < grid->size(); ++k) {
            source[k] = grid->is_inside(k) ? (coupling * b[k] - h2 * shift) * z[k] : 0.0;
        }
        ScalarField<G> next;
        if constexpr (std::is_same_v<G, Grid1D>) {
            next = detail::dirichlet_1d(grid, bc, reaction, source);
        } else {
            auto inner = detail::gauss_seidel_2d(grid, bc, reaction, source, cfg.tol, cfg.max_iter,
                                                 std::span<const double>(z.values));
            inner_ok = inner_ok && inner.stats.converged;
            next = std::move(inner.field);
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < grid->size(); ++k) {
            if (grid->is_inside(k)) diff = std::max(diff, std::abs(next[k] - z[k]));
        }
        z = std::move(next);
        ++stats.iterations;
        stats.final_update = diff;
        if (!std::isfinite(diff)) break;
        if (diff < opts.outer_tol) {
            stats.converged = inner_ok;
            break;
        }
    }
    return {std::move(z), stats};
}

/// Largest discrete residual |sum(neighbours) - (2d + h^2 b/sigma^4) u| over interior nodes.
inline double stencil_residual(const ScalarField<Grid1D>& u, const ScalarField<Grid1D>& b, const SolverConfig& cfg) {
    const double h = u.grid->spacing();
    const double coupling = (h * h) / cfg.sigma4();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double r = u[i - 1] - (2.0 + coupling * b[i]) * u[i] + u[i + 1];
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

inline double stencil_residual(const ScalarField<MaskedGrid2D>& u, const ScalarField<MaskedGrid2D>& b,
                               const SolverConfig& cfg) {
    const MaskedGrid2D& g = *u.grid;
    const double h = g.spacing();
    const double coupling = (h * h) / cfg.sigma4();
    const double bc = cfg.boundary();
    const std::size_t ny = g.ny();
    auto value = [&](std::size_t k) { return g.is_inside(k) ? u[k] : bc; };
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.is_interior(k)) continue;
        const double sum = value(k + 1) + value(k - 1) + value(k + ny) + value(k - ny);
        worst = std::max(worst, std::abs(sum - (4.0 + coupling * b[k]) * u[k]));
    }
    return worst;
}

}  // namespace hjb
