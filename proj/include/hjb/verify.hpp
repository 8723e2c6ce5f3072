#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hjb/cost.hpp"
#include "hjb/csv.hpp"
#include "hjb/domain.hpp"
#include "hjb/errors.hpp"
#include "hjb/field.hpp"
#include "hjb/pde.hpp"
#include "hjb/sde.hpp"
#include "hjb/transform.hpp"

namespace hjb {

enum class CheckStatus { pass, fail, skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "PASS";
        case CheckStatus::fail: return "FAIL";
        case CheckStatus::skipped: return "SKIP";
    }
    return "?";
}

/// Outcome of one executable check: worst measured value against its tolerance.
struct VerificationReport {
    std::string name;
    CheckStatus status = CheckStatus::fail;
    double measured = 0.0;
    double tolerance = 0.0;
    std::vector<std::pair<std::string, std::string>> details;

    bool passed() const { return status == CheckStatus::pass; }
    bool skipped() const { return status == CheckStatus::skipped; }

    VerificationReport& note(std::string key, double value) {
        details.emplace_back(std::move(key), csv::format(value));
        return *this;
    }
    VerificationReport& note(std::string key, std::string value) {
        details.emplace_back(std::move(key), std::move(value));
        return *this;
    }

    /// `CHECK <name> PASS|FAIL|SKIP measured=<v> tol=<t>`
    std::string summary_line() const {
        return "CHECK " + name + " " + to_string(status) + " measured=" + csv::format(measured) +
               " tol=" + csv::format(tolerance);
    }

    /// Key/value block, one pair per line.
    std::string block() const {
        std::ostringstream out;
        out << "[" << name << "]\n";
        out << "status = " << to_string(status) << "\n";
        out << "measured = " << csv::format(measured) << "\n";
        out << "tolerance = " << csv::format(tolerance) << "\n";
        for (const auto& [k, v] : details) out << k << " = " << v << "\n";
        return out.str();
    }
};

namespace detail {

inline VerificationReport make_report(std::string name, bool ok, double measured, double tol) {
    VerificationReport r;
    r.name = std::move(name);
    r.status = ok ? CheckStatus::pass : CheckStatus::fail;
    r.measured = measured;
    r.tolerance = tol;
    return r;
}

template <StructuredGrid G>
void require_same_grid(const ScalarField<G>& a, const ScalarField<G>& b, const char* who) {
    if (!same_grid(a, b) || a.size() != b.size()) {
        throw InvalidArgument(std::string(who) + ": fields live on different grids");
    }
}

// Visit every 3-node line (k - s, k, k + s) whose nodes all have layer depth
// >= min_depth. 1D: the single axis. 2D: both axes and both diagonals.
template <class Fn>
void for_each_slice(const Grid1D& g, int min_depth, Fn&& fn) {
    const auto depth = g.layer_depth();
    for (std::size_t k = 1; k + 1 < g.size(); ++k) {
        if (depth[k - 1] >= min_depth && depth[k] >= min_depth && depth[k + 1] >= min_depth) fn(k - 1, k, k + 1);
    }
}

template <class Fn>
void for_each_slice(const MaskedGrid2D& g, int min_depth, Fn&& fn) {
    const auto depth = g.layer_depth();
    const std::array<std::array<std::ptrdiff_t, 2>, 4> dirs{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};
    const auto nx = static_cast<std::ptrdiff_t>(g.nx());
    const auto ny = static_cast<std::ptrdiff_t>(g.ny());
    auto ok = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
        return i >= 0 && j >= 0 && i < nx && j < ny &&
               depth[g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))] >= min_depth;
    };
    for (std::ptrdiff_t i = 0; i < nx; ++i) {
        for (std::ptrdiff_t j = 0; j < ny; ++j) {
            if (!ok(i, j)) continue;
            for (const auto& d : dirs) {
                if (!ok(i - d[0], j - d[1]) || !ok(i + d[0], j + d[1])) continue;
                const auto at = [&](std::ptrdiff_t a, std::ptrdiff_t b) {
                    return g.index(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
                };
                fn(at(i - d[0], j - d[1]), at(i, j), at(i + d[0], j + d[1]));
            }
        }
    }
}

}  // namespace detail

/// w <= u + tol and u <= bc + tol at every inside node.
template <StructuredGrid G>
VerificationReport check_sandwich(const ScalarField<G>& u, const ScalarField<G>& w, double bc, double tol) {
    detail::require_same_grid(u, w, "check_sandwich");
    double below = -std::numeric_limits<double>::infinity();  // max(w - u)
    double above = -std::numeric_limits<double>::infinity();  // max(u - bc)
    std::size_t nodes = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (!u.grid->is_inside(k)) continue;
        below = std::max(below, w[k] - u[k]);
        above = std::max(above, u[k] - bc);
        ++nodes;
    }
    const double worst = std::max(0.0, std::max(below, above));
    auto r = detail::make_report("sandwich", below <= tol && above <= tol, worst, tol);
    r.note("max_sub_minus_u", below).note("max_u_minus_super", above).note("nodes", static_cast<double>(nodes));
    return r;
}

struct SliceOptions {
    /// Only lines whose three nodes lie at least this many layers inside the
    /// discrete boundary are tested (0 admits boundary nodes).
    int min_depth = 1;
};

/// Discrete convexity of u: every tested second difference >= -tol.
template <StructuredGrid G>
VerificationReport check_convexity_slices(const ScalarField<G>& u, double tol, const SliceOptions& opts = {}) {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t lines = 0;
    detail::for_each_slice(*u.grid, opts.min_depth, [&](std::size_t a, std::size_t k, std::size_t c) {
        worst = std::min(worst, u[a] - 2.0 * u[k] + u[c]);
        ++lines;
    });
    if (lines == 0) worst = 0.0;
    auto r = detail::make_report("convexity_u", worst >= -tol, worst, tol);
    r.note("lines", static_cast<double>(lines)).note("min_depth", static_cast<double>(opts.min_depth));
    return r;
}

/**
 * Discrete concavity of z: every tested second difference <= tol. When u is
 * supplied, also tests the log-convexity hypothesis u*u'' >= (u')^2 - tol
 * (raw differences) on the same lines.
 */
template <StructuredGrid G>
VerificationReport check_concavity_slices(const ScalarField<G>& z, double tol, const SliceOptions& opts = {},
                                          const ScalarField<G>* u = nullptr) {
    if (u) detail::require_same_grid(z, *u, "check_concavity_slices");
    double worst = -std::numeric_limits<double>::infinity();
    double worst_log = std::numeric_limits<double>::infinity();
    std::size_t lines = 0;
    detail::for_each_slice(*z.grid, opts.min_depth, [&](std::size_t a, std::size_t k, std::size_t c) {
        worst = std::max(worst, z[a] - 2.0 * z[k] + z[c]);
        if (u) {
            const double d1 = 0.5 * ((*u)[c] - (*u)[a]);
            const double d2 = (*u)[a] - 2.0 * (*u)[k] + (*u)[c];
            worst_log = std::min(worst_log, (*u)[k] * d2 - d1 * d1);
        }
        ++lines;
    });
    if (lines == 0) {
        worst = 0.0;
        worst_log = 0.0;
    }
    const bool log_ok = !u || worst_log >= -tol;
    auto r = detail::make_report("concavity_z", worst <= tol && log_ok, worst, tol);
    r.note("lines", static_cast<double>(lines)).note("min_depth", static_cast<double>(opts.min_depth));
    if (u) r.note("min_log_convexity_margin", worst_log);
    return r;
}

struct RadialOptions {
    /// Restrict to inside nodes with radius <= core_fraction * a.
    double core_fraction = 1.0;
};

/**
 * Groups inside nodes by exact lattice radius (nodes (i, j) with equal
 * i^2 + j^2 about the centre) and reports the largest spread of u within a
 * group. Requires a circular domain.
 */
inline VerificationReport check_radial_symmetry(const ScalarField<MaskedGrid2D>& u, double tol,
                                                const RadialOptions& opts = {}) {
    const MaskedGrid2D& g = *u.grid;
    if (g.ellipse().a != g.ellipse().b) {
        throw InvalidArgument("check_radial_symmetry: domain is not a disk (a != b)");
    }
    const auto cx = static_cast<std::int64_t>(g.nx()) - 1;
    const auto cy = static_cast<std::int64_t>(g.ny()) - 1;
    const double r_max = opts.core_fraction * g.ellipse().a;
    std::map<std::int64_t, std::pair<double, double>> groups;
    double spread = 0.0;
    double at_radius = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.is_inside(k)) continue;
        const auto p = g.coordinates(k);
        if (std::hypot(p[0], p[1]) > r_max) continue;
        // Doubled offsets from the centre are integers for both odd and even node counts.
        const std::int64_t di = 2 * static_cast<std::int64_t>(g.row(k)) - cx;
        const std::int64_t dj = 2 * static_cast<std::int64_t>(g.col(k)) - cy;
        const std::int64_t key = di * di + dj * dj;
        auto [it, fresh] = groups.try_emplace(key, u[k], u[k]);
        if (!fresh) {
            it->second.first = std::min(it->second.first, u[k]);
            it->second.second = std::max(it->second.second, u[k]);
            const double s = it->second.second - it->second.first;
            if (s > spread) {
                spread = s;
                at_radius = std::hypot(p[0], p[1]);
            }
        }
    }
    auto r = detail::make_report("radial_symmetry", spread <= tol, spread, tol);
    r.note("groups", static_cast<double>(groups.size()))
        .note("worst_radius", at_radius)
        .note("core_fraction", opts.core_fraction)
        .note("h", g.spacing());
    return r;
}

enum class GammaStatus { positive, degenerate, hopf_violation };

struct GammaEstimate {
    double gamma = 0.0;
    GammaStatus status = GammaStatus::degenerate;
};

namespace detail {

inline GammaEstimate classify_gamma(double gamma) {
    constexpr double kDegenerate = 1e-10;
    if (std::abs(gamma) <= kDegenerate) return {gamma, GammaStatus::degenerate};
    return {gamma, gamma > 0.0 ? GammaStatus::positive : GammaStatus::hopf_violation};
}

}  // namespace detail

/**
 * Outward normal derivative of u at a boundary node from the second-order
 * one-sided difference along the inward axis closest to the normal:
 * gamma = (3 u0 - 4 u1 + u2) / (2h) with u1, u2 one and two steps inward.
 */
inline GammaEstimate estimate_gamma(const ScalarField<Grid1D>& u, std::size_t node) {
    const Grid1D& g = *u.grid;
    if (!g.is_boundary(node)) throw InvalidArgument("estimate_gamma: node is not a boundary node");
    const std::size_t n = g.size();
    const double h = g.spacing();
    const double gamma = node == 0 ? (3.0 * u[0] - 4.0 * u[1] + u[2]) / (2.0 * h)
                                   : (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    return detail::classify_gamma(gamma);
}

inline GammaEstimate estimate_gamma(const ScalarField<MaskedGrid2D>& u, std::size_t node) {
    const MaskedGrid2D& g = *u.grid;
    if (!g.is_boundary(node)) throw InvalidArgument("estimate_gamma: node is not a boundary node");
    const auto p = g.coordinates(node);
    const double a = g.ellipse().a;
    const double b = g.ellipse().b;
    const double n1 = p[0] / (a * a);
    const double n2 = p[1] / (b * b);
    const auto i = static_cast<std::ptrdiff_t>(g.row(node));
    const auto j = static_cast<std::ptrdiff_t>(g.col(node));

    // Axis closest to the outward normal first, the other as fallback.
    std::array<std::array<std::ptrdiff_t, 2>, 2> candidates;
    const std::array<std::ptrdiff_t, 2> along_x{n1 > 0.0 ? -1 : 1, 0};
    const std::array<std::ptrdiff_t, 2> along_y{0, n2 > 0.0 ? -1 : 1};
    if (std::abs(n1) >= std::abs(n2)) {
        candidates = {along_x, along_y};
    } else {
        candidates = {along_y, along_x};
    }
    for (const auto& s : candidates) {
        if (!g.inside_at(i + s[0], j + s[1]) || !g.inside_at(i + 2 * s[0], j + 2 * s[1])) continue;
        const double u1 = u[g.index(static_cast<std::size_t>(i + s[0]), static_cast<std::size_t>(j + s[1]))];
        const double u2 =
            u[g.index(static_cast<std::size_t>(i + 2 * s[0]), static_cast<std::size_t>(j + 2 * s[1]))];
        return detail::classify_gamma((3.0 * u[node] - 4.0 * u1 + u2) / (2.0 * g.spacing()));
    }
    throw InvalidArgument("estimate_gamma: no inward axis with two inside nodes at this boundary node");
}

namespace detail {

inline std::size_t nearest_boundary_node(const Grid1D& g, std::size_t k) { return 2 * k < g.size() ? 0 : g.size() - 1; }

inline std::size_t nearest_boundary_node(const MaskedGrid2D& g, std::size_t k) {
    const auto p = g.coordinates(k);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = k;
    for (std::size_t m = 0; m < g.size(); ++m) {
        if (!g.is_boundary(m)) continue;
        const auto q = g.coordinates(m);
        const double d = std::hypot(p[0] - q[0], p[1] - q[1]);
        if (d < best) {
            best = d;
            arg = m;
        }
    }
    return arg;
}

template <StructuredGrid G>
double norm_at(const VectorField<G>& v, std::size_t k) {
    double s = 0.0;
    for (const auto& c : v.components) s += c[k] * c[k];
    return std::sqrt(s);
}

struct AsymptoticMeasure {
    double max_rel_dev = 0.0;
    double identity_residual = 0.0;
    double quotient_residual = 0.0;
    std::size_t nodes = 0;
    bool degenerate = true;
    bool hopf_violation = false;
};

template <StructuredGrid G>
AsymptoticMeasure measure_asymptotic(const ScalarField<G>& z, const ScalarField<G>& u, double sigma, double z0,
                                     int band) {
    const G& g = *u.grid;
    const auto depth = g.layer_depth();
    const auto grad_z = gradient(z);
    const auto grad_u = gradient(u);
    ScalarField<G> log_u(u.grid, 0.0);
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (u[k] > 0.0) log_u[k] = std::log(u[k]);
    }
    const auto grad_log_u = gradient(log_u);
    const double s2 = sigma * sigma;
    const double lift = std::exp(z0 / (2.0 * s2));

    AsymptoticMeasure m;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (depth[k] < 1) continue;
        // Chain rule on node values: grad z = -2 sigma^2 grad(ln u).
        m.identity_residual =
            std::max(m.identity_residual, std::abs(norm_at(grad_z, k) - 2.0 * s2 * norm_at(grad_log_u, k)));
        m.quotient_residual =
            std::max(m.quotient_residual, std::abs(norm_at(grad_z, k) - 2.0 * s2 * norm_at(grad_u, k) / u[k]));
        if (depth[k] > band) continue;
        const GammaEstimate gamma = estimate_gamma(u, nearest_boundary_node(g, k));
        if (gamma.status == GammaStatus::hopf_violation) m.hopf_violation = true;
        if (gamma.status != GammaStatus::positive) continue;
        m.degenerate = false;
        const double lhs = 0.5 * norm_at(grad_z, k);
        const double rhs = s2 * gamma.gamma * lift;
        m.max_rel_dev = std::max(m.max_rel_dev, std::abs(lhs - rhs) / rhs);
        ++m.nodes;
    }
    return m;
}

}  // namespace detail

struct AsymptoticOptions {
    int band = 1;                    ///< layers inside the discrete boundary that are compared
    double tol_rel = 0.05;
    double identity_tol = 1e-8;
};

/**
 * Boundary behaviour of the control: at nodes within `band` layers of the
 * discrete boundary, |grad z| / 2 against sigma^2 * gamma * exp(z0 / (2 sigma^2))
 * with gamma estimated at the nearest boundary node. If a refined solve is
 * given, the deviation must also shrink under refinement. The transform
 * identity |grad z| = 2 sigma^2 |grad ln u| is checked at all interior nodes.
 */
template <StructuredGrid G>
VerificationReport check_boundary_asymptotic(const ScalarField<G>& z, const ScalarField<G>& u, double sigma,
                                             double z0, const AsymptoticOptions& opts = {},
                                             const ScalarField<G>* z_fine = nullptr,
                                             const ScalarField<G>* u_fine = nullptr) {
    detail::require_same_grid(z, u, "check_boundary_asymptotic");
    const auto m = detail::measure_asymptotic(z, u, sigma, z0, opts.band);
    if (m.degenerate && !m.hopf_violation) {
        VerificationReport r;
        r.name = "boundary_asymptotic";
        r.status = CheckStatus::skipped;
        r.tolerance = opts.tol_rel;
        r.note("reason", std::string("degenerate gamma (constant solution)"));
        return r;
    }
    bool ok = !m.hopf_violation && m.max_rel_dev <= opts.tol_rel && m.identity_residual <= opts.identity_tol;
    std::optional<double> fine_dev;
    if (z_fine && u_fine) {
        const auto mf = detail::measure_asymptotic(*z_fine, *u_fine, sigma, z0, opts.band);
        fine_dev = mf.max_rel_dev;
        ok = ok && !mf.hopf_violation && mf.max_rel_dev < m.max_rel_dev;
    }
    auto r = detail::make_report("boundary_asymptotic", ok, m.max_rel_dev, opts.tol_rel);
    r.note("band", static_cast<double>(opts.band))
        .note("nodes", static_cast<double>(m.nodes))
        .note("hopf_violation", std::string(m.hopf_violation ? "yes" : "no"))
        .note("identity_residual", m.identity_residual)
        .note("identity_tol", opts.identity_tol)
        .note("quotient_form_residual", m.quotient_residual);
    if (fine_dev) r.note("refined_rel_dev", *fine_dev);
    return r;
}

/// Sup-norm agreement of two solutions over inside nodes.
template <StructuredGrid G>
VerificationReport check_cross_solver(const ScalarField<G>& a, const ScalarField<G>& b, double tol,
                                      std::string name = "cross_solver") {
    detail::require_same_grid(a, b, "check_cross_solver");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a.grid->is_inside(k)) worst = std::max(worst, std::abs(a[k] - b[k]));
    }
    return detail::make_report(std::move(name), worst <= tol, worst, tol);
}

struct MartingaleOptions {
    std::size_t n_paths = 10000;
    /// Brownian-bridge exit detection between steps (see SimConfig).
    bool bridge_correction = true;
    std::size_t threads = 0;
};

struct MartingaleResult {
    VerificationReport optimal;     ///< mean cost-to-go under p* matches z(start)
    VerificationReport suboptimal;  ///< alternative control is not cheaper
    MCReport opt;
    MCReport alt;

    bool passed() const { return optimal.passed() && suboptimal.passed(); }
};

/**
 * Cost-to-go identity under the optimal feedback and its failure to improve
 * under an alternative control. Paths that hit the boundary add z0; paths cut
 * off by the horizon add z interpolated at their final state.
 */
template <StructuredGrid G, StoppingRegion<G::dimension> Region>
MartingaleResult martingale_test(const ScalarField<G>& z, const ControlField<G>& p_opt, const CostField& b,
                                 double sigma, double z0, const Region& region, SimConfig<G::dimension> cfg,
                                 const MartingaleOptions& opts = {}, const ControlField<G>* alt = nullptr) {
    if (opts.n_paths < 100) throw InvalidArgument("martingale_test: need at least 100 paths");
    cfg.bridge_correction = opts.bridge_correction;

    ControlField<G> zero{p_opt.grid, {}};
    for (auto& c : zero.components) c.assign(p_opt.grid->size(), 0.0);
    const ControlField<G>& other = alt ? *alt : zero;

    MartingaleResult res;
    res.opt = monte_carlo_cost(p_opt, region, b, sigma, cfg, opts.n_paths, z0, &z, opts.threads);
    res.alt = monte_carlo_cost(other, region, b, sigma, cfg, opts.n_paths, z0, &z, opts.threads);
    const double target = interpolate(z, cfg.start);

    // Absolute floor so exactly deterministic cases are not judged on round-off.
    constexpr double kFloor = 1e-12;
    const double dev = std::abs(res.opt.mean - target);
    const double band = 3.0 * res.opt.std_error + kFloor;
    res.optimal = detail::make_report("martingale_optimal", dev <= band, dev, band);
    res.optimal.note("mean", res.opt.mean)
        .note("z_start", target)
        .note("std_error", res.opt.std_error)
        .note("n_paths", static_cast<double>(res.opt.n))
        .note("fraction_stopped", res.opt.fraction_stopped)
        .note("mean_stop_time", res.opt.mean_stop_time)
        .note("seed", static_cast<double>(cfg.seed))
        .note("dt", cfg.dt)
        .note("bridge_correction", std::string(cfg.bridge_correction ? "on" : "off"));

    const double combined = 3.0 * std::sqrt(res.opt.std_error * res.opt.std_error +
                                            res.alt.std_error * res.alt.std_error) +
                            kFloor;
    const double gap = res.alt.mean - res.opt.mean;
    res.suboptimal = detail::make_report("martingale_suboptimal", gap >= -combined, gap, -combined);
    res.suboptimal.note("mean_alt", res.alt.mean)
        .note("mean_opt", res.opt.mean)
        .note("std_error_alt", res.alt.std_error)
        .note("control", std::string(alt ? "supplied" : "zero"));
    return res;
}

}  // namespace hjb
