#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hjb/cost.hpp"
#include "hjb/domain.hpp"
#include "hjb/errors.hpp"
#include "hjb/field.hpp"
#include "hjb/rng.hpp"
#include "hjb/transform.hpp"

namespace hjb {

/// Production continues while the state lies in the open interval (0, length).
struct IntervalRegion {
    double length = 1.0;

    bool contains(const Point<1>& y) const { return y[0] > 0.0 && y[0] < length; }

    /// Probability that a Brownian bridge with variance sigma2_dt between two
    /// inside states touched either end of the interval.
    double crossing_probability(const Point<1>& from, const Point<1>& to, double sigma2_dt) const {
        const double lo = std::exp(-2.0 * from[0] * to[0] / sigma2_dt);
        const double hi = std::exp(-2.0 * (length - from[0]) * (length - to[0]) / sigma2_dt);
        return 1.0 - (1.0 - lo) * (1.0 - hi);
    }
};

/// Production continues while |y - x0| <= radius.
struct BallRegion {
    Point<2> x0{};
    double radius = 1.0;

    /// Ball of the sampled boundary distance around x0.
    static BallRegion around(const ReferencePoint& x0, const EllipseSpec& spec, std::size_t num_points = 1000) {
        return {x0.point(), stopping_radius(x0, spec, num_points)};
    }

    bool contains(const Point<2>& y) const { return std::hypot(y[0] - x0[0], y[1] - x0[1]) <= radius; }

    /// Bridge crossing probability against the tangent half-plane of the sphere.
    double crossing_probability(const Point<2>& from, const Point<2>& to, double sigma2_dt) const {
        const double d0 = radius - std::hypot(from[0] - x0[0], from[1] - x0[1]);
        const double d1 = radius - std::hypot(to[0] - x0[0], to[1] - x0[1]);
        return std::exp(-2.0 * d0 * d1 / sigma2_dt);
    }
};

template <class R, std::size_t D>
concept StoppingRegion = requires(const R& r, const Point<D>& y) {
    { r.contains(y) } -> std::convertible_to<bool>;
};

template <std::size_t D>
struct SimConfig {
    double dt = 0.01;
    double t_max = 10.0;
    std::uint64_t seed = 0;
    Point<D> start{};
    /// Also stop when a Brownian bridge between two consecutive inside states
    /// would have left the region (removes the O(sqrt(dt)) overshoot bias of
    /// checking only at grid times). Uses one extra uniform per step.
    bool bridge_correction = false;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("SimConfig: dt must be > 0");
        if (!(t_max >= dt) || !std::isfinite(t_max)) throw InvalidArgument("SimConfig: t_max must be >= dt");
    }

    /// Number of Euler steps that make up the horizon.
    std::size_t horizon_steps() const {
        const double ratio = t_max / dt;
        const double nearest = std::round(ratio);
        if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<std::size_t>(nearest);
        return static_cast<std::size_t>(std::ceil(ratio));
    }
};

enum class StopReason { hit_boundary, horizon_reached };

inline const char* to_string(StopReason r) {
    return r == StopReason::hit_boundary ? "hit_boundary" : "horizon_reached";
}

template <std::size_t D>
struct Trajectory {
    std::vector<double> times;
    std::vector<Point<D>> states;
    std::vector<double> costs;       ///< running cost accrued up to each stored time
    double accrued_cost = 0.0;
    StopReason stop_reason = StopReason::horizon_reached;
    double stop_time = 0.0;
    std::size_t steps = 0;           ///< Euler steps executed
    std::size_t stride = 1;          ///< every stride-th state is stored (plus the last)
};

/// Paths longer than this store every k-th state only.
inline constexpr std::size_t kMaxStoredStates = 1'000'000;

namespace detail {

struct PathOutcome {
    double cost = 0.0;
    double stop_time = 0.0;
    bool stopped = false;
    std::size_t steps = 0;
};

template <std::size_t D, class Control, class Region>
PathOutcome run_path(const Control& control, const Region& region, const CostField& b, double sigma,
                     const SimConfig<D>& cfg, Point<D>& y, Trajectory<D>* record) {
    const std::size_t n_steps = cfg.horizon_steps();
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    NormalRng rng(cfg.seed);
    PathOutcome out;
    std::size_t stride = 1;
    bool bridged = false;
    if (record) {
        stride = n_steps > kMaxStoredStates ? (n_steps + kMaxStoredStates - 1) / kMaxStoredStates : 1;
        record->stride = stride;
        record->times.push_back(0.0);
        record->states.push_back(y);
        record->costs.push_back(0.0);
    }
    for (std::size_t k = 0; k < n_steps; ++k) {
        if (!region.contains(y)) {
            out.stopped = true;
            out.stop_time = static_cast<double>(k) * dt;
            break;
        }
        const Point<D> p = control(y);
        const Point<D> before = y;
        double p2 = 0.0;
        for (std::size_t d = 0; d < D; ++d) p2 += p[d] * p[d];
        const double running = (p2 + eval_cost(b, y)) * dt;
        for (std::size_t d = 0; d < D; ++d) {
            const double xi = rng.normal();
            y[d] = y[d] + dt * p[d] + sigma * (xi * sqrt_dt);
        }
        out.cost += running;
        ++out.steps;
        if constexpr (requires { region.crossing_probability(y, y, 1.0); }) {
            if (cfg.bridge_correction && sigma > 0.0) {
                const double u = rng.uniform();
                if (region.contains(y) && u < region.crossing_probability(before, y, sigma * sigma * dt)) {
                    bridged = true;
                }
            }
        }
        if (record && ((k + 1) % stride == 0 || k + 1 == n_steps)) {
            record->times.push_back(static_cast<double>(k + 1) * dt);
            record->states.push_back(y);
            record->costs.push_back(out.cost);
        }
        if (bridged) {
            out.stopped = true;
            out.stop_time = static_cast<double>(k + 1) * dt;
            if (record && record->times.back() != out.stop_time) {
                record->times.push_back(out.stop_time);
                record->states.push_back(y);
                record->costs.push_back(out.cost);
            }
            break;
        }
    }
    if (!out.stopped) {
        out.stop_time = static_cast<double>(n_steps) * dt;
        // A final step that leaves the region is a boundary hit at the horizon.
        out.stopped = !region.contains(y);
    }
    return out;
}

template <std::size_t D, class Region>
void check_start(const Region& region, const SimConfig<D>& cfg) {
    cfg.validate();
    if (!region.contains(cfg.start)) {
        throw InvalidArgument("simulate: start state lies outside the stopping region");
    }
}

}  // namespace detail

/**
 * Euler-Maruyama for dy = p(y) dt + sigma dw.
 *
 * The stopping predicate is tested on y_k before each step; running cost
 * (|p(y_k)|^2 + b(y_k)) dt is accrued for every executed step.
 */
template <std::size_t D, class Control, StoppingRegion<D> Region>
    requires std::invocable<const Control&, const Point<D>&>
Trajectory<D> simulate(const Control& control, const Region& region, const CostField& b, double sigma,
                       const SimConfig<D>& cfg) {
    detail::check_start(region, cfg);
    if (!(sigma >= 0.0)) throw InvalidArgument("simulate: sigma must be >= 0");
    Trajectory<D> traj;
    Point<D> y = cfg.start;
    const detail::PathOutcome out = detail::run_path(control, region, b, sigma, cfg, y, &traj);
    traj.accrued_cost = out.cost;
    traj.steps = out.steps;
    traj.stop_time = out.stop_time;
    traj.stop_reason = out.stopped ? StopReason::hit_boundary : StopReason::horizon_reached;
    return traj;
}

template <StructuredGrid G, StoppingRegion<G::dimension> Region>
Trajectory<G::dimension> simulate(const ControlField<G>& p, const Region& region, const CostField& b, double sigma,
                                  const SimConfig<G::dimension>& cfg) {
    auto control = [&p](const Point<G::dimension>& y) { return query_control(p, y); };
    return simulate<G::dimension>(control, region, b, sigma, cfg);
}

struct MCReport {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    double mean_stop_time = 0.0;
    double fraction_stopped = 0.0;
};

/// Worker count: explicit request, else HJB_THREADS, else hardware concurrency.
inline std::size_t resolve_threads(std::size_t requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HJB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/**
 * Runs n_paths paths with seeds cfg.seed, cfg.seed + 1, ... and reports the
 * mean of accrued cost plus terminal value. Paths that hit the boundary add
 * terminal_value; paths cut off by the horizon add continuation(y_final) when
 * given, else terminal_value. Results are combined in seed order, so the
 * report does not depend on the thread count.
 */
template <std::size_t D, class Control, StoppingRegion<D> Region>
    requires std::invocable<const Control&, const Point<D>&>
MCReport monte_carlo_cost(const Control& control, const Region& region, const CostField& b, double sigma,
                          const SimConfig<D>& cfg, std::size_t n_paths, double terminal_value,
                          const std::function<double(const Point<D>&)>& continuation = {},
                          std::size_t threads = 0) {
    detail::check_start(region, cfg);
    if (n_paths < 2) throw InvalidArgument("monte_carlo_cost: need at least 2 paths");

    struct PathResult {
        double total;
        double stop_time;
        bool stopped;
    };
    std::vector<PathResult> results(n_paths);
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            SimConfig<D> path_cfg = cfg;
            path_cfg.seed = cfg.seed + i;
            Point<D> y = cfg.start;
            const auto out = detail::run_path<D>(control, region, b, sigma, path_cfg, y, static_cast<Trajectory<D>*>(nullptr));
            double terminal = terminal_value;
            if (!out.stopped && continuation) terminal = continuation(y);
            results[i] = {out.cost + terminal, out.stop_time, out.stopped};
        }
    };

    const std::size_t workers = std::min(resolve_threads(threads), n_paths);
    if (workers <= 1) {
        run_range(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n_paths, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool) t.join();
    }

    MCReport rep;
    rep.n = n_paths;
    double sum = 0.0;
    double stop_sum = 0.0;
    std::size_t stopped = 0;
    for (const auto& r : results) {
        sum += r.total;
        stop_sum += r.stop_time;
        stopped += r.stopped ? 1 : 0;
    }
    const double n = static_cast<double>(n_paths);
    rep.mean = sum / n;
    double ss = 0.0;
    for (const auto& r : results) ss += (r.total - rep.mean) * (r.total - rep.mean);
    rep.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    rep.mean_stop_time = stop_sum / n;
    rep.fraction_stopped = static_cast<double>(stopped) / n;
    return rep;
}

/// Same, driven by a sampled control field with z as the continuation value.
template <StructuredGrid G, StoppingRegion<G::dimension> Region>
MCReport monte_carlo_cost(const ControlField<G>& p, const Region& region, const CostField& b, double sigma,
                          const SimConfig<G::dimension>& cfg, std::size_t n_paths, double terminal_value,
                          const ScalarField<G>* z = nullptr, std::size_t threads = 0) {
    auto control = [&p](const Point<G::dimension>& y) { return query_control(p, y); };
    std::function<double(const Point<G::dimension>&)> continuation;
    if (z) continuation = [z](const Point<G::dimension>& y) { return interpolate(*z, y); };
    return monte_carlo_cost<G::dimension>(control, region, b, sigma, cfg, n_paths, terminal_value, continuation,
                                          threads);
}

}  // namespace hjb
