// Command-line front end: solve1d, solve2d, simulate, verify, replay.
//
// Exit codes: 0 success, 1 numerical failure (non-convergence, failed check,
// bad data), 2 usage error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hjb/hjb.hpp"
#include "manifest.hpp"

namespace {

namespace fs = std::filesystem;
using hjb::cli::RunManifest;
using json = nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kNumericFailure = 1;
constexpr int kUsage = 2;

struct Options {
    std::size_t dim = 1;
    std::size_t n = 300;
    double sigma = 0.0;
    double z0 = 0.0;
    std::string cost;
    double a = 1.0;
    double b = 1.0;
    double h = 0.02;
    double tol = 1e-5;
    std::size_t max_iter = 10000;
    double dt = 0.01;
    double t_max = 10.0;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::vector<double> start;
    std::vector<double> x0;
    std::string out_dir = ".";
    std::string control;
    bool bridge = false;
    std::string input;
    std::size_t threads = 0;
};

// Flags whose default depends on the subcommand or dimension.
struct Explicit {
    CLI::Option* sigma = nullptr;
    CLI::Option* z0 = nullptr;
    CLI::Option* cost = nullptr;
    CLI::Option* tol = nullptr;
    CLI::Option* max_iter = nullptr;
    CLI::Option* dt = nullptr;
    CLI::Option* n_paths = nullptr;
    CLI::Option* start = nullptr;
    CLI::Option* x0 = nullptr;
    CLI::Option* control = nullptr;

    static bool given(const CLI::Option* o) { return o && o->count() > 0; }
};

void add_problem_flags(CLI::App* app, Options& o, Explicit& ex, bool with_dim) {
    // -h would clash with the grid spacing flag.
    app->set_help_flag("--help", "Print this help message and exit");
    if (with_dim) {
        app->add_option("--dim", o.dim, "Problem dimension (1 or 2)")->check(CLI::IsMember({1, 2}));
    }
    app->add_option("--n", o.n, "1D grid nodes")->check(CLI::Range(3, 100000000));
    ex.sigma = app->add_option("--sigma", o.sigma, "Noise level (1D 0.4, 2D 0.3)");
    ex.z0 = app->add_option("--z0", o.z0, "Terminal cost Z0 (1D 0.5, 2D 0.2)");
    ex.cost = app->add_option("--cost", o.cost, "Cost: const:<c>, x2, radial, table:<path>");
    app->add_option("--a", o.a, "Ellipse semi-axis along y1");
    app->add_option("--b", o.b, "Ellipse semi-axis along y2");
    app->add_option("--h", o.h, "2D grid spacing");
    ex.tol = app->add_option("--tol", o.tol, "Gauss-Seidel / outer iteration tolerance");
    ex.max_iter = app->add_option("--max-iter", o.max_iter, "Gauss-Seidel sweep limit");
    app->add_option("--out-dir", o.out_dir, "Output directory");
}

void add_sim_flags(CLI::App* app, Options& o, Explicit& ex) {
    ex.dt = app->add_option("--dt", o.dt, "Euler-Maruyama step");
    app->add_option("--t-max", o.t_max, "Simulation horizon");
    app->add_option("--seed", o.seed, "RNG seed (path i uses seed + i)");
    ex.n_paths = app->add_option("--n-paths", o.n_paths, "Monte Carlo paths");
    ex.start = app->add_option("--start", o.start, "Initial state, comma separated")->delimiter(',');
    ex.x0 = app->add_option("--x0", o.x0, "2D reference point, comma separated")->delimiter(',');
    app->add_flag("--bridge", o.bridge, "Brownian-bridge exit detection between steps");
    app->add_option("--threads", o.threads, "Monte Carlo worker threads (default HJB_THREADS)");
}

void resolve_defaults(const std::string& cmd, Options& o, const Explicit& ex) {
    const bool one = o.dim == 1;
    if (!Explicit::given(ex.sigma)) o.sigma = one ? 0.4 : 0.3;
    if (!Explicit::given(ex.z0)) o.z0 = one ? 0.5 : 0.2;
    if (!Explicit::given(ex.cost)) o.cost = one ? "const:1" : "radial";
    if (!Explicit::given(ex.start)) o.start = one ? std::vector<double>{0.5} : std::vector<double>{0.0, 0.0};
    if (!Explicit::given(ex.x0)) o.x0 = {0.0, 0.0};
    if (!Explicit::given(ex.control)) o.control = o.sigma > 0.0 ? "optimal" : "zero";
    if (cmd == "verify") {
        if (!Explicit::given(ex.dt)) o.dt = 1e-3;
        if (!Explicit::given(ex.n_paths)) o.n_paths = 10000;
        // Structural checks need the discrete solution itself, not an
        // early-stopped iterate.
        if (!one && !Explicit::given(ex.tol)) o.tol = 1e-12;
        if (!one && !Explicit::given(ex.max_iter)) o.max_iter = 200000;
    }
    if (o.start.size() != o.dim) throw hjb::InvalidArgument("--start needs " + std::to_string(o.dim) + " value(s)");
    if (o.x0.size() != 2) throw hjb::InvalidArgument("--x0 needs 2 values");
}

json params_json(const Options& o) {
    json p;
    p["dim"] = o.dim;
    if (o.dim == 1) {
        p["n"] = o.n;
    } else {
        p["a"] = o.a;
        p["b"] = o.b;
        p["h"] = o.h;
    }
    p["sigma"] = o.sigma;
    p["z0"] = o.z0;
    p["cost"] = o.cost;
    p["tol"] = o.tol;
    p["max_iter"] = o.max_iter;
    p["dt"] = o.dt;
    p["t_max"] = o.t_max;
    p["seed"] = o.seed;
    p["n_paths"] = o.n_paths;
    p["start"] = o.start;
    if (o.dim == 2) p["x0"] = o.x0;
    p["control"] = o.control;
    p["bridge_correction"] = o.bridge;
    if (!o.input.empty()) p["input"] = o.input;
    return p;
}

json stats_json(const hjb::SolveStats& s, const char* method) {
    json j;
    j["method"] = method;
    j["iterations"] = s.iterations;
    j["final_update"] = s.final_update;
    j["converged"] = s.converged;
    return j;
}

hjb::SolverConfig solver_config(const Options& o) {
    hjb::SolverConfig cfg;
    cfg.sigma = o.sigma;
    cfg.z0 = o.z0;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
    return cfg;
}

template <class G>
struct Solved {
    std::shared_ptr<const G> grid;
    hjb::ScalarField<G> b;
    hjb::ScalarField<G> u;
    hjb::ScalarField<G> z;
    hjb::ControlField<G> p;
    hjb::SolveStats stats;
};

template <class G>
void finish(Solved<G>& s, double sigma) {
    s.z = hjb::value_function(s.u, sigma);
    s.p = hjb::optimal_control(s.z);
}

Solved<hjb::Grid1D> solve_1d(const Options& o, const hjb::CostField& cost, std::size_t n) {
    Solved<hjb::Grid1D> s;
    s.grid = std::make_shared<const hjb::Grid1D>(n, 1.0);
    s.b = hjb::sample_on_grid(cost, s.grid);
    s.u = hjb::solve_1d_direct(s.grid, s.b, solver_config(o));
    s.stats = {1, 0.0, true};
    finish(s, o.sigma);
    return s;
}

Solved<hjb::MaskedGrid2D> solve_2d(const Options& o, const hjb::CostField& cost, double h) {
    Solved<hjb::MaskedGrid2D> s;
    s.grid = std::make_shared<const hjb::MaskedGrid2D>(hjb::EllipseSpec(o.a, o.b), h);
    s.b = hjb::sample_on_grid(cost, s.grid);
    auto sol = hjb::solve_2d_gauss_seidel(s.grid, s.b, solver_config(o));
    s.u = std::move(sol.field);
    s.stats = sol.stats;
    finish(s, o.sigma);
    return s;
}

void write_solution(const Solved<hjb::Grid1D>& s, const std::string& path) {
    hjb::csv::Writer w(path, {"x", "u", "z", "p_star"});
    for (std::size_t k = 0; k < s.grid->size(); ++k) {
        w.row({s.grid->node(k), s.u[k], s.z[k], s.p.components[0][k]});
    }
}

void write_solution(const Solved<hjb::MaskedGrid2D>& s, const std::string& path) {
    hjb::csv::Writer w(path, {"y1", "y2", "inside", "u", "z", "p1", "p2"});
    for (std::size_t k = 0; k < s.grid->size(); ++k) {
        const auto y = s.grid->coordinates(k);
        w.row({y[0], y[1], s.grid->is_inside(k) ? 1.0 : 0.0, s.u[k], s.z[k], s.p.components[0][k],
               s.p.components[1][k]});
    }
}

struct Context {
    Options opts;
    RunManifest manifest;
    fs::path out_dir;

    std::string output(const std::string& name) {
        manifest.outputs.push_back(name);
        return (out_dir / name).string();
    }

    void write_manifest() { manifest.write((out_dir / (manifest.command + "_manifest.json")).string()); }
};

int cmd_solve1d(Context& ctx) {
    const Options& o = ctx.opts;
    const auto cost = hjb::parse_cost_selector(o.cost);
    const auto s = solve_1d(o, cost, o.n);
    write_solution(s, ctx.output("solution1d.csv"));
    ctx.manifest.results["solve"] = stats_json(s.stats, "tridiagonal");
    ctx.manifest.results["boundary_value"] = s.u[0];
    ctx.write_manifest();
    std::cout << "SOLVE method=tridiagonal nodes=" << s.grid->size() << " bc=" << hjb::csv::format(s.u[0])
              << "\n";
    return kOk;
}

int cmd_solve2d(Context& ctx) {
    const Options& o = ctx.opts;
    const auto cost = hjb::parse_cost_selector(o.cost);
    const auto s = solve_2d(o, cost, o.h);
    write_solution(s, ctx.output("solution2d.csv"));
    ctx.manifest.results["solve"] = stats_json(s.stats, "gauss_seidel");
    ctx.manifest.results["inside_nodes"] = s.grid->count_inside();
    ctx.write_manifest();
    std::cout << "SOLVE method=gauss_seidel iterations=" << s.stats.iterations
              << " final_update=" << hjb::csv::format(s.stats.final_update)
              << " converged=" << (s.stats.converged ? "true" : "false") << "\n";
    if (!s.stats.converged) {
        std::cerr << "error: Gauss-Seidel did not converge within " << o.max_iter << " sweeps\n";
        return kNumericFailure;
    }
    return kOk;
}

template <std::size_t D>
std::function<hjb::Point<D>(const hjb::Point<D>&)> fixed_control(const std::string& sel) {
    double c = 0.0;
    if (sel != "zero") {
        if (!sel.starts_with("const:")) {
            throw hjb::InvalidArgument("--control: expected optimal, zero or const:<c>, got '" + sel + "'");
        }
        std::size_t used = 0;
        const std::string num = sel.substr(6);
        try {
            c = std::stod(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (num.empty() || used != num.size()) throw hjb::InvalidArgument("--control: bad constant in '" + sel + "'");
    }
    return [c](const hjb::Point<D>&) {
        hjb::Point<D> v;
        v.fill(c);
        return v;
    };
}

json mc_json(const hjb::MCReport& r) {
    json j;
    j["mean"] = r.mean;
    j["std_error"] = r.std_error;
    j["n"] = r.n;
    j["mean_stop_time"] = r.mean_stop_time;
    j["fraction_stopped"] = r.fraction_stopped;
    return j;
}

template <class G, class Region>
int run_simulation(Context& ctx, const Region& region, const hjb::Point<G::dimension>& start,
                   const std::function<Solved<G>()>& solve, const std::string& file) {
    constexpr std::size_t D = G::dimension;
    const Options& o = ctx.opts;
    const auto cost = hjb::parse_cost_selector(o.cost);

    hjb::SimConfig<D> cfg;
    cfg.dt = o.dt;
    cfg.t_max = o.t_max;
    cfg.seed = o.seed;
    cfg.start = start;
    cfg.bridge_correction = o.bridge;

    std::optional<Solved<G>> solved;
    if (o.sigma > 0.0) solved = solve();
    std::function<hjb::Point<D>(const hjb::Point<D>&)> control;
    if (o.control == "optimal") {
        if (!solved) throw hjb::InvalidArgument("--control optimal needs sigma > 0 (no PDE solution at sigma = 0)");
        const auto* p = &solved->p;
        control = [p](const hjb::Point<D>& y) { return hjb::query_control(*p, y); };
    } else {
        control = fixed_control<D>(o.control);
    }

    const auto traj = hjb::simulate<D>(control, region, cost, o.sigma, cfg);
    {
        std::vector<std::string> header{"t"};
        for (std::size_t d = 0; d < D; ++d) header.push_back("y" + std::to_string(d + 1));
        header.push_back("cost");
        hjb::csv::Writer w(ctx.output(file), header);
        std::vector<double> row(D + 2);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            row[0] = traj.times[k];
            for (std::size_t d = 0; d < D; ++d) row[d + 1] = traj.states[k][d];
            row[D + 1] = traj.costs[k];
            w.row(row);
        }
    }
    json t;
    t["stop_reason"] = hjb::to_string(traj.stop_reason);
    t["stop_time"] = traj.stop_time;
    t["steps"] = traj.steps;
    t["accrued_cost"] = traj.accrued_cost;
    t["stored_stride"] = traj.stride;
    ctx.manifest.results["trajectory"] = t;
    std::cout << "SIMULATE stop_reason=" << hjb::to_string(traj.stop_reason)
              << " stop_time=" << hjb::csv::format(traj.stop_time) << " steps=" << traj.steps
              << " accrued_cost=" << hjb::csv::format(traj.accrued_cost) << "\n";

    if (o.n_paths > 0) {
        std::function<double(const hjb::Point<D>&)> continuation;
        if (solved) {
            const auto* z = &solved->z;
            continuation = [z](const hjb::Point<D>& y) { return hjb::interpolate(*z, y); };
        }
        const auto rep = hjb::monte_carlo_cost<D>(control, region, cost, o.sigma, cfg, o.n_paths, o.z0, continuation,
                                                  o.threads);
        ctx.manifest.results["monte_carlo"] = mc_json(rep);
        std::cout << "MC mean=" << hjb::csv::format(rep.mean) << " std_error=" << hjb::csv::format(rep.std_error)
                  << " n=" << rep.n << " fraction_stopped=" << hjb::csv::format(rep.fraction_stopped) << "\n";
    }
    ctx.write_manifest();
    return kOk;
}

int cmd_simulate(Context& ctx) {
    const Options& o = ctx.opts;
    if (o.dim == 1) {
        const hjb::IntervalRegion region{1.0};
        return run_simulation<hjb::Grid1D>(
            ctx, region, {o.start[0]},
            [&] { return solve_1d(o, hjb::parse_cost_selector(o.cost), o.n); }, "trajectory1d.csv");
    }
    const hjb::EllipseSpec spec(o.a, o.b);
    const hjb::ReferencePoint ref({o.x0[0], o.x0[1]}, spec);
    const auto region = hjb::BallRegion::around(ref, spec);
    ctx.manifest.results["stopping_radius"] = region.radius;
    return run_simulation<hjb::MaskedGrid2D>(
        ctx, region, {o.start[0], o.start[1]},
        [&] {
            auto s = solve_2d(o, hjb::parse_cost_selector(o.cost), o.h);
            if (!s.stats.converged) throw hjb::InvalidData("Gauss-Seidel did not converge for the control field");
            return s;
        },
        "trajectory2d.csv");
}

// Replaces u (and everything derived from it) with the u column of a file.
template <class G>
void load_input(Solved<G>& s, const std::string& path, double sigma) {
    const auto table = hjb::csv::read(path);
    auto values = table.values("u");
    if (values.size() != s.grid->size()) {
        throw hjb::InvalidData("input '" + path + "' has " + std::to_string(values.size()) + " rows, expected " +
                               std::to_string(s.grid->size()));
    }
    s.u = hjb::ScalarField<G>(s.grid, std::move(values));
    finish(s, sigma);
}

struct Battery {
    std::vector<hjb::VerificationReport> reports;

    void add(hjb::VerificationReport r) { reports.push_back(std::move(r)); }

    bool all_passed() const {
        for (const auto& r : reports) {
            if (!r.passed() && !r.skipped()) return false;
        }
        return true;
    }
};

hjb::VerificationReport skipped(std::string name, std::string reason) {
    hjb::VerificationReport r;
    r.name = std::move(name);
    r.status = hjb::CheckStatus::skipped;
    r.note("reason", std::move(reason));
    return r;
}

// Gamma at each listed boundary node: positive everywhere and, for more than
// one node, within rel_spread of each other.
template <class G>
hjb::VerificationReport check_gamma(const hjb::ScalarField<G>& u, const std::vector<std::size_t>& nodes,
                                    double rel_spread) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool degenerate = false;
    bool violation = false;
    for (std::size_t k : nodes) {
        const auto g = hjb::estimate_gamma(u, k);
        degenerate = degenerate || g.status == hjb::GammaStatus::degenerate;
        violation = violation || g.status == hjb::GammaStatus::hopf_violation;
        lo = std::min(lo, g.gamma);
        hi = std::max(hi, g.gamma);
    }
    if (degenerate && !violation) return skipped("hopf_gamma", "degenerate gamma (constant solution)");
    const double spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
    hjb::VerificationReport r;
    r.name = "hopf_gamma";
    r.status = !violation && spread <= rel_spread ? hjb::CheckStatus::pass : hjb::CheckStatus::fail;
    r.measured = spread;
    r.tolerance = rel_spread;
    r.note("gamma_min", lo).note("gamma_max", hi).note("nodes", static_cast<double>(nodes.size()));
    return r;
}

int cmd_verify(Context& ctx) {
    const Options& o = ctx.opts;
    const auto cost = hjb::parse_cost_selector(o.cost);
    const double bc = hjb::boundary_value(o.sigma, o.z0);
    const hjb::SolverConfig cfg = solver_config(o);
    Battery battery;

    if (o.dim == 1) {
        auto s = solve_1d(o, cost, o.n);
        if (!o.input.empty()) load_input(s, o.input, o.sigma);
        const auto w = hjb::solve_auxiliary(s.grid, s.b, cfg).field;
        battery.add(hjb::check_sandwich(s.u, w, bc, 1e-8));
        battery.add(hjb::check_convexity_slices(s.u, 1e-8, {1}));
        battery.add(hjb::check_concavity_slices(s.z, 1e-8, {1}, &s.u));
        battery.add(check_gamma(s.u, {0, s.grid->size() - 1}, 0.05));
        const auto fine = solve_1d(o, cost, 2 * o.n - 1);
        battery.add(hjb::check_boundary_asymptotic(s.z, s.u, o.sigma, o.z0, {1, 0.05, 1e-8}, &fine.z, &fine.u));

        hjb::MonotoneOptions mo;
        mo.outer_tol = o.tol;
        const auto mono = hjb::solve_monotone_iteration(s.grid, s.b, cfg, mo);
        auto cross = hjb::check_cross_solver(s.u, mono.field, 10.0 * o.tol, "cross_solver_monotone");
        cross.note("monotone_iterations", static_cast<double>(mono.stats.iterations));
        if (!mono.stats.converged) cross.status = hjb::CheckStatus::fail;
        battery.add(std::move(cross));

        hjb::SimConfig<1> sim;
        sim.dt = o.dt;
        sim.t_max = o.t_max;
        sim.seed = o.seed;
        sim.start = {o.start[0]};
        hjb::MartingaleOptions mopts;
        mopts.n_paths = o.n_paths;
        mopts.threads = o.threads;
        const auto mart =
            hjb::martingale_test(s.z, s.p, cost, o.sigma, o.z0, hjb::IntervalRegion{1.0}, sim, mopts);
        battery.add(mart.optimal);
        battery.add(mart.suboptimal);
    } else {
        auto s = solve_2d(o, cost, o.h);
        hjb::VerificationReport solve_report;
        solve_report.name = "solve_converged";
        solve_report.measured = s.stats.final_update;
        solve_report.tolerance = o.tol;
        solve_report.status = s.stats.converged ? hjb::CheckStatus::pass : hjb::CheckStatus::fail;
        solve_report.note("iterations", static_cast<double>(s.stats.iterations));
        battery.add(std::move(solve_report));
        if (!o.input.empty()) load_input(s, o.input, o.sigma);
        const auto w = hjb::solve_auxiliary(s.grid, s.b, cfg).field;
        battery.add(hjb::check_sandwich(s.u, w, bc, 1e-8));
        // Lines fully interior to the mask; the values from four layers in are kept as notes.
        const hjb::SliceOptions deep{4};
        auto convex = hjb::check_convexity_slices(s.u, 1e-8);
        convex.note("min_depth4_measured", hjb::check_convexity_slices(s.u, 1e-8, deep).measured);
        battery.add(std::move(convex));
        auto concave = hjb::check_concavity_slices(s.z, 1e-8, {}, &s.u);
        concave.note("min_depth4_measured", hjb::check_concavity_slices(s.z, 1e-8, deep, &s.u).measured);
        battery.add(std::move(concave));

        const auto& g = *s.grid;
        const std::size_t ci = (g.nx() - 1) / 2;
        const std::size_t cj = (g.ny() - 1) / 2;
        std::vector<std::size_t> axis_nodes;
        for (std::size_t i = 0; i < g.nx(); ++i) {
            if (g.is_boundary(g.index(i, cj))) axis_nodes.push_back(g.index(i, cj));
        }
        for (std::size_t j = 0; j < g.ny(); ++j) {
            if (g.is_boundary(g.index(ci, j))) axis_nodes.push_back(g.index(ci, j));
        }
        const bool disk = o.a == o.b;
        if (disk && o.cost == "radial") {
            battery.add(hjb::check_radial_symmetry(s.u, 2e-3));
            battery.add(check_gamma(s.u, axis_nodes, 0.05));
        } else {
            battery.add(skipped("radial_symmetry", "needs a = b and the radial cost"));
            battery.add(check_gamma(s.u, axis_nodes, std::numeric_limits<double>::infinity()));
        }
        const auto fine = solve_2d(o, cost, o.h / 2.0);
        battery.add(hjb::check_boundary_asymptotic(s.z, s.u, o.sigma, o.z0, {1, 0.05, 1e-8}, &fine.z, &fine.u));

        hjb::MonotoneOptions mo;
        mo.outer_tol = o.tol;
        mo.outer_max = 100000;
        const auto mono = hjb::solve_monotone_iteration(s.grid, s.b, cfg, mo);
        auto cross = hjb::check_cross_solver(s.u, mono.field, 10.0 * o.tol, "cross_solver_monotone");
        cross.note("monotone_iterations", static_cast<double>(mono.stats.iterations));
        if (!mono.stats.converged) cross.status = hjb::CheckStatus::fail;
        battery.add(std::move(cross));
        battery.add(skipped("martingale", "Monte Carlo cost identity is run for the 1D scenario"));
    }

    std::ofstream report(ctx.output("verify_report.txt"), std::ios::binary);
    json checks = json::array();
    for (const auto& r : battery.reports) {
        report << r.block() << "\n";
        std::cout << r.summary_line() << "\n";
        json c;
        c["name"] = r.name;
        c["status"] = hjb::to_string(r.status);
        c["measured"] = r.measured;
        c["tolerance"] = r.tolerance;
        checks.push_back(c);
    }
    ctx.manifest.results["checks"] = checks;
    ctx.write_manifest();
    return battery.all_passed() ? kOk : kNumericFailure;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary);
    std::ifstream fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    const std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return ca == cb;
}

int run(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path, const std::string& out_dir) {
    const RunManifest m = RunManifest::read(manifest_path);
    const fs::path original_dir = fs::path(manifest_path).parent_path();
    const fs::path target = out_dir.empty() ? original_dir / "replay" : fs::path(out_dir);

    std::vector<std::string> args{m.command};
    for (std::size_t i = 0; i < m.argv.size(); ++i) {
        if (m.argv[i] == "--out-dir" && i + 1 < m.argv.size()) {
            ++i;
            continue;
        }
        if (m.argv[i].starts_with("--out-dir=")) continue;
        args.push_back(m.argv[i]);
    }
    args.push_back("--out-dir");
    args.push_back(target.string());

    const int code = run(args);
    bool identical = true;
    for (const auto& f : m.outputs) {
        const bool same = same_bytes(original_dir / f, target / f);
        identical = identical && same;
        std::cout << "REPLAY " << (same ? "identical " : "differs ") << f << "\n";
    }
    if (code != kOk) return code;
    return identical ? kOk : kNumericFailure;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Optimal production planning: transformed HJB solver, simulator and checks", "hjb_cli"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    Options opts;
    std::map<const CLI::App*, Explicit> explicit_flags;
    auto* solve1d = app.add_subcommand("solve1d", "Solve the 1D problem on [0, 1]");
    add_problem_flags(solve1d, opts, explicit_flags[solve1d], false);
    auto* solve2d = app.add_subcommand("solve2d", "Solve the 2D problem on an ellipse");
    add_problem_flags(solve2d, opts, explicit_flags[solve2d], false);
    auto* simulate = app.add_subcommand("simulate", "Simulate the controlled inventory to its stopping time");
    add_problem_flags(simulate, opts, explicit_flags[simulate], true);
    add_sim_flags(simulate, opts, explicit_flags[simulate]);
    explicit_flags[simulate].control = simulate->add_option("--control", opts.control, "optimal, zero or const:<c>");
    auto* verify = app.add_subcommand("verify", "Run the verification checks");
    add_problem_flags(verify, opts, explicit_flags[verify], true);
    add_sim_flags(verify, opts, explicit_flags[verify]);
    verify->add_option("--input", opts.input, "Solution CSV whose u column replaces the solved u");

    std::string manifest_path;
    std::string replay_out;
    auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare its outputs byte for byte");
    replay->add_option("--manifest", manifest_path, "Manifest written by an earlier run")->required();
    replay->add_option("--out-dir", replay_out, "Where to write the replayed outputs");

    std::vector<std::string> full{"hjb_cli"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> cargv;
    for (auto& a : full) cargv.push_back(a.data());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (replay->parsed()) return cmd_replay(manifest_path, replay_out);

        Context ctx;
        CLI::App* sub = app.get_subcommands().front();
        const std::string cmd = sub->get_name();
        if (sub == solve1d) opts.dim = 1;
        if (sub == solve2d) opts.dim = 2;
        resolve_defaults(cmd, opts, explicit_flags[sub]);
        ctx.opts = opts;
        ctx.manifest.command = cmd;
        ctx.manifest.argv.assign(args.begin() + 1, args.end());
        ctx.manifest.params = params_json(opts);
        ctx.out_dir = opts.out_dir;
        fs::create_directories(ctx.out_dir);

        if (sub == solve1d) return cmd_solve1d(ctx);
        if (sub == solve2d) return cmd_solve2d(ctx);
        if (sub == simulate) return cmd_simulate(ctx);
        return cmd_verify(ctx);
    } catch (const hjb::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}
