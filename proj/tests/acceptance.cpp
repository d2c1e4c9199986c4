// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances, sizes and runtime limits are fixed here.
//
//   acceptance            scaled annealing comparison (CI gate)
//   acceptance --full     also runs the full-size annealing comparison
//   acceptance --stable   also reports the annealing comparison at dt = 0.01
//                         with initial pairs at least r_m apart (info only)

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "assembly/assembly.hpp"
#include "oracles.hpp"

using namespace assembly;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    char timing[96];
    std::snprintf(timing, sizeof timing, "%.2f s (limit %.0f s)%s", secs, limit_s, in_time ? "" : " TOO SLOW");
    std::cout << (pass ? "PASS " : "FAIL ") << id << ' ' << name << ": " << o.detail << "; " << timing << std::endl;
}

void info(const std::string& text) { std::cout << "INFO " << text << std::endl; }

std::string num(double v) { return io::format_double(v); }

unsigned hw_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// 1 ------------------------------------------------------------------------
constexpr int kForceRadii = 1000;
constexpr double kForceTol = 1e-6;

Outcome force_potential() {
    const double eps = 3.0, rm = 2.0;
    SystemParams p;
    p.lj_depth = eps;
    p.lj_rmin = rm;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> radius(0.5 * rm, 3.0 * rm);
    double worst = 0.0;
    for (int k = 0; k < kForceRadii; ++k) {
        const double r = radius(rng);
        const double h = 1e-6 * rm;
        const double fd = -(lj_potential(r + h, p) - lj_potential(r - h, p)) / (2.0 * h);
        // Force on the particle at the origin from one at r e_x; the
        // outward radial force is its negative x component.
        const Vec3 f = pair_force(Vec3{0, 0, 0}, Vec3{r, 0, 0}, p);
        const double radial = -f[0];
        worst = std::max(worst, std::abs(radial - fd) / std::max(std::abs(fd), 1e-300));
    }
    return {worst <= kForceTol, "max rel err " + num(worst) + " over " + std::to_string(kForceRadii) + " radii (tol " +
                                    num(kForceTol) + ")"};
}

// 2 ------------------------------------------------------------------------
constexpr int kClusterSeeds = 100;
constexpr int kClusterRequired = 98;

SystemParams cluster_params() {
    SystemParams p;
    p.n_particles = 20;
    p.damping = 1.0;
    p.lj_depth = 1.0;
    p.lj_rmin = 2.0;
    return p;
}

InitialDistribution cluster_init() {
    InitialDistribution d;
    d.box_lo = 0.0;
    d.box_hi = 10.0;
    d.velocity = VelocityLaw::uniform;
    d.vel_lo = 0.0;
    d.vel_hi = 1.0;
    return d;
}

Outcome cluster_relaxation() {
    const auto p = cluster_params();
    const auto grid = TimeGrid::uniform(100.0, 10000);
    std::vector<ConvergenceReport> reports(kClusterSeeds);
    parallel_for(reports.size(), hw_threads(), [&](std::size_t k) {
        const auto s0 = sample_initial_state(cluster_init(), p, k + 1);
        reports[k] = verify_convergence(rollout_noise_free(s0, grid, p), p, kDefaultSpeedTolerance,
                                        kDefaultForceTolerance);
    });
    int passed = 0, monotone = 0, settled = 0, floor = 0;
    for (const auto& r : reports) {
        passed += r.all_passed();
        monotone += r.h_monotone;
        settled += r.equilibrium_reached;
        floor += r.distance_floor_ok;
    }
    return {passed >= kClusterRequired, std::to_string(passed) + "/" + std::to_string(kClusterSeeds) +
                                            " seeds pass (need " + std::to_string(kClusterRequired) +
                                            "; H non-increasing " + std::to_string(monotone) + ", settled " +
                                            std::to_string(settled) + ", distance floor " + std::to_string(floor) +
                                            ")"};
}

// 3 ------------------------------------------------------------------------
constexpr double kFdtU = 5.0;
constexpr double kFdtB = 2.0;
constexpr double kFdtHorizon = 500.0;
constexpr double kFdtDt = 0.01;
constexpr double kFdtBurnIn = 10.0;
constexpr int kFdtReplicates = 16;
constexpr double kFdtRelTol = 0.10;

Outcome fluctuation_dissipation() {
    SystemParams p;
    p.n_particles = 1;
    p.damping = kFdtB;
    p.interactions = false;
    const auto steps = static_cast<std::size_t>(std::llround(kFdtHorizon / kFdtDt));
    const auto grid = TimeGrid::uniform(kFdtHorizon, steps);
    const std::vector<double> u(grid.n_points(), kFdtU);
    const auto burn = static_cast<std::size_t>(std::llround(kFdtBurnIn / kFdtDt));
    std::vector<std::array<double, 6>> sums(kFdtReplicates);  // sum v_a, sum v_a^2
    std::vector<std::size_t> counts(kFdtReplicates, 0);
    parallel_for(sums.size(), hw_threads(), [&](std::size_t k) {
        std::vector<Vec3> dw(steps);
        draw_noise_path(2024, k, steps, 1, grid.dt(), dw);
        sums[k].fill(0.0);
        simulate(SystemState::at_rest({Vec3{0, 0, 0}}), u, NoisePath(dw, steps, 1), grid, p,
                 [&](std::size_t n, std::span<const Vec3>, std::span<const Vec3> v) {
                     if (n <= burn) return;
                     for (int a = 0; a < 3; ++a) {
                         sums[k][a] += v[0][a];
                         sums[k][3 + a] += v[0][a] * v[0][a];
                     }
                     ++counts[k];
                 });
    });
    bool ok = true;
    std::string detail = "variance per component";
    for (int a = 0; a < 3; ++a) {
        double s = 0.0, q = 0.0, n = 0.0;
        for (std::size_t k = 0; k < sums.size(); ++k) {
            s += sums[k][a];
            q += sums[k][3 + a];
            n += static_cast<double>(counts[k]);
        }
        const double mean = s / n;
        const double var = q / n - mean * mean;
        ok = ok && std::abs(var - kFdtU) <= kFdtRelTol * kFdtU;
        detail += (a ? ", " : " ") + num(var);
    }
    return {ok, detail + " (target " + num(kFdtU) + " +- " + num(100 * kFdtRelTol) + "%, " +
                    std::to_string(kFdtReplicates) + " replicates)"};
}

// 4 ------------------------------------------------------------------------
constexpr int kBalanceReps = 20;
constexpr int kBalanceRequired = 19;
constexpr std::size_t kBalancePaths = 1000;

struct BalanceTally {
    int consistent = 0;
    int riemann = 0;
    double worst_z = 0.0;
};

BalanceTally energy_balance_runs() {
    SystemParams p;
    p.n_particles = 5;
    p.damping = 2.0;
    p.lj_depth = 3.0;
    p.lj_rmin = 2.0;
    InitialDistribution d;
    d.box_lo = 0.0;
    d.box_hi = 10.0;
    d.vel_variance = 4.0;
    d.min_separation = 1.0;
    const auto grid = TimeGrid::uniform(2.0, 200);
    const std::vector<double> u(grid.n_points(), 2.0);
    BalanceTally tally;
    for (int rep = 0; rep < kBalanceReps; ++rep) {
        const std::uint64_t seed = 5000 + static_cast<std::uint64_t>(rep);
        std::vector<TrajectoryRecord> trajs(kBalancePaths);
        parallel_for(trajs.size(), hw_threads(), [&](std::size_t k) {
            std::vector<Vec3> dw(grid.n_steps() * 5);
            draw_noise_path(seed, k, grid.n_steps(), 5, grid.dt(), dw);
            trajs[k] = rollout(sample_initial_state(d, p, seed, k), u, NoisePath(dw, grid.n_steps(), 5), grid, p);
        });
        const auto c = check_energy_balance_stochastic(trajs, u, p, BalanceQuadrature::consistent);
        const auto r = check_energy_balance_stochastic(trajs, u, p, BalanceQuadrature::riemann);
        tally.consistent += c.pass;
        tally.riemann += r.pass;
        tally.worst_z = std::max(tally.worst_z, std::abs(c.gap) / c.std_error);
    }
    return tally;
}

BalanceTally balance_tally;

Outcome energy_balance() {
    balance_tally = energy_balance_runs();
    return {balance_tally.consistent >= kBalanceRequired,
            std::to_string(balance_tally.consistent) + "/" + std::to_string(kBalanceReps) +
                " repetitions within 3 SE (need " + std::to_string(kBalanceRequired) + "; largest |gap|/SE " +
                num(balance_tally.worst_z) + ")"};
}

// 5 ------------------------------------------------------------------------
constexpr int kGradientInstances = 20;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientStep = 1e-5;

Outcome gradient_check() {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> n_draw(1, 3), steps_draw(1, 10), m_draw(1, 3);
    std::uniform_real_distribution<double> u_draw(0.5, 5.0);
    double worst = 0.0;
    for (int trial = 0; trial < kGradientInstances; ++trial) {
        SystemParams p;
        p.n_particles = n_draw(rng);
        p.damping = 2.0;
        p.lj_depth = 3.0;
        p.lj_rmin = 2.0;
        InitialDistribution d;
        d.box_hi = 5.0;
        d.vel_variance = 1.0;
        d.min_separation = 0.9;
        const auto steps = static_cast<std::size_t>(steps_draw(rng));
        const auto m = static_cast<std::size_t>(m_draw(rng));
        const auto problem = make_saa_problem(p, TimeGrid::uniform(0.05 * static_cast<double>(steps), steps), d, m,
                                              900 + static_cast<std::uint64_t>(trial), 0.0, 50.0, true);
        std::vector<double> u(steps + 1);
        for (auto& v : u) v = u_draw(rng);
        const auto g = saa_gradient(u, problem);
        const auto fd = oracle::central_difference(
            [&](const std::vector<double>& v) { return saa_objective(v, problem); }, u, kGradientStep);
        worst = std::max(worst, oracle::relative_error(g, fd));
    }
    return {worst <= kGradientTol, "max rel err " + num(worst) + " over " + std::to_string(kGradientInstances) +
                                       " instances (tol " + num(kGradientTol) + ")"};
}

// 6 ------------------------------------------------------------------------
constexpr int kProjectionInstances = 100;
constexpr double kProjectionTol = 1e-6;
constexpr int kGridLevels = 33;

Outcome projection_check() {
    std::mt19937_64 rng(66);
    std::uniform_int_distribution<int> steps_draw(1, 6);
    std::uniform_real_distribution<double> lo_draw(0.0, 10.0), width(0.0, 40.0), coord(-10.0, 60.0);
    double worst_exact = 0.0, worst_grid = 0.0;
    for (int trial = 0; trial < kProjectionInstances; ++trial) {
        std::vector<double> z(static_cast<std::size_t>(steps_draw(rng)) + 1);
        for (auto& v : z) v = coord(rng);
        const double lo = lo_draw(rng), hi = lo + width(rng);
        const bool monotone = trial % 5 != 0;
        const auto p = project_feasible(z, lo, hi, monotone);
        if (!p.is_feasible()) return {false, "infeasible projection on instance " + std::to_string(trial)};
        worst_exact = std::max(worst_exact, oracle::distance(p.values, oracle::project_exhaustive(z, lo, hi, monotone)));
        // No point of the dense grid may be closer to z than the projection.
        const double grid = oracle::grid_min_distance(z, lo, hi, monotone, kGridLevels);
        worst_grid = std::max(worst_grid, oracle::distance(p.values, z) - grid);
    }
    const bool ok = worst_exact <= kProjectionTol && worst_grid <= kProjectionTol;
    return {ok, "max distance to exhaustive oracle " + num(worst_exact) + ", max excess over " +
                    std::to_string(kGridLevels) + "-level grid optimum " + num(worst_grid) + " on " +
                    std::to_string(kProjectionInstances) + " instances (tol " + num(kProjectionTol) + ")"};
}

// 7, 8 ---------------------------------------------------------------------
ExperimentConfig annealing_config(int n, double horizon, std::size_t steps, std::size_t samples, const fs::path& out) {
    ExperimentConfig cfg;
    cfg.params = SystemParams{n, 2.0, 3.0, 2.0, true};
    cfg.horizon = horizon;
    cfg.steps = steps;
    cfg.u_min = 0.0;
    cfg.u_max = 50.0;
    cfg.samples = samples;
    cfg.holdout = 200;
    cfg.seed_train = 1;
    cfg.seed_holdout = 2;
    cfg.compare_a = ScheduleSource{SourceKind::optimize, {}};
    cfg.compare_b = ScheduleSource{SourceKind::newton, {}};
    cfg.svg = false;
    cfg.out_dir = out.string();
    cfg.validate();
    return cfg;
}

Outcome ordering(const ExperimentConfig& cfg) {
    std::ostringstream sink;
    CommandContext ctx{cfg, hw_threads(), nullptr, &sink};
    cmd_compare(ctx);
    const auto j = nlohmann::json::parse(io::read_text_file(fs::path(cfg.out_dir) / "comparison.json"));
    const double diff = j["paired_difference"].get<double>();
    const double se = j["paired_stderr"].get<double>();
    const bool ok = diff <= -se;
    return {ok, "optimized " + num(j["mean_a"].get<double>()) + " vs Newton " + num(j["mean_b"].get<double>()) +
                    ", paired difference " + num(diff) + " (need <= -" + num(se) + ")"};
}

Outcome determinism(const fs::path& root) {
    std::vector<std::string> schedules, reports;
    for (unsigned threads : {1u, 2u, 8u}) {
        const auto dir = root / ("threads_" + std::to_string(threads));
        const auto cfg = annealing_config(10, 5.0, 50, 30, dir);
        CommandContext ctx{cfg, threads, nullptr, nullptr};
        try {
            cmd_optimize(ctx);
        } catch (const SolverFailure&) {
            // the partial report is still written and must match as well
        }
        schedules.push_back(fs::exists(dir / "schedule.csv") ? io::read_text_file(dir / "schedule.csv") : "");
        reports.push_back(io::read_text_file(dir / "report.json"));
    }
    const bool ok = schedules[0] == schedules[1] && schedules[0] == schedules[2] && reports[0] == reports[1] &&
                    reports[0] == reports[2] && !reports[0].empty();
    return {ok, std::string(ok ? "schedule and report files byte-identical" : "files differ") +
                    " at 1, 2 and 8 threads"};
}

}  // namespace

int main(int argc, char** argv) {
    bool full = false, stable = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--full") full = true;
        else if (arg == "--stable") stable = true;
        else {
            std::cerr << "usage: acceptance [--full] [--stable]\n";
            return 2;
        }
    }
    const fs::path scratch = fs::temp_directory_path() / "assembly_acceptance";
    fs::remove_all(scratch);

    report(1, "force-potential consistency", 1, force_potential);
    report(2, "noise-free cluster relaxation", 120, cluster_relaxation);
    report(3, "fluctuation-dissipation", 10, fluctuation_dissipation);
    report(4, "stochastic energy balance", 120, energy_balance);
    info("energy balance with right-endpoint sums: " + std::to_string(balance_tally.riemann) + "/" +
         std::to_string(kBalanceReps) + " repetitions within 3 SE");
    report(5, "SAA gradient", 60, gradient_check);
    report(6, "projection optimality", 30, projection_check);
    report(7, "annealing ordering (scaled N=10, T=5, M=30)", 180,
           [&] { return ordering(annealing_config(10, 5.0, 50, 30, scratch / "scaled")); });
    if (full) {
        report(7, "annealing ordering (full N=30, T=10, M=100)", 1800,
               [&] { return ordering(annealing_config(30, 10.0, 100, 100, scratch / "full")); });
    }
    if (stable) {
        auto cfg = annealing_config(10, 5.0, 500, 30, scratch / "stable");
        cfg.init.min_separation = 1.0;
        const auto o = ordering(cfg);
        info("annealing ordering at dt = 0.01, initial pairs >= r_m apart: " + std::string(o.pass ? "holds" : "fails") +
             "; " + o.detail);
    }
    report(8, "determinism across thread counts", 600, [&] { return determinism(scratch / "determinism"); });

    fs::remove_all(scratch);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
