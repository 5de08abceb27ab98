#include "ecav/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "ecav/exact_me.hpp"
#include "ecav/gdtwa.hpp"
#include "ecav/observables.hpp"
#include "ecav/rng.hpp"

namespace ecav::analysis {

namespace {

double default_window(const SystemParams& p, const SolveConfig& cfg) {
    if (cfg.window > 0.0) return cfg.window;
    // The cavity decay sets the slowest relaxation scale we know a priori;
    // two lifetimes of flat data is the acceptance bar for "steady".
    return p.kappa > 0.0 ? 2.0 / p.kappa : 2.0;
}

obs::SteadyReport solve_exact(const SystemParams& p, const SolveConfig& cfg,
                              double t_final) {
    const int cutoff = cfg.fock_cutoff > 0 ? cfg.fock_cutoff
                                           : exact::default_fock_cutoff(p);
    const auto layout = exact::make_layout(cutoff, p.n_molecules());
    // All molecules start in |3>, the cavity in vacuum.
    const std::vector<int> digits(static_cast<size_t>(p.n_molecules()), 2);
    auto rho = exact::pure_basis_density(layout, 0, digits);

    exact::EvolveOptions opt;
    opt.t_final = t_final;
    opt.dt = cfg.dt;
    opt.sample_every = cfg.sample_every;
    const auto series = exact::evolve(p, layout, rho, opt);
    const auto phys = obs::physical_from_exact(series);
    return obs::try_steady_state(phys, cfg.tol, default_window(p, cfg));
}

obs::SteadyReport solve_gdtwa(const SystemParams& p, const SolveConfig& cfg,
                              double t_final, std::uint64_t seed) {
    Eigen::Matrix3cd mol = Eigen::Matrix3cd::Zero();
    mol(2, 2) = 1.0;  // |3><3|

    gdtwa::EnsembleConfig ens;
    ens.n_trajectories = cfg.n_trajectories;
    ens.dt = cfg.dt;
    ens.t_final = t_final;
    ens.master_seed = seed;
    ens.sample_every = cfg.sample_every;
    ens.guard = cfg.guard;
    ens.heun = cfg.heun;
    ens.n_workers = cfg.n_workers;
    ens.accumulate_lambdas = false;  // sweeps only need photon statistics

    const auto series =
        gdtwa::run_ensemble(p, ens, mol, gdtwa::CavityInit::vacuum());
    const auto phys = obs::physical_from_wigner(series);
    return obs::try_steady_state(phys, cfg.tol, default_window(p, cfg),
                                 obs::kAutoNoiseFloor);
}

SteadyPoint solve_with_extensions(const SystemParams& p, Engine engine,
                                  const SolveConfig& cfg, std::uint64_t seed) {
    double t_final = cfg.t_final;
    for (int attempt = 0;; ++attempt) {
        const auto report = engine == Engine::ExactMe
                                ? solve_exact(p, cfg, t_final)
                                : solve_gdtwa(p, cfg, t_final, seed);
        if (report.converged) {
            SteadyPoint pt;
            pt.photon_mean = report.photon_mean;
            pt.photon_var = report.photon_var;
            pt.photon_stderr = report.photon_stderr;
            pt.t_final_used = t_final;
            return pt;
        }
        if (attempt >= cfg.max_extensions) {
            throw Error(Errc::NotConverged,
                        "solve_steady: no steady state by t = " +
                            std::to_string(t_final) + " (window range " +
                            std::to_string(report.range) + " > threshold " +
                            std::to_string(report.threshold) +
                            "); extend t_final or loosen tol");
        }
        t_final *= 2.0;
    }
}

// Prefix a per-point failure with its grid coordinates so a long sweep
// reports which composition refused, not just that one did.
[[noreturn]] void rethrow_with_point(const Error& e, const std::string& where) {
    std::string inner = e.what();
    const std::string prefix = std::string(errc_name(e.code())) + ": ";
    if (inner.rfind(prefix, 0) == 0) inner = inner.substr(prefix.size());
    throw Error(e.code(), where + ": " + inner);
}

} // namespace

SteadyPoint solve_steady(const SystemParams& p, Engine engine,
                         const SolveConfig& cfg, std::uint64_t seed) {
    validate_params(p);
    if (cfg.t_final <= 0.0)
        throw Error(Errc::ZeroUnit, "solve_steady: t_final must be positive");
    if (cfg.tol <= 0.0)
        throw Error(Errc::ZeroUnit, "solve_steady: tol must be positive");
    if (cfg.max_extensions < 0)
        throw Error(Errc::NegativeCount,
                    "solve_steady: max_extensions must be >= 0");
    return solve_with_extensions(p, engine, cfg, seed);
}

std::pair<int, int> excess_to_counts(double P, int n_total) {
    if (n_total <= 0)
        throw Error(Errc::NegativeCount,
                    "excess_to_counts: n_total must be positive");
    if (P < -1.0 || P > 1.0)
        throw Error(Errc::NonRealizable, "excess_to_counts: excess " +
                                             std::to_string(P) +
                                             " outside [-1, 1]");
    const double right_exact = (1.0 + P) * n_total / 2.0;
    const double right_rounded = std::round(right_exact);
    if (std::abs(right_exact - right_rounded) > 1e-9)
        throw Error(Errc::NonRealizable,
                    "excess_to_counts: excess " + std::to_string(P) +
                        " needs " + std::to_string(right_exact) +
                        " right-handed molecules out of " +
                        std::to_string(n_total) +
                        "; realizable values are spaced " +
                        std::to_string(2.0 / n_total) + " apart");
    const int n_right = static_cast<int>(right_rounded);
    return {n_total - n_right, n_right};
}

std::vector<double> realizable_grid(int n_total, double p_max, int stride) {
    if (n_total <= 0)
        throw Error(Errc::NegativeCount,
                    "realizable_grid: n_total must be positive");
    if (stride <= 0)
        throw Error(Errc::NegativeCount,
                    "realizable_grid: stride must be positive");
    if (p_max < 0.0)
        throw Error(Errc::NonRealizable, "realizable_grid: p_max must be >= 0");
    // Realizable values are (2k - n)/n for k = 0..n; anchor at the balanced
    // composition (k = n/2, rounded down for odd n) so P = 0 is on even-n
    // grids and symmetric pairs stay realizable.
    const int k0 = n_total / 2;
    std::vector<double> grid;
    for (int k = k0 % stride; k <= n_total; k += stride) {
        const double p = (2.0 * k - n_total) / n_total;
        if (std::abs(p) <= p_max + 1e-12) grid.push_back(p);
    }
    return grid;
}

SweepResult sweep_excess(const SystemParams& tmpl, int n_total,
                         const std::vector<double>& grid, Engine engine,
                         const SolveConfig& cfg) {
    if (grid.empty())
        throw Error(Errc::NegativeCount, "sweep_excess: excess grid is empty");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw Error(Errc::InvalidState,
                        "sweep_excess: excess grid must be strictly increasing");
    if (engine == Engine::ExactMe && n_total > exact::kMaxMolecules)
        throw Error(Errc::MoleculeCap,
                    "sweep_excess: exact engine handles at most " +
                        std::to_string(exact::kMaxMolecules) +
                        " molecules (asked for " + std::to_string(n_total) +
                        "); use the gdtwa engine");

    SweepResult out;
    out.excess_grid = grid;
    out.n_total = n_total;
    out.eta = tmpl.eta;
    const size_t n = grid.size();
    out.n_left.resize(n);
    out.n_right.resize(n);
    out.photon_ss.resize(n);
    out.photon_var_ss.resize(n);
    out.photon_stderr.resize(n);

    for (size_t i = 0; i < n; ++i) {
        const auto [n_left, n_right] = excess_to_counts(grid[i], n_total);
        SystemParams p = tmpl;
        p.n_left = n_left;
        p.n_right = n_right;
        SteadyPoint pt;
        try {
            pt = solve_steady(p, engine, cfg, derive_seed(cfg.master_seed, i));
        } catch (const Error& e) {
            rethrow_with_point(e, "sweep_excess point P = " +
                                      std::to_string(grid[i]) + " (N_L = " +
                                      std::to_string(n_left) + ", N_R = " +
                                      std::to_string(n_right) + ")");
        }
        out.n_left[i] = n_left;
        out.n_right[i] = n_right;
        out.photon_ss[i] = pt.photon_mean;
        out.photon_var_ss[i] = pt.photon_var;
        out.photon_stderr[i] = pt.photon_stderr;
    }
    return out;
}

namespace {

// Finite-difference slopes on a (possibly nonuniform) grid: central in the
// interior, one-sided at the ends.
std::vector<double> grid_slopes(std::span<const double> x,
                                std::span<const double> y) {
    const size_t n = x.size();
    std::vector<double> slope(n);
    slope[0] = (y[1] - y[0]) / (x[1] - x[0]);
    for (size_t j = 1; j + 1 < n; ++j)
        slope[j] = (y[j + 1] - y[j - 1]) / (x[j + 1] - x[j - 1]);
    slope[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    return slope;
}

} // namespace

UncertaintyCurve uncertainty_curve(const SweepResult& s) {
    const size_t n = s.excess_grid.size();
    if (n < 3)
        throw Error(Errc::InvalidState,
                    "uncertainty_curve: need at least 3 grid points");
    if (s.photon_ss.size() != n || s.photon_var_ss.size() != n)
        throw Error(Errc::LengthMismatch,
                    "uncertainty_curve: sweep arrays do not match the grid");

    const auto slope = grid_slopes(s.excess_grid, s.photon_ss);
    UncertaintyCurve out;
    out.dP.resize(n);
    out.min_value = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j) {
        const double var = std::max(0.0, s.photon_var_ss[j]);
        out.dP[j] = std::abs(slope[j]) < 1e-12
                        ? std::numeric_limits<double>::infinity()
                        : std::sqrt(var) / std::abs(slope[j]);
        if (out.dP[j] < out.min_value) {
            out.min_value = out.dP[j];
            out.argmin = static_cast<std::ptrdiff_t>(j);
        }
    }
    return out;
}

std::optional<double> find_zero_crossing(std::span<const double> x,
                                         std::span<const double> y,
                                         std::span<const double> floor) {
    const size_t n = x.size();
    if (n < 3)
        throw Error(Errc::InvalidState,
                    "find_zero_crossing: need at least 3 grid points");
    if (y.size() != n || floor.size() != n)
        throw Error(Errc::LengthMismatch,
                    "find_zero_crossing: arrays must have equal length");

    size_t jmin = 0;
    for (size_t j = 1; j < n; ++j)
        if (y[j] < y[jmin]) jmin = j;
    if (y[jmin] >= floor[jmin]) return std::nullopt;
    if (jmin == 0 || jmin == n - 1) return x[jmin];

    // Parabola through the minimum and its neighbors, in Newton form so a
    // nonuniform grid is handled exactly.
    const double d01 = (y[jmin] - y[jmin - 1]) / (x[jmin] - x[jmin - 1]);
    const double d12 = (y[jmin + 1] - y[jmin]) / (x[jmin + 1] - x[jmin]);
    const double curvature = (d12 - d01) / (x[jmin + 1] - x[jmin - 1]);
    if (curvature <= 0.0) return x[jmin];
    const double vertex = 0.5 * (x[jmin - 1] + x[jmin]) - d01 / (2.0 * curvature);
    return std::clamp(vertex, x[jmin - 1], x[jmin + 1]);
}

std::optional<double> find_zero_crossing(const SweepResult& s) {
    std::vector<double> floor(s.photon_stderr.size());
    for (size_t j = 0; j < floor.size(); ++j)
        floor[j] = 3.0 * s.photon_stderr[j];
    return find_zero_crossing(s.excess_grid, s.photon_ss, floor);
}

MoleculeNumberSweep sweep_molecule_number(const SystemParams& tmpl,
                                          const std::vector<int>& n_left_values,
                                          Engine engine,
                                          const SolveConfig& cfg) {
    if (tmpl.n_right != 0)
        throw Error(Errc::InvalidState,
                    "sweep_molecule_number: the sweep varies N_L at N_R = 0; "
                    "the template must declare n_right = 0");
    if (n_left_values.empty())
        throw Error(Errc::NegativeCount,
                    "sweep_molecule_number: grid is empty");
    for (size_t i = 1; i < n_left_values.size(); ++i)
        if (n_left_values[i] <= n_left_values[i - 1])
            throw Error(Errc::InvalidState,
                        "sweep_molecule_number: grid must be strictly "
                        "increasing");
    if (engine == Engine::ExactMe &&
        n_left_values.back() > exact::kMaxMolecules)
        throw Error(Errc::MoleculeCap,
                    "sweep_molecule_number: exact engine handles at most " +
                        std::to_string(exact::kMaxMolecules) +
                        " molecules (asked for " +
                        std::to_string(n_left_values.back()) +
                        "); use the gdtwa engine");

    MoleculeNumberSweep out;
    out.n_left = n_left_values;
    out.eta = tmpl.eta;
    const size_t n = n_left_values.size();
    out.photon_ss.resize(n);
    out.photon_var_ss.resize(n);
    out.photon_stderr.resize(n);

    for (size_t i = 0; i < n; ++i) {
        if (n_left_values[i] < 0)
            throw Error(Errc::NegativeCount,
                        "sweep_molecule_number: n_left must be >= 0");
        SystemParams p = tmpl;
        p.n_left = n_left_values[i];
        p.n_right = 0;
        SteadyPoint pt;
        try {
            pt = solve_steady(p, engine, cfg, derive_seed(cfg.master_seed, i));
        } catch (const Error& e) {
            rethrow_with_point(e, "sweep_molecule_number point N_L = " +
                                      std::to_string(n_left_values[i]));
        }
        out.photon_ss[i] = pt.photon_mean;
        out.photon_var_ss[i] = pt.photon_var;
        out.photon_stderr[i] = pt.photon_stderr;
    }
    return out;
}

std::optional<double> find_zero_crossing(const MoleculeNumberSweep& s) {
    std::vector<double> x(s.n_left.begin(), s.n_left.end());
    std::vector<double> floor(s.photon_stderr.size());
    for (size_t j = 0; j < floor.size(); ++j)
        floor[j] = 3.0 * s.photon_stderr[j];
    return find_zero_crossing(x, s.photon_ss, floor);
}

} // namespace ecav::analysis
