// analysis.hpp — enantiomeric-excess sweeps, detection-uncertainty curves,
// and photon-number zero location
//
// The enantiomeric excess P = (N_R - N_L)/(N_R + N_L) only takes the
// discrete values (2 N_R - n)/n at fixed total n, so sweeps run over
// realizable grids and derivatives are finite differences on that grid.
// The detection uncertainty at a grid point is
//     dP = sqrt(Var(a+a)_ss) / |d<a+a>_ss/dP|,
// i.e. the steady photon-number spread divided by the local sensitivity of
// the steady photon number to composition.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ecav/error.hpp"
#include "ecav/params.hpp"

namespace ecav::analysis {

enum class Engine { ExactMe, Gdtwa };

// Per-grid-point steady-state solve settings, shared by both engines.
struct SolveConfig {
    double t_final = 10.0;  // [1/g]; doubled on NotConverged, see max_extensions
    double dt = 0.0;        // 0 -> engine default
    double tol = 1e-3;      // steady-state flatness tolerance
    double window = 0.0;    // steady window [1/g]; 0 -> 2/kappa
    long n_trajectories = 10000;  // gdtwa only
    std::uint64_t master_seed = 1;
    int sample_every = 20;
    bool heun = false;   // gdtwa: Heun corrector (coarse-step sweeps)
    int n_workers = 1;   // gdtwa trajectory threads
    double guard = 1e3;  // gdtwa blow-up bound
    int fock_cutoff = 0;      // exact only; 0 -> default_fock_cutoff
    int max_extensions = 2;   // allowed t_final doublings before NotConverged
};

struct SteadyPoint {
    double photon_mean = 0.0;
    double photon_var = 0.0;
    double photon_stderr = 0.0;  // 0 for the exact engine
    double t_final_used = 0.0;
};

// Runs the selected engine (cavity vacuum, all molecules in |3>) to steady
// state and returns the trailing-window estimates. `seed` is the ensemble
// master seed for this solve.
SteadyPoint solve_steady(const SystemParams& p, Engine engine,
                         const SolveConfig& cfg, std::uint64_t seed);

struct SweepResult {
    std::vector<double> excess_grid;  // strictly increasing, realizable
    std::vector<int> n_left, n_right;
    std::vector<double> photon_ss;
    std::vector<double> photon_var_ss;
    std::vector<double> photon_stderr;  // 0 for exact-engine sweeps
    std::vector<double> uncertainty;    // dP; filled by uncertainty_curve
    int n_total = 0;
    double eta = 0.0;
};

// Integer composition for an excess value. Throws NonRealizable when
// (1+P)*n_total/2 is not an integer (to 1e-9) or P is outside [-1, 1].
std::pair<int, int> excess_to_counts(double P, int n_total);

// Every realizable P with |P| <= p_max, anchored at the balanced
// composition and thinned by `stride` grid steps (stride 1 = every value).
std::vector<double> realizable_grid(int n_total, double p_max, int stride);

// Steady photon statistics across a composition grid. Each grid point uses
// the seed derive_seed(cfg.master_seed, point_index), so points are
// statistically independent and individually reproducible. The exact engine
// is limited to n_total <= 4.
SweepResult sweep_excess(const SystemParams& tmpl, int n_total,
                         const std::vector<double>& grid, Engine engine,
                         const SolveConfig& cfg);

struct UncertaintyCurve {
    std::vector<double> dP;   // per grid point; +inf where the slope vanishes
    std::ptrdiff_t argmin = -1;  // index of the smallest finite dP, -1 if none
    double min_value = 0.0;
};

// dP_j = sqrt(photon_var_ss_j)/|slope_j| with central-difference slopes
// (one-sided at the ends). Requires >= 3 grid points.
UncertaintyCurve uncertainty_curve(const SweepResult& s);

// Location where the curve y(x) reaches zero: takes the grid minimum, and
// when the minimum is statistically consistent with zero (y < floor, with
// floor typically 3 stderr) refines it by parabolic interpolation through
// the neighbors. Returns nullopt when the minimum is resolvably nonzero.
std::optional<double> find_zero_crossing(std::span<const double> x,
                                         std::span<const double> y,
                                         std::span<const double> floor);

// SweepResult wrapper with floor = 3 * photon_stderr.
std::optional<double> find_zero_crossing(const SweepResult& s);

struct MoleculeNumberSweep {
    std::vector<int> n_left;
    std::vector<double> photon_ss;
    std::vector<double> photon_var_ss;
    std::vector<double> photon_stderr;
    double eta = 0.0;
};

// Steady photon number vs N_L with N_R = 0 (template must declare
// n_right = 0); shares all per-point machinery with sweep_excess.
MoleculeNumberSweep sweep_molecule_number(const SystemParams& tmpl,
                                          const std::vector<int>& n_left_values,
                                          Engine engine, const SolveConfig& cfg);

// find_zero_crossing over a molecule-number sweep (x = N_L).
std::optional<double> find_zero_crossing(const MoleculeNumberSweep& s);

} // namespace ecav::analysis
