// observables.hpp — physical observables from either solver's raw output,
// plus the shared steady-state detector
//
// The stochastic engine reports symmetric (Weyl) ordered moments of the
// cavity amplitude; normal-ordered operator moments follow from
//     <a+a>        = <|alpha|^2>_W - 1/2
//     <(a+a)^2>    = <|alpha|^4>_W - <|alpha|^2>_W
// (the second identity is exact, not an expansion: both sides equal
// n^2 after symmetrizing a a+ a a+ orderings). Both conversions are pinned
// against the exact solver, which computes the operator moments directly.
//
// Level populations come from the diagonal of the Gell-Mann expansion:
//     P1 = 1/3 + (d1 + d2/sqrt3)/2
//     P2 = 1/3 + (-d1 + d2/sqrt3)/2
//     P3 = 1/3 - d2/sqrt3
// with d1 = <L^D_1>, d2 = <L^D_2>. They sum to 1 identically.

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ecav/error.hpp"
#include "ecav/exact_me.hpp"
#include "ecav/gdtwa.hpp"

namespace ecav::obs {

struct PhysicalSeries {
    std::vector<double> times;
    std::vector<double> photon_mean;
    std::vector<double> photon_var;
    // Cross-trajectory standard error of photon_mean per time; empty for
    // exact-solver series (which carry no sampling noise).
    std::vector<double> photon_stderr;
    // populations[mol][level-1][time]
    std::vector<std::array<std::vector<double>, 3>> populations;
    // Times whose sampled photon variance came out negative and was clipped
    // to zero (possible at small true variance with finite n_t).
    std::vector<std::uint8_t> var_clipped;
    long n_clipped = 0;
    long n_trajectories = 0;  // 0 for exact series
};

// <a+a> from the symmetric second moment.
double photon_mean_from_wigner(double m_abs2);

// Var(a+a) from the symmetric second and fourth moments. Throws
// JensenViolation if m_abs4 < m_abs2^2 beyond rounding (impossible for
// genuine trajectory averages). May return small negative values at finite
// n_t; series conversion clips and counts them.
double photon_var_from_wigner(double m_abs2, double m_abs4);

// (P1, P2, P3) from one molecule's 8 lambda means (TrajectoryState order).
std::array<double, 3> populations_from_lambdas(std::span<const double, 8> lam);

PhysicalSeries physical_from_exact(const exact::ObservableSeries& series);
PhysicalSeries physical_from_wigner(const gdtwa::WignerMomentSeries& series);

struct SteadyReport {
    bool converged = false;
    double photon_mean = 0.0;
    double photon_var = 0.0;
    // Standard error of the steady photon mean: the window-averaged
    // per-time sampling error, with no independence credit across the
    // window (conservative). 0 for exact series.
    double photon_stderr = 0.0;
    std::vector<std::array<double, 3>> populations;
    double range = 0.0;      // photon_mean max-min over the window
    double threshold = 0.0;  // flatness bound applied
    double noise_floor = 0.0;
    std::size_t window_begin = 0;
};

// Noise floor passed to detect_steady_state when the caller does not supply
// one: < 0 selects the automatic floor (6x the window-median stderr for
// stochastic series, 0 for exact ones).
inline constexpr double kAutoNoiseFloor = -1.0;

// Trailing-window flatness rule (see ecav/steady.hpp); returns the window
// averages without throwing. Also fails a stochastic window in which more
// than 1% of the variance samples were clipped.
SteadyReport try_steady_state(const PhysicalSeries& series, double tol,
                              double window,
                              double noise_floor = kAutoNoiseFloor);

// As try_steady_state, but throws NotConverged (with the observed drift)
// when the window is not flat.
SteadyReport detect_steady_state(const PhysicalSeries& series, double tol,
                                 double window,
                                 double noise_floor = kAutoNoiseFloor);

} // namespace ecav::obs
