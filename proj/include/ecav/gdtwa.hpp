// gdtwa.hpp — stochastic phase-space engine (discrete Wigner sampling +
// mean-field drift + cavity Wiener noise) for large molecule ensembles
//
// Each trajectory carries one 8-component Gell-Mann expectation vector per
// molecule and one complex cavity amplitude alpha. Initial lambda values
// are drawn eigenvalue-wise from the discrete Wigner distribution of the
// molecular initial state (ecav::ggm), alpha from the Gaussian Wigner
// function of the chosen cavity state. The drift is the mean-field system
//
//   d r21 = Db i21 + 2g d1 Im a + W32 (i31 cos f - r31 sin f) + W31 i32
//   d i21 = -Db r21 - 2g d1 Re a - W32 (r31 cos f + i31 sin f) + W31 r32
//   d r31 = D31 i31 - g (r32 Im a + i32 Re a) + W32 (r21 sin f + i21 cos f)
//   d i31 = -D31 r31 + g (r32 Re a - i32 Im a) - W32 (r21 cos f - i21 sin f)
//           - W31 (d1 + sqrt3 d2)
//   d r32 = D32 i32 + g (r31 Im a - i31 Re a) + W32 (sqrt3 d2 - d1) sin f
//           - W31 i21
//   d i32 = -D32 r32 + g (r31 Re a + i31 Im a) - W32 (sqrt3 d2 - d1) cos f
//           - W31 r21
//   d d1  = -2g (r21 Im a - i21 Re a) + W32 (r32 sin f - i32 cos f) + W31 i31
//   d d2  = sqrt3 W32 (i32 cos f - r32 sin f) + sqrt3 W31 i31
//   d a   = -(i Dc + k/2) a - i eta - (i g/2) sum_mol (r21 + i i21)
//
// with Db = D31 - D32 and f the loop phase of the molecule's chirality.
// Every coefficient above is pinned by the drift-oracle test, which matches
// each component against Tr[L (-i[H, rho])] from the exact generator on
// random product states. NOTE the i32 equation carries cos f, not sin f:
// the conjugate-pair structure (and the oracle) demand it, so a sin f term
// here would break the r32/i32 pair in a way the R/I pairs of the other
// coherences rule out.
//
// Dissipation enters as an additive complex Wiener increment
// (sqrt(kappa)/2)(dw1 + i dw2) on alpha only (Euler-Maruyama; an optional
// Heun pass improves the deterministic order for coarse-step sweeps).
// Trajectory averages of products of the classical variables estimate
// symmetrically ordered operator moments.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ecav/error.hpp"
#include "ecav/params.hpp"
#include "ecav/rng.hpp"

namespace ecav::gdtwa {

// One molecule's lambda components inside TrajectoryState::lambdas,
// in storage order.
enum LambdaComp : int { kR21 = 0, kI21, kR31, kI31, kR32, kI32, kD1, kD2 };

struct TrajectoryState {
    // Per molecule (layout order: left-handed block then right-handed), the
    // 8 reals [R21, I21, R31, I31, R32, I32, D1, D2].
    std::vector<double> lambdas;
    std::complex<double> alpha{0.0, 0.0};

    int n_molecules() const { return static_cast<int>(lambdas.size() / 8); }
};

struct EnsembleConfig {
    long n_trajectories = 10000;
    double dt = 0.0;             // [1/g]; 0 -> default_timestep(p)
    double t_final = 10.0;       // [1/g]
    std::uint64_t master_seed = 1;
    int sample_every = 20;       // record moments every this many steps
    double guard = 1e3;          // |alpha| bound; beyond it = blow-up
    bool heun = false;           // Heun corrector for the deterministic part
    int n_workers = 1;           // trajectory-level threads
    bool accumulate_lambdas = true;  // off: photon moments only (sweeps)
};

struct CavityInit {
    double mean_n = 0.0;  // Wigner center at sqrt(mean_n) e^{i phase}
    double phase = 0.0;

    static CavityInit vacuum() { return {}; }
    static CavityInit coherent(double mean_n, double phase) {
        if (mean_n < 0.0)
            throw Error(Errc::NegativeCount,
                        "CavityInit: mean photon number must be >= 0");
        return {mean_n, phase};
    }
};

struct WignerMomentSeries {
    std::vector<double> times;
    std::vector<std::complex<double>> m_alpha;  // <alpha>
    std::vector<double> m_abs2;                 // <|alpha|^2>
    std::vector<double> m_abs4;                 // <|alpha|^4>
    // lambda_means[mol][comp][time], comp in TrajectoryState order; left
    // empty when EnsembleConfig::accumulate_lambdas is false.
    std::vector<std::array<std::vector<double>, 8>> lambda_means;
    long n_effective = 0;  // trajectories that completed and were averaged
    long n_requested = 0;
    long n_blowups = 0;
};

// Deterministic derivative of the full trajectory state (lambda components
// and the drift part of d alpha/dt; the returned state's alpha field holds
// that derivative). Pure function.
TrajectoryState drift(const SystemParams& p, const TrajectoryState& s);

// One Euler-Maruyama step: s + dt * drift, then the Wiener increment
// (sqrt(kappa)/2)(xi1 + i xi2) sqrt(dt) added to alpha. Throws BlowUp when
// |alpha| exceeds guard after the step.
TrajectoryState step(const SystemParams& p, const TrajectoryState& s, double dt,
                     Rng& rng, double guard = 1e3);

// Draws initial lambdas per molecule from the discrete Wigner distribution
// of mol_state and alpha from the cavity Wigner Gaussian (variance 1/4 per
// quadrature around the coherent center).
TrajectoryState sample_initial_trajectory(const SystemParams& p,
                                          const Eigen::Matrix3cd& mol_state,
                                          const CavityInit& cavity, Rng& rng);

// Evolves cfg.n_trajectories independent trajectories (trajectory i streams
// from derive_seed(master_seed, i)) and averages moments at sample times.
// The result is a pure function of the arguments: trajectories accumulate
// in fixed blocks of 256, blocks merge in a fixed pairwise tree, so any
// n_workers produces bitwise-identical output. Throws TooManyBlowUps when
// more than 0.1% of trajectories hit the guard.
WignerMomentSeries run_ensemble(const SystemParams& p, const EnsembleConfig& cfg,
                                const Eigen::Matrix3cd& mol_state,
                                const CavityInit& cavity);

// (D^2-1) * n_molecules + 1 coupled unknowns per trajectory (alpha counted
// once).
long equation_count(const SystemParams& p);

// 0.001 / max rate: Euler-Maruyama needs a finer default than RK4.
double default_timestep(const SystemParams& p);

} // namespace ecav::gdtwa
