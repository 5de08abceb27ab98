// acceptance — the release gate, one criterion per invocation
//
// Each criterion prints exactly one line,
//     criterion <id>: PASS — <detail>
//     criterion <id>: FAIL — <detail>
// and the process exits 0/1 accordingly, so ctest can run the criteria as
// independent entries. Every tolerance is pinned here, next to the check it
// guards, with the reasoning that produced it. Criteria with an explicit
// runtime bound enforce that bound on their own wall clock.
//
//  1  GGM algebra (orthonormality, tracelessness, expansion round-trip)
//  2  drift-oracle equivalence of the stochastic engine's mean-field drift
//     against the exact Lindblad generator on random product states
//  3  analytic bare-cavity steady state 4 eta^2/kappa^2 from both engines
//  4  single-molecule chirality contrast (phi = pi exceeds phi = 0; eta = 0
//     makes the two time series indistinguishable)
//  5  two-molecule benchmark: stochastic engine tracks the exact one within
//     max(5 stderr, 0.02) photons, and the three compositions resolve
//  6  left-only sweeps: the photon-number zero shifts to larger N_L as the
//     drive grows
//  7  mixture sweeps at fixed n_total (smoke: 60, full: 200): symmetry at
//     eta = 0, drive-shifted zeros at eta > 0, minimal detection error
//  8  symmetry suite: L/R relabel invariance, (eta, P) -> (-eta, -P) mirror,
//     worker-count determinism
//  9  conservation suite: trace, Hermiticity, population normalization

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "ecav/analysis.hpp"
#include "ecav/error.hpp"
#include "ecav/exact_me.hpp"
#include "ecav/gdtwa.hpp"
#include "ecav/ggm.hpp"
#include "ecav/observables.hpp"
#include "ecav/params.hpp"
#include "ecav/rng.hpp"

namespace {

using ecav::SystemParams;
using Complex = std::complex<double>;

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- helpers

// The figure-scale working point used throughout: Omega32 = 5g, Omega31 = g,
// kappa = 5g, eta = 4g, resonant drive, loop phases 0 (left) and pi (right).
SystemParams benchmark_params(int n_left, int n_right) {
    SystemParams p;
    p.omega31 = 1.0;
    p.omega32 = 5.0;
    p.kappa = 5.0;
    p.eta = 4.0;
    p.phi_L = 0.0;
    p.phi_R = std::numbers::pi;
    p.n_left = n_left;
    p.n_right = n_right;
    return ecav::validate_params(p);
}

// Vacuum cavity, every molecule in |3>.
Eigen::MatrixXcd initial_density(const ecav::exact::HilbertLayout& layout) {
    const std::vector<int> digits(static_cast<size_t>(layout.n_molecules), 2);
    return ecav::exact::pure_basis_density(layout, 0, digits);
}

ecav::exact::ObservableSeries evolve_me(const SystemParams& p, double t_final,
                                        double dt, int sample_every) {
    const auto layout = ecav::exact::make_layout(
        ecav::exact::default_fock_cutoff(p), p.n_molecules());
    ecav::exact::EvolveOptions opt;
    opt.t_final = t_final;
    opt.dt = dt;
    opt.sample_every = sample_every;
    return ecav::exact::evolve(p, layout, initial_density(layout), opt);
}

ecav::gdtwa::WignerMomentSeries run_gd(const SystemParams& p, long n_traj,
                                       double dt, double t_final,
                                       int sample_every, std::uint64_t seed,
                                       bool heun, bool lambdas = false) {
    ecav::gdtwa::EnsembleConfig cfg;
    cfg.n_trajectories = n_traj;
    cfg.dt = dt;
    cfg.t_final = t_final;
    cfg.master_seed = seed;
    cfg.sample_every = sample_every;
    cfg.heun = heun;
    cfg.accumulate_lambdas = lambdas;
    Eigen::Matrix3cd level3 = Eigen::Matrix3cd::Zero();
    level3(2, 2) = 1.0;
    return ecav::gdtwa::run_ensemble(p, cfg, level3,
                                     ecav::gdtwa::CavityInit::vacuum());
}

// Criterion 9's bounds, applied to every master-equation run the gate makes.
constexpr double kTraceTol = 1e-6;
constexpr double kHermTol = 1e-9;
constexpr double kPopSumTol = 1e-8;

std::optional<std::string> conservation_violation(
    const ecav::exact::ObservableSeries& s, const std::string& label) {
    if (s.max_trace_drift >= kTraceTol)
        return label + ": trace drift " + std::to_string(s.max_trace_drift);
    if (s.max_asymmetry >= kHermTol)
        return label + ": asymmetry " + std::to_string(s.max_asymmetry);
    for (size_t m = 0; m < s.populations.size(); ++m)
        for (size_t t = 0; t < s.times.size(); ++t) {
            const double sum = s.populations[m][0][t] +
                               s.populations[m][1][t] + s.populations[m][2][t];
            if (std::abs(sum - 1.0) >= kPopSumTol)
                return label + ": population sum " + std::to_string(sum) +
                       " at t = " + std::to_string(s.times[t]);
        }
    return std::nullopt;
}

double window_mean(const std::vector<double>& t, const std::vector<double>& v,
                   double t_from) {
    double sum = 0.0;
    long n = 0;
    for (size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_from - 1e-9) {
            sum += v[i];
            ++n;
        }
    return sum / static_cast<double>(n);
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << v;
    return ss.str();
}

// ------------------------------------------------------------ criterion 1

Outcome criterion_1() {
    // Algebraic identities to 1e-12: these are exact constructions, so the
    // tolerance only absorbs double rounding in the trace sums.
    constexpr double kTol = 1e-12;
    double worst_ortho = 0.0, worst_trace = 0.0, worst_round_trip = 0.0;
    ecav::Rng rng(0xacce9701);
    for (int dim : {2, 3, 4}) {
        const auto basis = ecav::ggm::build_ggm_basis(dim);
        const int n = basis.size();
        for (int mu = 0; mu < n; ++mu) {
            worst_trace = std::max(worst_trace,
                                   std::abs(basis.matrices[mu].trace()));
            for (int nu = 0; nu < n; ++nu) {
                const Complex tr =
                    (basis.matrices[mu] * basis.matrices[nu]).trace();
                const double want = mu == nu ? 2.0 : 0.0;
                worst_ortho = std::max(worst_ortho, std::abs(tr - want));
            }
        }
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::MatrixXcd a(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    a(i, j) = Complex(rng.normal(), rng.normal());
            Eigen::MatrixXcd rho = a * a.adjoint();
            rho /= rho.trace().real();
            const auto lam = ecav::ggm::ggm_expectations(basis, rho);
            const auto back = ecav::ggm::expand_density(basis, lam);
            worst_round_trip = std::max(
                worst_round_trip, (back - rho).cwiseAbs().maxCoeff());
        }
    }
    const bool pass = worst_ortho <= kTol && worst_trace <= kTol &&
                      worst_round_trip <= kTol;
    return {pass, "D in {2,3,4}: max |Tr(L L') - 2 delta| = " +
                      fmt(worst_ortho, 3) + ", max |Tr L| = " +
                      fmt(worst_trace, 3) + ", round-trip max err = " +
                      fmt(worst_round_trip, 3) + " (tol 1e-12)"};
}

// ------------------------------------------------------------ criterion 2

Complex trace_product(const ecav::exact::SparseOp& s,
                      const Eigen::MatrixXcd& r) {
    Complex sum = 0.0;
    for (int k = 0; k < s.outerSize(); ++k)
        for (ecav::exact::SparseOp::InnerIterator it(s, k); it; ++it)
            sum += it.value() * r(it.col(), it.row());
    return sum;
}

Outcome criterion_2() {
    // Mean-field drift vs the exact Lindblad generator. On a product state
    // every expectation in the drift factorizes exactly, so the two sides
    // agree to rounding when the coefficient tables match; 1e-8 (scaled by
    // max(1, |exact value|)) leaves five orders of headroom over the Fock
    // truncation tail at cutoff 14 with |alpha| <= 0.8.
    constexpr int kTrials = 200;
    constexpr double kTol = 1e-8;
    SystemParams p;
    p.omega31 = 1.0;
    p.omega32 = 5.0;
    p.delta_c = 0.7;
    p.delta31 = 0.3;
    p.delta32 = -0.4;
    p.kappa = 5.0;
    p.eta = 4.0;
    p.phi_L = 0.9;
    p.phi_R = std::numbers::pi + 0.3;
    p.n_left = 1;
    p.n_right = 1;
    p = ecav::validate_params(p);

    const auto layout = ecav::exact::make_layout(14, 2);
    const auto H = ecav::exact::build_hamiltonian(p, layout);
    const auto a_op = ecav::exact::annihilation_operator(layout);
    const auto basis = ecav::ggm::build_ggm_basis(3);

    // TrajectoryState slot order -> GGM basis index.
    const int block_of_slot[8] = {
        basis.r_index(2, 1), basis.i_index(2, 1), basis.r_index(3, 1),
        basis.i_index(3, 1), basis.r_index(3, 2), basis.i_index(3, 2),
        basis.d_index(1),    basis.d_index(2)};
    std::vector<std::vector<ecav::exact::SparseOp>> lambda_emb(2);
    for (int mol = 0; mol < 2; ++mol)
        for (int slot = 0; slot < 8; ++slot)
            lambda_emb[mol].push_back(ecav::exact::embed_molecule_operator(
                layout, mol, basis.matrices[block_of_slot[slot]]));

    ecav::Rng rng(0xacce9702);
    double worst = 0.0, sin_variant_worst = 0.0;
    for (int trial = 0; trial < kTrials; ++trial) {
        // Random pure molecular states and a random coherent amplitude.
        Eigen::Vector3cd psi[2];
        for (auto& ps : psi) {
            for (int i = 0; i < 3; ++i)
                ps(i) = Complex(rng.normal(), rng.normal());
            ps.normalize();
        }
        const Complex alpha(1.6 * rng.uniform() - 0.8,
                            1.6 * rng.uniform() - 0.8);

        Eigen::VectorXcd ket = Eigen::VectorXcd::Zero(layout.total_dim);
        double fact = 1.0;
        for (int f = 0; f < layout.fock_cutoff; ++f) {
            if (f > 0) fact *= f;
            const Complex cf = std::pow(alpha, f) / std::sqrt(fact);
            for (int d0 = 0; d0 < 3; ++d0)
                for (int d1 = 0; d1 < 3; ++d1)
                    ket(layout.index(f, {d0, d1})) = cf * psi[0](d0) * psi[1](d1);
        }
        ket.normalize();
        const Eigen::MatrixXcd rho = ket * ket.adjoint();
        const auto rhs = ecav::exact::lindblad_rhs(H, p.kappa, layout, rho);

        ecav::gdtwa::TrajectoryState s;
        s.lambdas.resize(16);
        for (int mol = 0; mol < 2; ++mol)
            for (int slot = 0; slot < 8; ++slot)
                s.lambdas[static_cast<size_t>(8 * mol + slot)] =
                    (psi[mol].adjoint() * basis.matrices[block_of_slot[slot]] *
                     psi[mol])(0).real();
        s.alpha = alpha;
        const auto d = ecav::gdtwa::drift(p, s);

        for (int mol = 0; mol < 2; ++mol)
            for (int slot = 0; slot < 8; ++slot) {
                const double exact =
                    trace_product(lambda_emb[mol][slot], rhs).real();
                const double got = d.lambdas[static_cast<size_t>(8 * mol + slot)];
                worst = std::max(worst, std::abs(got - exact) /
                                            std::max(1.0, std::abs(exact)));
                if (slot == ecav::gdtwa::kI32) {
                    // The adjudicated coefficient: replacing the cos f in the
                    // i32 drift with sin f (the appendix's other reading)
                    // must break the match outright.
                    const double phi = ecav::loop_phase(p, p.chirality_of(mol));
                    const double e = std::sqrt(3.0) *
                                         s.lambdas[static_cast<size_t>(
                                             8 * mol + ecav::gdtwa::kD2)] -
                                     s.lambdas[static_cast<size_t>(
                                         8 * mol + ecav::gdtwa::kD1)];
                    const double variant =
                        got + p.omega32 * e * (std::cos(phi) - std::sin(phi));
                    sin_variant_worst = std::max(
                        sin_variant_worst, std::abs(variant - exact));
                }
            }
        const Complex exact_da = trace_product(a_op, rhs);
        worst = std::max(worst, std::abs(d.alpha - exact_da) /
                                    std::max(1.0, std::abs(exact_da)));
    }
    const bool pass = worst <= kTol && sin_variant_worst > 1e-3;
    return {pass, "200 random product states: max scaled drift deviation = " +
                      fmt(worst, 3) + " (tol 1e-8); sin-form i32 variant off by " +
                      fmt(sin_variant_worst, 3) + " (must exceed 1e-3)"};
}

// ------------------------------------------------------------ criterion 3

Outcome criterion_3() {
    // Empty cavity: molecules absent makes the coupling irrelevant, and the
    // driven-damped mode settles to |2 eta / kappa|^2 = 2.56 photons.
    auto p = benchmark_params(0, 0);
    const double want = 4.0 * p.eta * p.eta / (p.kappa * p.kappa);

    ecav::analysis::SolveConfig cfg;
    cfg.t_final = 4.0;  // bare-cavity relaxation rate is kappa/2 = 2.5
    cfg.dt = 1e-3;
    cfg.tol = 1e-3;
    const auto me = ecav::analysis::solve_steady(
        p, ecav::analysis::Engine::ExactMe, cfg, 1);

    cfg.n_trajectories = 10000;
    cfg.master_seed = 33;
    const auto gd = ecav::analysis::solve_steady(
        p, ecav::analysis::Engine::Gdtwa, cfg, 33);

    const double me_err = std::abs(me.photon_mean - want);
    const double gd_err = std::abs(gd.photon_mean - want);
    const bool pass = me_err <= 1e-3 * want &&          // 1e-3 relative
                      gd_err <= 5.0 * gd.photon_stderr; // 5 stderr at n_t=1e4
    return {pass, "4 eta^2/kappa^2 = " + fmt(want) + ": exact " +
                      fmt(me.photon_mean, 6) + " (err " + fmt(me_err, 2) +
                      ", tol " + fmt(1e-3 * want, 2) + "), gdtwa " +
                      fmt(gd.photon_mean, 6) + " (err " + fmt(gd_err, 2) +
                      ", 5 stderr = " + fmt(5.0 * gd.photon_stderr, 2) + ")"};
}

// ------------------------------------------------------------ criterion 4

Outcome criterion_4() {
    // Single molecule at the working point. The two chiralities must give
    // resolvably different steady photon numbers (phi = pi above phi = 0),
    // and with the drive off the photon records must be indistinguishable.
    const double t_final = 20.0, dt = 1e-3;
    const auto left = evolve_me(benchmark_params(1, 0), t_final, dt, 50);
    const auto right = evolve_me(benchmark_params(0, 1), t_final, dt, 50);
    for (const auto* s : {&left, &right})
        if (auto why = conservation_violation(*s, "chirality run"))
            return {false, *why};

    // Trailing 0.4-wide window at 1e-2 flatness: the slow molecular beat of
    // this working point is below 1% of the mean by t = 20.
    const auto ss_l = ecav::exact::steady_state_observables(left, 1e-2, 0.4);
    const auto ss_r = ecav::exact::steady_state_observables(right, 1e-2, 0.4);
    // "Strictly exceeds" = the gap clears the residual flatness slop.
    const double slop = std::max(ss_l.window_range, ss_r.window_range);
    const bool contrast_ok = ss_r.photon_mean - ss_l.photon_mean > slop;

    auto p_l0 = benchmark_params(1, 0);
    auto p_r0 = benchmark_params(0, 1);
    p_l0.eta = p_r0.eta = 0.0;
    const auto dark_l = evolve_me(p_l0, 10.0, dt, 10);
    const auto dark_r = evolve_me(p_r0, 10.0, dt, 10);
    double dark_dev = 0.0;
    for (size_t i = 0; i < dark_l.times.size(); ++i)
        dark_dev = std::max({dark_dev,
                             std::abs(dark_l.photon_mean[i] -
                                      dark_r.photon_mean[i]),
                             std::abs(dark_l.photon_sq_mean[i] -
                                      dark_r.photon_sq_mean[i])});
    const bool dark_ok = dark_dev <= 1e-10;  // pointwise, both photon moments

    return {contrast_ok && dark_ok,
            "steady photons: phi=0 " + fmt(ss_l.photon_mean) + ", phi=pi " +
                fmt(ss_r.photon_mean) + " (gap " +
                fmt(ss_r.photon_mean - ss_l.photon_mean, 3) +
                " > window slop " + fmt(slop, 2) + "); eta=0 max deviation " +
                fmt(dark_dev, 3) + " (tol 1e-10)"};
}

// ------------------------------------------------------------ criterion 5

Outcome criterion_5() {
    // Two-molecule benchmark, all three compositions. Clause (i): the
    // stochastic engine tracks the exact photon record over t in [0, 10]
    // within max(5 stderr, 0.02) photons pointwise at n_t = 1e4. Clause
    // (ii): the compositions' steady photon numbers are pairwise resolvable
    // at 5 sigma. Steady values are read from the window [16, 20], where the
    // slow beat has settled; the window-mean stderr uses the cavity
    // correlation time 2/kappa = 0.4, i.e. se_win = se * sqrt(0.4 / 4).
    const double dt = 2e-3;
    const int sample_every = 25;  // 0.05 sample grid shared by both engines
    const struct {
        int n_left, n_right;
        std::uint64_t seed;
    } comps[3] = {{2, 0, 81}, {1, 1, 82}, {0, 2, 83}};

    double worst_excess = -1.0;  // max over samples of dev - threshold
    double steady[3], se_win[3];
    for (int c = 0; c < 3; ++c) {
        const auto p = benchmark_params(comps[c].n_left, comps[c].n_right);
        const auto me = evolve_me(p, 10.0, dt, sample_every);
        if (auto why = conservation_violation(me, "composition run"))
            return {false, *why};
        const auto gd_raw = run_gd(p, 10000, dt, 20.0, sample_every,
                                   comps[c].seed, /*heun=*/true);
        const auto gd = ecav::obs::physical_from_wigner(gd_raw);

        for (size_t i = 0; i < me.times.size(); ++i) {
            if (std::abs(me.times[i] - gd.times[i]) > 1e-9)
                return {false, "sample grids diverged"};
            const double dev =
                std::abs(me.photon_mean[i] - gd.photon_mean[i]);
            const double threshold =
                std::max(5.0 * gd.photon_stderr[i], 0.02);
            worst_excess = std::max(worst_excess, dev - threshold);
        }
        steady[c] = window_mean(gd.times, gd.photon_mean, 16.0);
        se_win[c] = gd.photon_stderr.back() * std::sqrt(0.4 / 4.0);
    }

    double min_resolution = 1e30;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            const double gap = std::abs(steady[a] - steady[b]);
            const double need = 5.0 * std::hypot(se_win[a], se_win[b]);
            min_resolution = std::min(min_resolution, gap - need);
        }

    const bool pass = worst_excess <= 0.0 && min_resolution > 0.0;
    return {pass, "track: worst (dev - max(5 se, 0.02)) = " +
                      fmt(worst_excess, 3) + "; steady photons (2,0)/(1,1)/(0,2) = " +
                      fmt(steady[0]) + "/" + fmt(steady[1]) + "/" +
                      fmt(steady[2]) + ", tightest pair clears 5 sigma by " +
                      fmt(min_resolution, 3)};
}

// ------------------------------------------------------- criteria 6 and 7

ecav::analysis::SolveConfig sweep_config(long n_traj, std::uint64_t seed) {
    ecav::analysis::SolveConfig cfg;
    cfg.t_final = 10.0;
    cfg.dt = 5e-3;  // Heun keeps the coarse-step drift error ~(rate dt)^3
    cfg.tol = 1e-2;
    cfg.n_trajectories = n_traj;
    cfg.master_seed = seed;
    cfg.sample_every = 10;
    cfg.heun = true;
    return cfg;
}

Outcome criterion_6() {
    // Left-only molecule-number sweeps at two drives. The interference dip
    // bottoms out at a finite incoherent background (~0.02 photons at these
    // scales), so "reaches zero" carries a 0.05-photon floor on top of the
    // 3-stderr statistical allowance; the refined dip location is what the
    // criterion actually compares.
    constexpr double kDipFloor = 0.05;
    auto tmpl = benchmark_params(0, 0);
    std::vector<int> n_left;
    for (int n = 0; n <= 60; n += 2) n_left.push_back(n);

    std::optional<double> zero[2];
    double dip[2];
    const double etas[2] = {4.0, 6.0};
    for (int k = 0; k < 2; ++k) {
        tmpl.eta = etas[k];
        const auto sweep = ecav::analysis::sweep_molecule_number(
            tmpl, n_left, ecav::analysis::Engine::Gdtwa,
            sweep_config(4000, 61 + static_cast<std::uint64_t>(k)));
        std::vector<double> x(n_left.begin(), n_left.end());
        std::vector<double> floor(sweep.photon_ss.size());
        for (size_t j = 0; j < floor.size(); ++j)
            floor[j] = std::max(3.0 * sweep.photon_stderr[j], kDipFloor);
        zero[k] = ecav::analysis::find_zero_crossing(x, sweep.photon_ss, floor);
        dip[k] = *std::min_element(sweep.photon_ss.begin(),
                                   sweep.photon_ss.end());
    }
    const bool pass = zero[0] && zero[1] && *zero[0] > 0.0 &&
                      *zero[0] < *zero[1];
    return {pass, "zero locations: N*(eta=4) = " +
                      (zero[0] ? fmt(*zero[0]) : "none") + ", N*(eta=6) = " +
                      (zero[1] ? fmt(*zero[1]) : "none") +
                      " (dip photons " + fmt(dip[0], 2) + ", " +
                      fmt(dip[1], 2) + "); require 0 < N*(4) < N*(6)"};
}

Outcome criterion_7(int n_total, const std::vector<double>& etas,
                    bool check_min_error) {
    // Mixture sweeps at fixed n_total over every 5th realizable excess.
    // (a) eta = 0: photon number symmetric under P -> -P at 5 sigma, grid
    //     minimum exactly at P = 0 and consistent with zero, where "zero"
    //     allows max(5 stderr, 1% of the sweep's dynamic range) — the same
    //     incoherent-background allowance as criterion 6, made relative
    //     because the sweep tops differ by an order of magnitude.
    // (b) eta > 0: the photon zero sits at P < 0 and moves further negative
    //     as the drive grows.
    // (c) (full scale only) minimal detection uncertainty at the strongest
    //     drive below 0.05.
    const auto grid = ecav::analysis::realizable_grid(n_total, 1.0, 5);
    auto tmpl = benchmark_params(0, 0);
    tmpl.n_left = tmpl.n_right = 0;

    std::ostringstream detail;
    std::vector<double> zeros;
    double min_dp = 1e30;
    bool ok = true;
    for (size_t k = 0; k < etas.size(); ++k) {
        tmpl.eta = etas[k];
        auto sweep = ecav::analysis::sweep_excess(
            tmpl, n_total, grid, ecav::analysis::Engine::Gdtwa,
            sweep_config(10000, 71 + static_cast<std::uint64_t>(k)));
        const double top = *std::max_element(sweep.photon_ss.begin(),
                                             sweep.photon_ss.end());

        if (etas[k] == 0.0) {
            double worst_asym = -1e30;  // max over pairs of (dev - 5 sigma)
            for (size_t j = 0; j < grid.size(); ++j) {
                const size_t jm = grid.size() - 1 - j;  // the -P partner
                const double need = 5.0 * std::hypot(sweep.photon_stderr[j],
                                                     sweep.photon_stderr[jm]);
                worst_asym = std::max(worst_asym,
                                      std::abs(sweep.photon_ss[j] -
                                               sweep.photon_ss[jm]) -
                                          need);
            }
            const auto argmin = static_cast<size_t>(
                std::min_element(sweep.photon_ss.begin(),
                                 sweep.photon_ss.end()) -
                sweep.photon_ss.begin());
            const bool center = sweep.excess_grid[argmin] == 0.0;
            const double dip = sweep.photon_ss[argmin];
            const double dip_allow =
                std::max(5.0 * sweep.photon_stderr[argmin], 0.01 * top);
            ok = ok && worst_asym <= 0.0 && center && dip <= dip_allow;
            detail << "eta=0: asym slack " << fmt(-worst_asym, 2)
                   << ", min at P=" << fmt(sweep.excess_grid[argmin], 2)
                   << " with " << fmt(dip, 2) << " photons (allow "
                   << fmt(dip_allow, 2) << "); ";
        } else {
            std::vector<double> floor(sweep.photon_ss.size());
            for (size_t j = 0; j < floor.size(); ++j)
                floor[j] = std::max(3.0 * sweep.photon_stderr[j], 0.01 * top);
            const auto z = ecav::analysis::find_zero_crossing(
                sweep.excess_grid, sweep.photon_ss, floor);
            if (!z || *z >= 0.0 || (!zeros.empty() && *z >= zeros.back()))
                ok = false;
            if (z) zeros.push_back(*z);
            detail << "eta=" << etas[k]
                   << ": zero at P=" << (z ? fmt(*z, 3) : "none") << "; ";
        }
        if (k + 1 == etas.size()) {
            const auto uc = ecav::analysis::uncertainty_curve(sweep);
            min_dp = uc.argmin >= 0 ? uc.min_value : 1e30;
        }
    }
    if (check_min_error) ok = ok && min_dp < 0.05;
    detail << "min dP(eta=" << etas.back() << ") = " << fmt(min_dp, 3)
           << (check_min_error ? " (require < 0.05)" : " (informative)");
    return {ok, detail.str()};
}

// ------------------------------------------------------------ criterion 8

Outcome criterion_8() {
    // (a) Relabeling which species is "left" is pure bookkeeping: swapping
    // the loop phases and the counts must reproduce the exact photon record
    // to 1e-12 and the per-molecule populations under the matching molecule
    // permutation.
    const double dt = 2e-3;
    const auto pa = benchmark_params(1, 1);
    auto pb_raw = pa;
    pb_raw.phi_L = pa.phi_R;
    pb_raw.phi_R = pa.phi_L;
    const auto pb = ecav::validate_params(pb_raw);
    const auto sa = evolve_me(pa, 5.0, dt, 25);
    const auto sb = evolve_me(pb, 5.0, dt, 25);
    double relabel_dev = 0.0;
    for (size_t i = 0; i < sa.times.size(); ++i) {
        relabel_dev = std::max(relabel_dev, std::abs(sa.photon_mean[i] -
                                                     sb.photon_mean[i]));
        for (int lvl = 0; lvl < 3; ++lvl) {
            // A's molecule 0 is the phi_L = 0 one; in B that molecule is
            // listed second (right-handed block), so compare 0 <-> 1.
            relabel_dev = std::max(
                relabel_dev, std::abs(sa.populations[0][lvl][i] -
                                      sb.populations[1][lvl][i]));
            relabel_dev = std::max(
                relabel_dev, std::abs(sa.populations[1][lvl][i] -
                                      sb.populations[0][lvl][i]));
        }
    }
    const bool relabel_ok = relabel_dev <= 1e-12;

    // (b) (eta, P) -> (-eta, -P) is an exact mirror (a -> -a together with a
    // per-molecule phase flip), so the two steady photon estimates are draws
    // of the same distribution: compare window means at 5 sigma.
    auto pm_a = benchmark_params(3, 7);
    auto pm_b = benchmark_params(7, 3);
    pm_b.eta = -pm_a.eta;
    const auto ga = ecav::obs::physical_from_wigner(
        run_gd(pm_a, 4000, 4e-3, 10.0, 10, 91, true));
    const auto gb = ecav::obs::physical_from_wigner(
        run_gd(pm_b, 4000, 4e-3, 10.0, 10, 91, true));
    const double mirror_gap =
        std::abs(window_mean(ga.times, ga.photon_mean, 8.0) -
                 window_mean(gb.times, gb.photon_mean, 8.0));
    const double mirror_need =
        5.0 * std::hypot(ga.photon_stderr.back(), gb.photon_stderr.back());
    const bool mirror_ok = mirror_gap <= mirror_need;

    // (c) The trajectory ensemble is a pure function of the seed: worker
    // count must not leak into any accumulated moment.
    const auto p = benchmark_params(1, 1);
    ecav::gdtwa::EnsembleConfig cfg;
    cfg.n_trajectories = 600;
    cfg.dt = dt;
    cfg.t_final = 1.0;
    cfg.master_seed = 7;
    cfg.sample_every = 10;
    Eigen::Matrix3cd level3 = Eigen::Matrix3cd::Zero();
    level3(2, 2) = 1.0;
    bool det_ok = true;
    ecav::gdtwa::WignerMomentSeries ref;
    for (int workers : {1, 4, 16}) {
        cfg.n_workers = workers;
        auto series = ecav::gdtwa::run_ensemble(
            p, cfg, level3, ecav::gdtwa::CavityInit::vacuum());
        if (workers == 1) {
            ref = std::move(series);
            continue;
        }
        det_ok = det_ok && series.m_alpha == ref.m_alpha &&
                 series.m_abs2 == ref.m_abs2 && series.m_abs4 == ref.m_abs4 &&
                 series.lambda_means == ref.lambda_means;
    }

    return {relabel_ok && mirror_ok && det_ok,
            "relabel max dev = " + fmt(relabel_dev, 3) +
                " (tol 1e-12); mirror gap = " + fmt(mirror_gap, 3) +
                " (5 sigma = " + fmt(mirror_need, 3) +
                "); workers 1/4/16 bitwise " + (det_ok ? "equal" : "UNEQUAL")};
}

// ------------------------------------------------------------ criterion 9

Outcome criterion_9() {
    // Conservation on a representative spread of exact runs (the other
    // criteria apply the same bounds to every run they make).
    double worst_trace = 0.0, worst_herm = 0.0, worst_pop = 0.0;
    const struct {
        int n_left, n_right;
        double t_final;
    } runs[] = {{0, 0, 4.0}, {1, 0, 10.0}, {0, 1, 10.0}, {1, 1, 10.0}};
    for (const auto& r : runs) {
        const auto s =
            evolve_me(benchmark_params(r.n_left, r.n_right), r.t_final, 2e-3, 25);
        worst_trace = std::max(worst_trace, s.max_trace_drift);
        worst_herm = std::max(worst_herm, s.max_asymmetry);
        for (const auto& mol : s.populations)
            for (size_t t = 0; t < s.times.size(); ++t)
                worst_pop = std::max(
                    worst_pop, std::abs(mol[0][t] + mol[1][t] + mol[2][t] - 1.0));
    }
    const bool pass = worst_trace < kTraceTol && worst_herm < kHermTol &&
                      worst_pop < kPopSumTol;
    return {pass, "max trace drift = " + fmt(worst_trace, 3) +
                      " (tol 1e-6), max asymmetry = " + fmt(worst_herm, 3) +
                      " (tol 1e-9), max |pop sum - 1| = " + fmt(worst_pop, 3) +
                      " (tol 1e-8)"};
}

// ------------------------------------------------------------------ main

struct Entry {
    const char* id;
    Outcome (*run)();
    double time_limit_s;  // 0 = not separately bounded
};

Outcome run_7smoke() { return criterion_7(60, {0.0, 2.0, 4.0}, false); }
Outcome run_7full() { return criterion_7(200, {0.0, 4.0, 12.0}, true); }

constexpr Entry kEntries[] = {
    {"1", criterion_1, 1.0},        {"2", criterion_2, 10.0},
    {"3", criterion_3, 30.0},       {"4", criterion_4, 60.0},
    {"5", criterion_5, 600.0},      {"6", criterion_6, 1800.0},
    {"7smoke", run_7smoke, 1200.0}, {"7full", run_7full, 0.0},
    {"8", criterion_8, 0.0},        {"9", criterion_9, 0.0},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance gate, one criterion per run"};
    std::string which;
    app.add_option("--criterion", which, "1..6, 7smoke, 7full, 8, 9")
        ->required();
    CLI11_PARSE(app, argc, argv);

    for (const auto& entry : kEntries) {
        if (which != entry.id) continue;
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            out = entry.run();
        } catch (const std::exception& e) {
            out = {false, std::string("unhandled error: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        if (entry.time_limit_s > 0.0 && elapsed > entry.time_limit_s) {
            out.pass = false;
            out.detail += " [over the " + fmt(entry.time_limit_s, 4) +
                          " s runtime bound]";
        }
        std::cout << "criterion " << entry.id << ": "
                  << (out.pass ? "PASS" : "FAIL") << " — " << out.detail
                  << " [" << fmt(elapsed, 3) << " s]\n";
        return out.pass ? 0 : 1;
    }
    std::cerr << "unknown criterion \"" << which << "\"\n";
    return 2;
}
