// exact_me.hpp — exact Lindblad master-equation solver on the truncated
// Fock ⊗ (3-level)^N Hilbert space
//
// State layout: basis index = f * 3^N + m, where f is the Fock occupation
// (0 .. fock_cutoff-1, slowest index) and m encodes the molecular levels in
// base 3, molecule 0 (the first left-handed molecule) owning the most
// significant digit. Molecules are ordered left-handed block first, then
// right-handed, matching SystemParams::chirality_of.
//
// The solver integrates
//     drho/dt = -i[H, rho] + (kappa/2)(2 a rho a+ - a+a rho - rho a+a)
// with fixed-step RK4, a dense rho and a sparse H. It is the oracle for the
// stochastic engine and the production solver up to 4 molecules; beyond
// that the Hilbert space outgrows a workstation and the GDTWA engine takes
// over.

#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ecav/error.hpp"
#include "ecav/params.hpp"

namespace ecav::exact {

using Complex = std::complex<double>;
using SparseOp = Eigen::SparseMatrix<Complex>;

// Hard ceiling on exact-ME molecule count; 3^4 * cutoff is the largest
// space worth integrating densely. Larger ensembles belong to ecav::gdtwa.
inline constexpr int kMaxMolecules = 4;

struct HilbertLayout {
    int fock_cutoff = 0;   // number of Fock states |0> .. |fock_cutoff-1>
    int n_molecules = 0;
    long mol_dim = 0;      // 3^n_molecules
    long total_dim = 0;    // fock_cutoff * mol_dim

    long index(int fock, const std::vector<int>& digits) const;
    int fock_of(long idx) const { return static_cast<int>(idx / mol_dim); }
    // Level digit (0,1,2 for levels 1,2,3) of one molecule in a basis index.
    int digit_of(long idx, int mol) const;
    long digit_stride(int mol) const;  // 3^(n_molecules-1-mol)
};

HilbertLayout make_layout(int fock_cutoff, int n_molecules);

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> photon_mean;     // <a+a>
    std::vector<double> photon_sq_mean;  // <(a+a)^2>
    // populations[mol][level-1][time_index]
    std::vector<std::array<std::vector<double>, 3>> populations;

    // Run diagnostics, maintained by evolve().
    double max_trace_drift = 0.0;  // max |Tr rho - 1|
    double max_asymmetry = 0.0;    // max |rho - rho+| over sampled times
    double max_top_fock = 0.0;     // max population of the top Fock layer
};

// H = Dc a+a + eta (a+ + a)
//   + sum_mol [ D31 s33 + (D31-D32) s22
//              + (W31 s31 + W32 e^{i phi} s32 + g s21 a + h.c.) ]
// with phi the loop phase of the molecule's chirality. Hermitian by
// construction (every off-diagonal term is inserted together with its
// conjugate).
SparseOp build_hamiltonian(const SystemParams& p, const HilbertLayout& layout);

// Cavity annihilation operator a on the layout's full space.
SparseOp annihilation_operator(const HilbertLayout& layout);

// Identity-pads a single-molecule operator onto the full space.
SparseOp embed_molecule_operator(const HilbertLayout& layout, int mol,
                                 const Eigen::Matrix3cd& op);

// |f, digits><f, digits| as a dense density matrix.
Eigen::MatrixXcd pure_basis_density(const HilbertLayout& layout, int fock,
                                    const std::vector<int>& digits);

// Scratch space reused across right-hand-side evaluations.
struct RhsWorkspace {
    Eigen::MatrixXcd h_rho;
    std::vector<double> fock_number;    // f for each basis index
    std::vector<double> sqrt_fock_up;   // sqrt(f+1) for each basis index
    void prepare(const HilbertLayout& layout);
};

// out = -i[H, rho] + (kappa/2)(2 a rho a+ - a+a rho - rho a+a).
// Assumes rho Hermitian (uses (H rho)+ = rho H), which also makes the
// returned matrix exactly Hermitian.
void lindblad_rhs(const SparseOp& H, double kappa, const HilbertLayout& layout,
                  const Eigen::MatrixXcd& rho, RhsWorkspace& ws,
                  Eigen::MatrixXcd& out);

// Allocating convenience overload.
Eigen::MatrixXcd lindblad_rhs(const SparseOp& H, double kappa,
                              const HilbertLayout& layout,
                              const Eigen::MatrixXcd& rho);

struct EvolveOptions {
    double t_final = 10.0;  // [1/g]
    double dt = 0.0;        // 0 -> default_timestep(p)
    int sample_every = 20;  // record observables every this many steps
    double top_fock_tol = 1e-4;  // cutoff-breach monitor
    double trace_tol = 1e-6;     // non-physical monitor
};

// Fixed-step RK4 integration of the master equation, recording observables
// at sampled steps (step 0 and the final step always included).
ObservableSeries evolve(const SystemParams& p, const HilbertLayout& layout,
                        const Eigen::MatrixXcd& rho0, const EvolveOptions& opts);

struct SteadyObservables {
    double photon_mean = 0.0;
    double photon_var = 0.0;  // <(a+a)^2> - <a+a>^2
    std::vector<std::array<double, 3>> populations;  // per molecule
    double window_range = 0.0;     // max-min of photon_mean over the window
    double threshold = 0.0;        // flatness threshold that was applied
    std::size_t window_begin = 0;  // first sample index inside the window
};

// Declares steady state when the trailing window of duration `window` has
// photon_mean range below tol * max(window mean, 1e-6); returns
// trailing-window averages. Throws NotConverged with the observed drift.
SteadyObservables steady_state_observables(const ObservableSeries& series,
                                           double tol, double window);

// N_c large enough that the bare driven cavity (|alpha|^2 = 4 eta^2/kappa^2)
// sits well below the top layer; the runtime breach monitor backstops it.
int default_fock_cutoff(const SystemParams& p);

// 0.002 / max rate in the problem; RK4 at the figure-scale rates (<= 12 g)
// is then far below every tolerance used here.
double default_timestep(const SystemParams& p);

} // namespace ecav::exact
