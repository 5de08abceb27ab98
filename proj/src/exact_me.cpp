// exact_me.cpp — sparse Hamiltonian assembly and RK4 Lindblad integration

#include "ecav/exact_me.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ecav/steady.hpp"

namespace ecav::exact {

namespace {

constexpr Complex kI{0.0, 1.0};

long pow3(int n) {
    long r = 1;
    for (int k = 0; k < n; ++k) r *= 3;
    return r;
}

} // namespace

long HilbertLayout::index(int fock, const std::vector<int>& digits) const {
    if (fock < 0 || fock >= fock_cutoff)
        throw Error(Errc::InvalidState,
                    "HilbertLayout::index: fock " + std::to_string(fock) +
                        " outside [0," + std::to_string(fock_cutoff - 1) + "]");
    if (static_cast<int>(digits.size()) != n_molecules)
        throw Error(Errc::LengthMismatch,
                    "HilbertLayout::index: " + std::to_string(digits.size()) +
                        " digits for " + std::to_string(n_molecules) + " molecules");
    long m = 0;
    for (int d : digits) {
        if (d < 0 || d > 2)
            throw Error(Errc::InvalidState,
                        "HilbertLayout::index: level digit " + std::to_string(d));
        m = m * 3 + d;
    }
    return fock * mol_dim + m;
}

int HilbertLayout::digit_of(long idx, int mol) const {
    return static_cast<int>((idx / digit_stride(mol)) % 3);
}

long HilbertLayout::digit_stride(int mol) const {
    return pow3(n_molecules - 1 - mol);
}

HilbertLayout make_layout(int fock_cutoff, int n_molecules) {
    if (fock_cutoff < 1)
        throw Error(Errc::CutoffTooSmall,
                    "make_layout: fock_cutoff " + std::to_string(fock_cutoff));
    if (n_molecules < 0)
        throw Error(Errc::NegativeCount,
                    "make_layout: n_molecules " + std::to_string(n_molecules));
    if (n_molecules > kMaxMolecules)
        throw Error(Errc::MoleculeCap,
                    "make_layout: " + std::to_string(n_molecules) +
                        " molecules exceeds the exact-solver cap of " +
                        std::to_string(kMaxMolecules) +
                        "; use the gdtwa engine for larger ensembles");
    HilbertLayout layout;
    layout.fock_cutoff = fock_cutoff;
    layout.n_molecules = n_molecules;
    layout.mol_dim = pow3(n_molecules);
    layout.total_dim = layout.mol_dim * fock_cutoff;
    return layout;
}

SparseOp build_hamiltonian(const SystemParams& p, const HilbertLayout& layout) {
    const int n = layout.n_molecules;
    if (n != p.n_molecules())
        throw Error(Errc::LengthMismatch,
                    "build_hamiltonian: layout has " + std::to_string(n) +
                        " molecules, params declare " +
                        std::to_string(p.n_molecules()));
    if (layout.fock_cutoff < 2 && (p.eta != 0.0 || p.g != 0.0))
        throw Error(Errc::CutoffTooSmall,
                    "build_hamiltonian: fock_cutoff " +
                        std::to_string(layout.fock_cutoff) +
                        " cannot host drive or coupling; need at least 2");

    const long dim = layout.total_dim;
    const long M = layout.mol_dim;
    const int nc = layout.fock_cutoff;

    std::vector<Complex> phase(n);  // e^{i phi_Q} per molecule
    for (int mol = 0; mol < n; ++mol) {
        const double phi = loop_phase(p, p.chirality_of(mol));
        phase[mol] = Complex(std::cos(phi), std::sin(phi));
    }

    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(dim) * (3 + 3 * n));

    for (long j = 0; j < dim; ++j) {
        const int f = layout.fock_of(j);

        double diag = p.delta_c * f;
        for (int mol = 0; mol < n; ++mol) {
            const int d = layout.digit_of(j, mol);
            if (d == 2) diag += p.delta31;
            if (d == 1) diag += p.delta31 - p.delta32;
        }
        if (diag != 0.0) trip.emplace_back(j, j, Complex(diag, 0.0));

        // eta (a+ + a)
        if (p.eta != 0.0) {
            if (f + 1 < nc)
                trip.emplace_back(j + M, j, Complex(p.eta * std::sqrt(f + 1.0), 0.0));
            if (f > 0)
                trip.emplace_back(j - M, j, Complex(p.eta * std::sqrt(double(f)), 0.0));
        }

        for (int mol = 0; mol < n; ++mol) {
            const int d = layout.digit_of(j, mol);
            const long stride = layout.digit_stride(mol);
            // W31 (s31 + s13): couples digits 0 <-> 2
            if (p.omega31 != 0.0) {
                if (d == 0) trip.emplace_back(j + 2 * stride, j, Complex(p.omega31, 0.0));
                if (d == 2) trip.emplace_back(j - 2 * stride, j, Complex(p.omega31, 0.0));
            }
            // W32 e^{i phi} s32 + h.c.: couples digits 1 <-> 2
            if (p.omega32 != 0.0) {
                if (d == 1) trip.emplace_back(j + stride, j, p.omega32 * phase[mol]);
                if (d == 2) trip.emplace_back(j - stride, j, p.omega32 * std::conj(phase[mol]));
            }
            // g s21 a + g a+ s12: |1,f> -> |2,f-1> and back
            if (p.g != 0.0) {
                if (d == 0 && f > 0)
                    trip.emplace_back(j + stride - M, j,
                                      Complex(p.g * std::sqrt(double(f)), 0.0));
                if (d == 1 && f + 1 < nc)
                    trip.emplace_back(j - stride + M, j,
                                      Complex(p.g * std::sqrt(f + 1.0), 0.0));
            }
        }
    }

    SparseOp H(dim, dim);
    H.setFromTriplets(trip.begin(), trip.end());
    H.makeCompressed();
    return H;
}

SparseOp annihilation_operator(const HilbertLayout& layout) {
    const long M = layout.mol_dim;
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(layout.total_dim);
    for (long j = M; j < layout.total_dim; ++j) {
        const int f = layout.fock_of(j);
        trip.emplace_back(j - M, j, Complex(std::sqrt(double(f)), 0.0));
    }
    SparseOp a(layout.total_dim, layout.total_dim);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    return a;
}

SparseOp embed_molecule_operator(const HilbertLayout& layout, int mol,
                                 const Eigen::Matrix3cd& op) {
    if (mol < 0 || mol >= layout.n_molecules)
        throw Error(Errc::InvalidState,
                    "embed_molecule_operator: molecule " + std::to_string(mol) +
                        " outside [0," + std::to_string(layout.n_molecules - 1) + "]");
    const long stride = layout.digit_stride(mol);
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(layout.total_dim * 3);
    for (long j = 0; j < layout.total_dim; ++j) {
        const int d = layout.digit_of(j, mol);
        const long base = j - d * stride;
        for (int r = 0; r < 3; ++r) {
            const Complex v = op(r, d);
            if (v != Complex(0.0, 0.0)) trip.emplace_back(base + r * stride, j, v);
        }
    }
    SparseOp out(layout.total_dim, layout.total_dim);
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

Eigen::MatrixXcd pure_basis_density(const HilbertLayout& layout, int fock,
                                    const std::vector<int>& digits) {
    const long idx = layout.index(fock, digits);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(layout.total_dim, layout.total_dim);
    rho(idx, idx) = 1.0;
    return rho;
}

void RhsWorkspace::prepare(const HilbertLayout& layout) {
    const long dim = layout.total_dim;
    if (static_cast<long>(fock_number.size()) == dim) return;
    h_rho.resize(dim, dim);
    fock_number.resize(dim);
    sqrt_fock_up.resize(dim);
    for (long i = 0; i < dim; ++i) {
        const int f = layout.fock_of(i);
        fock_number[i] = f;
        sqrt_fock_up[i] = std::sqrt(f + 1.0);
    }
}

void lindblad_rhs(const SparseOp& H, double kappa, const HilbertLayout& layout,
                  const Eigen::MatrixXcd& rho, RhsWorkspace& ws,
                  Eigen::MatrixXcd& out) {
    ws.prepare(layout);
    const long dim = layout.total_dim;
    const long M = layout.mol_dim;
    const long top_start = dim - M;  // first index of the top Fock layer

    // -i[H, rho] = i((H rho)+ - H rho) for Hermitian rho.
    ws.h_rho.noalias() = H * rho;
    out = ws.h_rho.adjoint();
    out -= ws.h_rho;
    out *= kI;

    if (kappa == 0.0) return;

    // (kappa/2)(2 a rho a+ - a+a rho - rho a+a), all diagonal in Fock index
    // arithmetic: (a rho a+)_{ij} = sqrt(f_i+1) sqrt(f_j+1) rho_{i+M, j+M}.
    const double half_kappa = 0.5 * kappa;
    for (long j = 0; j < dim; ++j) {
        const double fj = ws.fock_number[j];
        const double sj = ws.sqrt_fock_up[j];
        const Complex* rcol = rho.col(j).data();
        Complex* ocol = out.col(j).data();
        if (j < top_start) {
            const Complex* rup = rho.col(j + M).data() + M;
            for (long i = 0; i < top_start; ++i)
                ocol[i] += kappa * ws.sqrt_fock_up[i] * sj * rup[i] -
                           half_kappa * (ws.fock_number[i] + fj) * rcol[i];
            for (long i = top_start; i < dim; ++i)
                ocol[i] -= half_kappa * (ws.fock_number[i] + fj) * rcol[i];
        } else {
            for (long i = 0; i < dim; ++i)
                ocol[i] -= half_kappa * (ws.fock_number[i] + fj) * rcol[i];
        }
    }
}

Eigen::MatrixXcd lindblad_rhs(const SparseOp& H, double kappa,
                              const HilbertLayout& layout,
                              const Eigen::MatrixXcd& rho) {
    RhsWorkspace ws;
    Eigen::MatrixXcd out(layout.total_dim, layout.total_dim);
    lindblad_rhs(H, kappa, layout, rho, ws, out);
    return out;
}

namespace {

void record_sample(const HilbertLayout& layout, const Eigen::MatrixXcd& rho,
                   double t, ObservableSeries& series) {
    const long dim = layout.total_dim;
    double mean = 0.0, sq = 0.0;
    for (long i = 0; i < dim; ++i) {
        const double f = layout.fock_of(i);
        const double pop = rho(i, i).real();
        mean += f * pop;
        sq += f * f * pop;
    }
    series.times.push_back(t);
    series.photon_mean.push_back(mean);
    series.photon_sq_mean.push_back(sq);
    for (int mol = 0; mol < layout.n_molecules; ++mol) {
        std::array<double, 3> pops{0.0, 0.0, 0.0};
        for (long i = 0; i < dim; ++i)
            pops[layout.digit_of(i, mol)] += rho(i, i).real();
        for (int lvl = 0; lvl < 3; ++lvl)
            series.populations[mol][lvl].push_back(pops[lvl]);
    }

    double asym = 0.0;
    for (long j = 0; j < dim; ++j)
        for (long i = 0; i <= j; ++i)
            asym = std::max(asym, std::abs(rho(i, j) - std::conj(rho(j, i))));
    series.max_asymmetry = std::max(series.max_asymmetry, asym);
}

} // namespace

ObservableSeries evolve(const SystemParams& p, const HilbertLayout& layout,
                        const Eigen::MatrixXcd& rho0, const EvolveOptions& opts) {
    const long dim = layout.total_dim;
    if (rho0.rows() != dim || rho0.cols() != dim)
        throw Error(Errc::LengthMismatch,
                    "evolve: rho0 is " + std::to_string(rho0.rows()) + "x" +
                        std::to_string(rho0.cols()) + ", layout dimension is " +
                        std::to_string(dim));
    if (opts.t_final <= 0.0)
        throw Error(Errc::InvalidState, "evolve: t_final must be positive");
    const double dt = opts.dt > 0.0 ? opts.dt : default_timestep(p);
    const double asym0 = (rho0 - rho0.adjoint()).cwiseAbs().maxCoeff();
    if (asym0 > 1e-10)
        throw Error(Errc::NonHermitian,
                    "evolve: initial max |rho0 - rho0+| = " + std::to_string(asym0));
    const double tr0 = std::abs(rho0.trace() - Complex(1.0, 0.0));
    if (tr0 > 1e-8)
        throw Error(Errc::TraceNotOne,
                    "evolve: initial |Tr rho0 - 1| = " + std::to_string(tr0));

    const SparseOp H = build_hamiltonian(p, layout);
    const long n_steps = std::lround(opts.t_final / dt);
    const long M = layout.mol_dim;
    const long top_start = dim - M;

    RhsWorkspace ws;
    ws.prepare(layout);
    Eigen::MatrixXcd rho = rho0;
    Eigen::MatrixXcd k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim),
        stage(dim, dim);

    ObservableSeries series;
    series.populations.resize(layout.n_molecules);

    record_sample(layout, rho, 0.0, series);

    for (long step = 1; step <= n_steps; ++step) {
        lindblad_rhs(H, p.kappa, layout, rho, ws, k1);
        stage = rho + (0.5 * dt) * k1;
        lindblad_rhs(H, p.kappa, layout, stage, ws, k2);
        stage = rho + (0.5 * dt) * k2;
        lindblad_rhs(H, p.kappa, layout, stage, ws, k3);
        stage = rho + dt * k3;
        lindblad_rhs(H, p.kappa, layout, stage, ws, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        double trace = 0.0, top = 0.0;
        for (long i = 0; i < dim; ++i) trace += rho(i, i).real();
        for (long i = top_start; i < dim; ++i) top += rho(i, i).real();
        series.max_trace_drift =
            std::max(series.max_trace_drift, std::abs(trace - 1.0));
        series.max_top_fock = std::max(series.max_top_fock, top);

        if (top > opts.top_fock_tol)
            throw Error(Errc::CutoffBreach,
                        "evolve: top Fock layer population " + std::to_string(top) +
                            " exceeds " + std::to_string(opts.top_fock_tol) +
                            " at t=" + std::to_string(step * dt) +
                            "; retry with fock_cutoff >= " +
                            std::to_string(layout.fock_cutoff +
                                           std::max(2, layout.fock_cutoff / 2)));
        if (series.max_trace_drift > opts.trace_tol)
            throw Error(Errc::NonPhysical,
                        "evolve: |Tr rho - 1| = " +
                            std::to_string(series.max_trace_drift) +
                            " exceeds " + std::to_string(opts.trace_tol));

        if (step % opts.sample_every == 0 || step == n_steps)
            record_sample(layout, rho, step * dt, series);
    }
    return series;
}

SteadyObservables steady_state_observables(const ObservableSeries& series,
                                           double tol, double window) {
    const Flatness flat =
        trailing_flatness(series.times, series.photon_mean, tol, window, 0.0);
    if (!flat.converged)
        throw Error(Errc::NotConverged,
                    "steady_state_observables: photon_mean drifts by " +
                        std::to_string(flat.range) + " over the trailing " +
                        std::to_string(window) + " window (threshold " +
                        std::to_string(flat.threshold) + ")");

    SteadyObservables out;
    out.window_range = flat.range;
    out.threshold = flat.threshold;
    out.window_begin = flat.begin;
    const std::size_t n = series.times.size();
    const double count = static_cast<double>(n - flat.begin);
    double mean = 0.0, sq = 0.0;
    for (std::size_t k = flat.begin; k < n; ++k) {
        mean += series.photon_mean[k];
        sq += series.photon_sq_mean[k];
    }
    mean /= count;
    sq /= count;
    out.photon_mean = mean;
    out.photon_var = sq - mean * mean;
    out.populations.resize(series.populations.size());
    for (std::size_t mol = 0; mol < series.populations.size(); ++mol)
        for (int lvl = 0; lvl < 3; ++lvl) {
            double acc = 0.0;
            for (std::size_t k = flat.begin; k < n; ++k)
                acc += series.populations[mol][lvl][k];
            out.populations[mol][lvl] = acc / count;
        }
    return out;
}

int default_fock_cutoff(const SystemParams& p) {
    if (p.kappa <= 0.0) {
        if (p.eta == 0.0) return 6;
        throw Error(Errc::CutoffTooSmall,
                    "default_fock_cutoff: no steady bound for a driven lossless "
                    "cavity; pass an explicit cutoff");
    }
    const double drive_n = 4.0 * p.eta * p.eta / (p.kappa * p.kappa);
    const int nc = static_cast<int>(std::ceil(4.0 * (drive_n + 1.0)));
    return std::min(std::max(nc, 6), 256);
}

double default_timestep(const SystemParams& p) {
    return 0.002 / max_rate(p);
}

} // namespace ecav::exact
