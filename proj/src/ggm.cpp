// ggm.cpp — construction, expansion and sampling for the Gell-Mann basis

#include "ecav/ggm.hpp"

#include <cmath>
#include <string>

namespace ecav::ggm {

namespace {

constexpr Complex kI{0.0, 1.0};

// Position of the strict-lower-triangle pair (alpha, beta), beta < alpha,
// alpha and beta 1-based, in lexicographic order starting at (2,1).
int pair_index(int dim, int alpha, int beta) {
    if (alpha < 2 || alpha > dim || beta < 1 || beta >= alpha)
        throw Error(Errc::InvalidState,
                    "ggm index: pair (" + std::to_string(alpha) + "," +
                        std::to_string(beta) + ") outside lower triangle for D=" +
                        std::to_string(dim));
    return (alpha - 2) * (alpha - 1) / 2 + (beta - 1);
}

} // namespace

int GgmBasis::r_index(int alpha, int beta) const {
    return pair_index(dim, alpha, beta);
}

int GgmBasis::i_index(int alpha, int beta) const {
    return dim * (dim - 1) / 2 + pair_index(dim, alpha, beta);
}

int GgmBasis::d_index(int alpha) const {
    if (alpha < 1 || alpha > dim - 1)
        throw Error(Errc::InvalidState,
                    "ggm index: diagonal index " + std::to_string(alpha) +
                        " outside [1," + std::to_string(dim - 1) + "]");
    return dim * (dim - 1) + (alpha - 1);
}

GgmBasis build_ggm_basis(int dim) {
    if (dim < 2)
        throw Error(Errc::DimensionTooSmall,
                    "build_ggm_basis: need D >= 2, got " + std::to_string(dim));

    GgmBasis basis;
    basis.dim = dim;
    basis.matrices.reserve(dim * dim - 1);
    basis.eigensystems.reserve(dim * dim - 1);

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    // Off-diagonal eigensystem shared scaffolding: eigenvalues (+1, -1, 0...)
    // with the +-1 eigenvectors in the (alpha, beta) plane and the remaining
    // computational basis states filling out eigenvalue 0.
    auto off_diagonal_eigensystem = [&](int alpha, int beta, Complex upper_phase) {
        // upper_phase is the coefficient of |alpha> in the +1 eigenvector:
        // +1 for L^R, +i for L^I.
        Eigensystem es;
        es.values = Eigen::VectorXd::Zero(dim);
        es.values(0) = 1.0;
        es.values(1) = -1.0;
        es.vectors = Eigen::MatrixXcd::Zero(dim, dim);
        es.vectors(beta - 1, 0) = inv_sqrt2;
        es.vectors(alpha - 1, 0) = upper_phase * inv_sqrt2;
        es.vectors(beta - 1, 1) = inv_sqrt2;
        es.vectors(alpha - 1, 1) = -upper_phase * inv_sqrt2;
        int col = 2;
        for (int k = 1; k <= dim; ++k) {
            if (k == alpha || k == beta) continue;
            es.vectors(k - 1, col) = 1.0;
            ++col;
        }
        return es;
    };

    // Symmetric block.
    for (int alpha = 2; alpha <= dim; ++alpha) {
        for (int beta = 1; beta < alpha; ++beta) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
            m(beta - 1, alpha - 1) = 1.0;
            m(alpha - 1, beta - 1) = 1.0;
            basis.matrices.push_back(std::move(m));
            basis.eigensystems.push_back(off_diagonal_eigensystem(alpha, beta, 1.0));
        }
    }

    // Antisymmetric block.
    for (int alpha = 2; alpha <= dim; ++alpha) {
        for (int beta = 1; beta < alpha; ++beta) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
            m(beta - 1, alpha - 1) = -kI;
            m(alpha - 1, beta - 1) = kI;
            basis.matrices.push_back(std::move(m));
            basis.eigensystems.push_back(off_diagonal_eigensystem(alpha, beta, kI));
        }
    }

    // Diagonal ladder; diagonal in the computational basis, so the
    // eigenvectors are the basis states and the eigenvalues the entries.
    for (int alpha = 1; alpha <= dim - 1; ++alpha) {
        const double f = std::sqrt(2.0 / (alpha * (alpha + 1.0)));
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
        for (int beta = 1; beta <= alpha; ++beta) m(beta - 1, beta - 1) = f;
        m(alpha, alpha) = -alpha * f;

        Eigensystem es;
        es.values = m.diagonal().real();
        es.vectors = Eigen::MatrixXcd::Identity(dim, dim);
        basis.matrices.push_back(std::move(m));
        basis.eigensystems.push_back(std::move(es));
    }

    return basis;
}

Eigen::MatrixXcd expand_density(const GgmBasis& basis, const Eigen::VectorXd& lam) {
    if (lam.size() != basis.size())
        throw Error(Errc::LengthMismatch,
                    "expand_density: expected " + std::to_string(basis.size()) +
                        " components, got " + std::to_string(lam.size()));
    const int d = basis.dim;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(d, d);
    for (int mu = 0; mu < basis.size(); ++mu)
        rho += (d / 2.0) * lam(mu) * basis.matrices[mu];
    rho /= static_cast<double>(d);
    return rho;
}

Eigen::VectorXd ggm_expectations(const GgmBasis& basis, const Eigen::MatrixXcd& rho) {
    if (rho.rows() != basis.dim || rho.cols() != basis.dim)
        throw Error(Errc::LengthMismatch,
                    "ggm_expectations: rho is " + std::to_string(rho.rows()) + "x" +
                        std::to_string(rho.cols()) + ", basis dimension is " +
                        std::to_string(basis.dim));
    const double asym = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
        throw Error(Errc::NonHermitian,
                    "ggm_expectations: max |rho - rho^dag| = " + std::to_string(asym));
    const double trace_err = std::abs(rho.trace() - Complex(1.0, 0.0));
    if (trace_err > 1e-10)
        throw Error(Errc::TraceNotOne,
                    "ggm_expectations: |Tr rho - 1| = " + std::to_string(trace_err));

    Eigen::VectorXd lam(basis.size());
    for (int mu = 0; mu < basis.size(); ++mu)
        lam(mu) = (basis.matrices[mu] * rho).trace().real();
    return lam;
}

LambdaSampler::LambdaSampler(const GgmBasis& basis, const Eigen::MatrixXcd& rho0) {
    if (rho0.rows() != basis.dim || rho0.cols() != basis.dim)
        throw Error(Errc::LengthMismatch,
                    "LambdaSampler: rho0 is " + std::to_string(rho0.rows()) + "x" +
                        std::to_string(rho0.cols()) + ", basis dimension is " +
                        std::to_string(basis.dim));
    const double asym = (rho0 - rho0.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
        throw Error(Errc::NonHermitian,
                    "LambdaSampler: max |rho0 - rho0^dag| = " + std::to_string(asym));
    const double trace_err = std::abs(rho0.trace() - Complex(1.0, 0.0));
    if (trace_err > 1e-10)
        throw Error(Errc::TraceNotOne,
                    "LambdaSampler: |Tr rho0 - 1| = " + std::to_string(trace_err));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho0);
    const double min_eig = solver.eigenvalues().minCoeff();
    if (min_eig < -1e-10)
        throw Error(Errc::InvalidState,
                    "LambdaSampler: rho0 has eigenvalue " + std::to_string(min_eig));

    tables_.reserve(basis.size());
    for (int mu = 0; mu < basis.size(); ++mu) {
        const Eigensystem& es = basis.eigensystems[mu];

        // Group identical eigenvalues so the distribution depends only on the
        // spectral projectors, not on the basis chosen within a degenerate
        // subspace. Identical values come from the same closed-form
        // expression, so exact comparison is safe.
        std::vector<Outcome> rows;
        for (int k = 0; k < basis.dim; ++k) {
            const Eigen::VectorXcd v = es.vectors.col(k);
            double p = (v.adjoint() * rho0 * v).value().real();
            if (p < 0.0) p = 0.0;  // clip rounding noise; validated above
            bool merged = false;
            for (auto& row : rows) {
                if (row.value == es.values(k)) {
                    row.cumulative += p;  // still plain probabilities here
                    merged = true;
                    break;
                }
            }
            if (!merged) rows.push_back({p, es.values(k)});
        }

        double total = 0.0;
        for (const auto& row : rows) total += row.cumulative;
        // total equals Tr rho0 = 1 up to rounding; normalise so the last
        // cumulative bin is exactly 1 and a uniform draw can never fall off.
        double cum = 0.0;
        for (auto& row : rows) {
            cum += row.cumulative / total;
            row.cumulative = cum;
        }
        rows.back().cumulative = 1.0;
        tables_.push_back(std::move(rows));
    }
}

void LambdaSampler::sample_into(Rng& rng, double* out) const {
    for (std::size_t mu = 0; mu < tables_.size(); ++mu) {
        const double u = rng.uniform();
        const auto& rows = tables_[mu];
        double value = rows.back().value;
        for (const auto& row : rows) {
            if (u < row.cumulative) {
                value = row.value;
                break;
            }
        }
        out[mu] = value;
    }
}

Eigen::VectorXd LambdaSampler::sample(Rng& rng) const {
    Eigen::VectorXd lam(static_cast<int>(tables_.size()));
    sample_into(rng, lam.data());
    return lam;
}

Eigen::VectorXd sample_initial_lambdas(const GgmBasis& basis,
                                       const Eigen::MatrixXcd& rho0, Rng& rng) {
    LambdaSampler sampler(basis, rho0);
    return sampler.sample(rng);
}

} // namespace ecav::ggm
