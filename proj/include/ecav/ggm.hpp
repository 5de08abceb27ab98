// ggm.hpp — generalized Gell-Mann operator basis for D-level systems
//
// The D*D-1 basis matrices are Hermitian, traceless and pairwise orthogonal
// with Tr(L_mu L_nu) = 2 delta_mu_nu. Index ordering is fixed project-wide:
// first all symmetric off-diagonal matrices
//     L^R(a,b) = |b><a| + |a><b|          b < a,
// then all antisymmetric ones
//     L^I(a,b) = -i(|b><a| - |a><b|)      b < a,
// then the diagonal ladder
//     L^D(a)   = sqrt(2/(a(a+1))) (sum_{b<=a} |b><b| - a |a+1><a+1|),
// each group in lexicographic (a, b) order. For D = 2 this is the Pauli set.
//
// A density matrix expands as rho = (1/D)(I + sum_mu (D/2) <L_mu> L_mu), so
// the vector of expectation values <L_mu> determines rho completely.
//
// Eigensystems are attached analytically rather than via a numeric solver:
// the off-diagonal matrices have eigenpairs
//     (|b> + |a>)/sqrt2 -> +1,   (|b> - |a>)/sqrt2 -> -1      (L^R)
//     (|b> + i|a>)/sqrt2 -> +1,  (|b> - i|a>)/sqrt2 -> -1     (L^I)
// with the remaining basis states at eigenvalue 0, and the diagonal matrices
// are diagonal in the computational basis. This avoids any degenerate-space
// ambiguity from a numeric eigensolver; degenerate eigenvalues are grouped
// when sampling so the arbitrary choice of eigenvectors cannot matter.

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "ecav/error.hpp"
#include "ecav/rng.hpp"

namespace ecav::ggm {

using Complex = std::complex<double>;

struct Eigensystem {
    Eigen::VectorXd values;    // D eigenvalues
    Eigen::MatrixXcd vectors;  // orthonormal eigenvectors as columns
};

struct GgmBasis {
    int dim = 0;
    std::vector<Eigen::MatrixXcd> matrices;   // size dim*dim - 1
    std::vector<Eigensystem> eigensystems;    // one per matrix

    int size() const { return dim * dim - 1; }

    // Index helpers for the fixed ordering. `pair_index` walks the strict
    // lower triangle lexicographically: (2,1), (3,1), (3,2), (4,1), ...
    int r_index(int alpha, int beta) const;          // 1-based (alpha, beta)
    int i_index(int alpha, int beta) const;
    int d_index(int alpha) const;                    // 1 <= alpha <= dim-1
};

// Builds the basis for a D-level system. Throws DimensionTooSmall for D < 2.
GgmBasis build_ggm_basis(int dim);

// rho = (1/D)(I + sum_mu (D/2) lam_mu L_mu). The result is Hermitian with
// unit trace but not necessarily positive; sampled lambda vectors may lie
// outside the physical simplex, which is fine for trajectory initial data.
Eigen::MatrixXcd expand_density(const GgmBasis& basis, const Eigen::VectorXd& lam);

// lam_mu = Tr(L_mu rho). Requires rho Hermitian (asymmetry <= 1e-10) with
// unit trace (|Tr - 1| <= 1e-10).
Eigen::VectorXd ggm_expectations(const GgmBasis& basis, const Eigen::MatrixXcd& rho);

// Precomputed discrete sampling tables for one initial state: for each basis
// matrix, the distinct eigenvalues with probabilities
//     P(lambda) = sum_{eigenvectors at lambda} <eta| rho0 |eta>.
// Construction validates rho0 (Hermitian, unit trace, eigenvalues >= -1e-10);
// sampling afterwards is one uniform draw per basis matrix.
class LambdaSampler {
public:
    LambdaSampler(const GgmBasis& basis, const Eigen::MatrixXcd& rho0);

    // One independent draw of the whole lambda vector, in basis order.
    Eigen::VectorXd sample(Rng& rng) const;
    void sample_into(Rng& rng, double* out) const;   // out has basis.size() slots

    int size() const { return static_cast<int>(tables_.size()); }

private:
    struct Outcome {
        double cumulative;  // cumulative probability up to and including this row
        double value;       // the eigenvalue
    };
    std::vector<std::vector<Outcome>> tables_;
};

// Single-shot convenience wrapper around LambdaSampler (validates rho0 on
// every call; use LambdaSampler directly inside trajectory loops).
Eigen::VectorXd sample_initial_lambdas(const GgmBasis& basis,
                                       const Eigen::MatrixXcd& rho0, Rng& rng);

} // namespace ecav::ggm
