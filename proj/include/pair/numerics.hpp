#pragma once

#include <optional>

#include "pair/types.hpp"

namespace pair::numerics {

/// Thin SVD A = U diag(sigma) V^T with min(rows, cols) singular triplets,
/// sigma sorted descending.
struct SvdResult {
    Matrix U;
    Vector sigma;
    Matrix V;

    [[nodiscard]] Index rank(double rtol = -1.0) const;
};

struct TruncatedSvd {
    Matrix U;
    Vector sigma;
    Matrix V;
    // set when sigma[r-1] == sigma[r] within 1e-12: the rank-r minimizer is
    // not unique and the retained subspace depends on the routine's ordering
    bool degenerate_boundary = false;
};

/// Full thin SVD of a dense matrix. Throws std::invalid_argument on
/// non-finite input and std::runtime_error if the routine fails to converge.
SvdResult svd(const Matrix& a);

/// First r singular triplets of s. Requires 1 <= r <= sigma.size().
TruncatedSvd truncate(const SvdResult& s, Index r);

/// Moore-Penrose pseudo-inverse with singular values below rtol * sigma_max
/// treated as zero. rtol < 0 selects max(rows, cols) * eps * sigma_max.
Matrix pseudo_inverse(const Matrix& a, double rtol = -1.0);

/// Minimal-Frobenius-norm M with M * z_in closest to target in Frobenius
/// norm, i.e. M = target * pinv(z_in). Requires matching column counts.
Matrix min_norm_right_solve(const Matrix& z_in, const Matrix& target);

/// Default relative rank cutoff for a given spectrum.
double default_rtol(Index rows, Index cols, double sigma_max);

/// Symmetry + positive-definiteness check (Cholesky-based).
bool is_spd(const Matrix& a, double sym_tol = 1e-10);

} // namespace pair::numerics
