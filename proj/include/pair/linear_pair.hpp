#pragma once

#include <optional>
#include <utility>

#include "pair/numerics.hpp"
#include "pair/types.hpp"

namespace pair::linear {

enum class FitMode { bayes, empirical };

/// Linear encoder/decoder pair. With mixing K = I, decoder * encoder is the
/// orthogonal projector onto the retained singular subspace.
struct LinearAutoencoder {
    Matrix encoder;      // r x n
    Matrix decoder;      // n x r
    Index latent_dim = 0;
    FitMode mode = FitMode::empirical;
    // truncation boundary was degenerate (sigma_r == sigma_{r+1})
    bool degenerate_boundary = false;

    [[nodiscard]] Vector encode(const Vector& x) const { return encoder * x; }
    [[nodiscard]] Vector decode(const Vector& z) const { return decoder * z; }
    [[nodiscard]] Matrix encode_cols(const Matrix& x) const { return encoder * x; }
    [[nodiscard]] Matrix decode_cols(const Matrix& z) const { return decoder * z; }
};

struct LatentMap {
    Matrix forward;      // r_b x r_x
    Matrix inverse;      // r_x x r_b
    FitMode mode = FitMode::empirical;
};

struct PairModel {
    LinearAutoencoder ae_x;
    LinearAutoencoder ae_b;
    LatentMap maps;
};

/// Optimal rank-r autoencoder for a sample matrix (n x N): encoder
/// K^{-1} U_r^T, decoder U_r K with U_r the top-r left singular vectors.
/// Fails if r exceeds the numerical rank of the samples or K is singular.
LinearAutoencoder fit_empirical_autoencoder(const Matrix& samples, Index r,
                                            const std::optional<Matrix>& mixing_K = {});

/// Bayes-risk-optimal autoencoder from a full-rank second-moment factor L
/// (Gamma = L L^T): projector U_{L,r} U_{L,r}^T split as in the empirical
/// case. Rank-deficient L is rejected; regularize Gamma at the call site.
LinearAutoencoder fit_bayes_autoencoder(const Matrix& L_factor, Index r,
                                        const std::optional<Matrix>& mixing_K = {});

/// M = E_b A Gamma_x E_x^T (E_x Gamma_x E_x^T)^{-1}; requires E_x full row rank.
Matrix bayes_forward_map(const LinearAutoencoder& ae_x, const LinearAutoencoder& ae_b,
                         const Matrix& A, const Matrix& gamma_x);

/// M^+ = E_x Gamma_x A^T E_b^T (E_b Gamma_b E_b^T)^{-1} with
/// Gamma_b = A Gamma_x A^T + Gamma_eps formed internally.
Matrix bayes_inverse_map(const LinearAutoencoder& ae_x, const LinearAutoencoder& ae_b,
                         const Matrix& A, const Matrix& gamma_x, const Matrix& gamma_eps);

/// Least-squares latent maps from paired latent samples (equal column counts):
/// forward = z_b * pinv(z_x), inverse = z_x * pinv(z_b).
LatentMap fit_empirical_latent_maps(const Matrix& z_x, const Matrix& z_b);

Vector pair_forward_apply(const PairModel& model, const Vector& x);
Vector pair_inverse_apply(const PairModel& model, const Vector& b);

/// Dense P = D_b M E_x and P^+ = D_x M^+ E_b.
std::pair<Matrix, Matrix> materialize_surrogates(const PairModel& model);

/// Closed-form Bayes surrogates built directly from eigendecompositions of
/// Gamma_x and Gamma_b = A Gamma_x A^T + Gamma_eps:
///   P   = U_b,rb U_b,rb^T A U_x,rx U_x,rx^T
///   P^+ = U_x,rx S_x,rx^2 U_x,rx^T A^T U_b,rb S_b,rb^{-2} U_b,rb^T
std::pair<Matrix, Matrix> closed_form_bayes_surrogates(const Matrix& A, const Matrix& gamma_x,
                                                       const Matrix& gamma_eps, Index r_x,
                                                       Index r_b);

} // namespace pair::linear
