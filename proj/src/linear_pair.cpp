#include "pair/linear_pair.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <sstream>
#include <stdexcept>

namespace pair::linear {

namespace {

using numerics::SvdResult;

LinearAutoencoder from_basis(const Matrix& U_r, FitMode mode, bool degenerate,
                             const std::optional<Matrix>& mixing_K) {
    const Index r = U_r.cols();
    LinearAutoencoder ae;
    ae.latent_dim = r;
    ae.mode = mode;
    ae.degenerate_boundary = degenerate;
    if (mixing_K) {
        const Matrix& K = *mixing_K;
        if (K.rows() != r || K.cols() != r)
            throw std::invalid_argument("mixing_K must be r x r");
        Eigen::FullPivLU<Matrix> lu(K);
        if (!lu.isInvertible()) throw std::invalid_argument("mixing_K is singular");
        ae.encoder = lu.inverse() * U_r.transpose();
        ae.decoder = U_r * K;
    } else {
        ae.encoder = U_r.transpose();
        ae.decoder = U_r;
    }
    return ae;
}

// E has full row rank iff sigma_min(E) clears the pinv cutoff
void require_full_row_rank(const Matrix& E, const char* name) {
    SvdResult s = numerics::svd(E);
    if (E.rows() > E.cols() || s.rank() < E.rows()) {
        std::ostringstream msg;
        msg << name << " must have full row rank (rank " << s.rank() << " of " << E.rows() << ")";
        throw std::invalid_argument(msg.str());
    }
}

void require_spd(const Matrix& g, const char* name) {
    if (!numerics::is_spd(g)) {
        std::ostringstream msg;
        msg << name << " must be symmetric positive definite";
        throw std::invalid_argument(msg.str());
    }
}

// Eigenvectors and eigenvalues of an SPD matrix, descending.
std::pair<Matrix, Vector> spd_eig_descending(const Matrix& gamma, const char* name) {
    require_spd(gamma, name);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gamma);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    return {eig.eigenvectors().rowwise().reverse(), eig.eigenvalues().reverse()};
}

} // namespace

LinearAutoencoder fit_empirical_autoencoder(const Matrix& samples, Index r,
                                            const std::optional<Matrix>& mixing_K) {
    SvdResult s = numerics::svd(samples);
    if (r < 1 || r > std::min(samples.rows(), samples.cols()))
        throw std::invalid_argument("latent dim r out of range");
    if (r > s.rank()) {
        std::ostringstream msg;
        msg << "latent dim " << r << " exceeds numerical rank " << s.rank()
            << " of the sample matrix (sigma_r estimate " << s.sigma(r - 1) << ")";
        throw std::invalid_argument(msg.str());
    }
    numerics::TruncatedSvd t = numerics::truncate(s, r);
    return from_basis(t.U, FitMode::empirical, t.degenerate_boundary, mixing_K);
}

LinearAutoencoder fit_bayes_autoencoder(const Matrix& L_factor, Index r,
                                        const std::optional<Matrix>& mixing_K) {
    SvdResult s = numerics::svd(L_factor);
    const Index n = std::min(L_factor.rows(), L_factor.cols());
    if (s.rank() < n)
        throw std::invalid_argument(
            "second-moment factor is rank deficient; regularize Gamma (e.g. Gamma + delta*I) "
            "before factoring");
    if (r < 1 || r > n) throw std::invalid_argument("latent dim r out of range");
    numerics::TruncatedSvd t = numerics::truncate(s, r);
    return from_basis(t.U, FitMode::bayes, t.degenerate_boundary, mixing_K);
}

Matrix bayes_forward_map(const LinearAutoencoder& ae_x, const LinearAutoencoder& ae_b,
                         const Matrix& A, const Matrix& gamma_x) {
    require_spd(gamma_x, "gamma_x");
    require_full_row_rank(ae_x.encoder, "E_x");
    const Matrix& Ex = ae_x.encoder;
    Matrix S = Ex * gamma_x * Ex.transpose();
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("E_x Gamma_x E_x^T is singular (E_x not full row rank?)");
    return llt.solve(Ex * gamma_x * A.transpose() * ae_b.encoder.transpose()).transpose();
}

Matrix bayes_inverse_map(const LinearAutoencoder& ae_x, const LinearAutoencoder& ae_b,
                         const Matrix& A, const Matrix& gamma_x, const Matrix& gamma_eps) {
    require_spd(gamma_x, "gamma_x");
    require_spd(gamma_eps, "gamma_eps");
    require_full_row_rank(ae_b.encoder, "E_b");
    Matrix gamma_b = A * gamma_x * A.transpose() + gamma_eps;
    const Matrix& Eb = ae_b.encoder;
    Matrix S = Eb * gamma_b * Eb.transpose();
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("E_b Gamma_b E_b^T is singular (E_b not full row rank?)");
    return llt.solve(Eb * A * gamma_x * ae_x.encoder.transpose()).transpose();
}

LatentMap fit_empirical_latent_maps(const Matrix& z_x, const Matrix& z_b) {
    if (z_x.cols() != z_b.cols())
        throw std::invalid_argument("paired latent matrices need equal column counts");
    if (z_x.cols() == 0) throw std::invalid_argument("no paired samples");
    LatentMap m;
    m.forward = numerics::min_norm_right_solve(z_x, z_b);
    m.inverse = numerics::min_norm_right_solve(z_b, z_x);
    m.mode = FitMode::empirical;
    return m;
}

Vector pair_forward_apply(const PairModel& model, const Vector& x) {
    return model.ae_b.decode(model.maps.forward * model.ae_x.encode(x));
}

Vector pair_inverse_apply(const PairModel& model, const Vector& b) {
    return model.ae_x.decode(model.maps.inverse * model.ae_b.encode(b));
}

std::pair<Matrix, Matrix> materialize_surrogates(const PairModel& model) {
    Matrix P = model.ae_b.decoder * model.maps.forward * model.ae_x.encoder;
    Matrix P_dag = model.ae_x.decoder * model.maps.inverse * model.ae_b.encoder;
    return {P, P_dag};
}

std::pair<Matrix, Matrix> closed_form_bayes_surrogates(const Matrix& A, const Matrix& gamma_x,
                                                       const Matrix& gamma_eps, Index r_x,
                                                       Index r_b) {
    auto [Ux, lam_x] = spd_eig_descending(gamma_x, "gamma_x");
    Matrix gamma_b = A * gamma_x * A.transpose() + gamma_eps;
    require_spd(gamma_eps, "gamma_eps");
    auto [Ub, lam_b] = spd_eig_descending(gamma_b, "gamma_b");
    if (r_x < 1 || r_x > gamma_x.rows() || r_b < 1 || r_b > gamma_b.rows())
        throw std::invalid_argument("latent dims out of range");

    Matrix Uxr = Ux.leftCols(r_x);
    Matrix Ubr = Ub.leftCols(r_b);
    Vector sx2 = lam_x.head(r_x);         // Sigma_{L_x,r}^2 = eigenvalues of Gamma_x
    Vector sb2inv = lam_b.head(r_b).cwiseInverse();

    Matrix P = Ubr * Ubr.transpose() * A * Uxr * Uxr.transpose();
    Matrix P_dag = Uxr * sx2.asDiagonal() * Uxr.transpose() * A.transpose() * Ubr *
                   sb2inv.asDiagonal() * Ubr.transpose();
    return {P, P_dag};
}

} // namespace pair::linear
