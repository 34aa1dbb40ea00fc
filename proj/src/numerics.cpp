#include "pair/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pair::numerics {

namespace {

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) {
        std::ostringstream msg;
        msg << what << ": non-finite entries in " << a.rows() << "x" << a.cols() << " matrix";
        throw std::invalid_argument(msg.str());
    }
    if (a.rows() < 1 || a.cols() < 1) throw std::invalid_argument("matrix must be at least 1x1");
}

} // namespace

double default_rtol(Index rows, Index cols, double sigma_max) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() *
           sigma_max;
}

Index SvdResult::rank(double rtol) const {
    if (sigma.size() == 0) return 0;
    double cutoff = rtol < 0.0 ? default_rtol(U.rows(), V.rows(), sigma(0)) : rtol * sigma(0);
    Index r = 0;
    while (r < sigma.size() && sigma(r) > cutoff) ++r;
    return r;
}

SvdResult svd(const Matrix& a) {
    require_finite(a, "svd");
    // BDCSVD falls back to Jacobi internally for small matrices
    Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "svd: did not converge on " << a.rows() << "x" << a.cols()
            << " matrix (norm estimate " << a.norm() << ")";
        throw std::runtime_error(msg.str());
    }
    return SvdResult{dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

TruncatedSvd truncate(const SvdResult& s, Index r) {
    const Index k = s.sigma.size();
    if (r < 1 || r > k) throw std::invalid_argument("truncate: r out of range [1, #sigma]");
    TruncatedSvd t{s.U.leftCols(r), s.sigma.head(r), s.V.leftCols(r), false};
    if (r < k && std::abs(s.sigma(r - 1) - s.sigma(r)) <= 1e-12 * std::max(1.0, s.sigma(0)))
        t.degenerate_boundary = true;
    return t;
}

Matrix pseudo_inverse(const Matrix& a, double rtol) {
    SvdResult s = svd(a);
    if (s.sigma.size() == 0 || s.sigma(0) == 0.0) return Matrix::Zero(a.cols(), a.rows());
    double cutoff =
        rtol < 0.0 ? default_rtol(a.rows(), a.cols(), s.sigma(0)) : rtol * s.sigma(0);
    Vector inv = Vector::Zero(s.sigma.size());
    for (Index i = 0; i < s.sigma.size(); ++i)
        if (s.sigma(i) > cutoff) inv(i) = 1.0 / s.sigma(i);
    return s.V * inv.asDiagonal() * s.U.transpose();
}

Matrix min_norm_right_solve(const Matrix& z_in, const Matrix& target) {
    if (z_in.cols() != target.cols()) {
        std::ostringstream msg;
        msg << "min_norm_right_solve: column-count mismatch (" << z_in.cols() << " vs "
            << target.cols() << ")";
        throw std::invalid_argument(msg.str());
    }
    // M = target * pinv(z_in); row support restricted to range(z_in) gives
    // the minimal-norm minimizer
    return target * pseudo_inverse(z_in);
}

bool is_spd(const Matrix& a, double sym_tol) {
    if (a.rows() != a.cols()) return false;
    double scale = std::max(1.0, a.norm());
    if ((a - a.transpose()).norm() > sym_tol * scale) return false;
    Eigen::LLT<Matrix> llt(a);
    return llt.info() == Eigen::Success;
}

} // namespace pair::numerics
