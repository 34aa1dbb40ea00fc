#include "doctest.h"

#include "pair/linear_pair.hpp"
#include "pair/numerics.hpp"
#include "pair/rng.hpp"

using namespace pair;
using namespace pair::linear;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_invertible(Index n, std::uint64_t seed) {
    Matrix k = random_matrix(n, n, seed) + 3.0 * Matrix::Identity(n, n);
    return k;
}

Matrix random_spd(Index n, std::uint64_t seed) {
    Matrix a = random_matrix(n, n, seed);
    return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

} // namespace

TEST_CASE("empirical autoencoder on diagonal samples keeps the top directions") {
    Matrix samples = Vector::LinSpaced(3, 3.0, 1.0).asDiagonal(); // diag(3,2,1)
    auto ae = fit_empirical_autoencoder(samples, 2);
    Matrix p = ae.decoder * ae.encoder;
    Matrix expect = Matrix::Zero(3, 3);
    expect(0, 0) = expect(1, 1) = 1.0;
    CHECK((p - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("empirical autoencoder projector properties and eckart-young energy") {
    Matrix x = random_matrix(10, 40, 3);
    auto sv = numerics::svd(x);
    for (Index r : {2, 5, 9}) {
        auto ae = fit_empirical_autoencoder(x, r);
        Matrix p = ae.decoder * ae.encoder;
        CHECK((p - p.transpose()).norm() <= 1e-10);
        CHECK((p * p - p).norm() <= 1e-10);
        CHECK((ae.encoder * ae.decoder - Matrix::Identity(r, r)).norm() <= 1e-10);
        double err2 = ((p - Matrix::Identity(10, 10)) * x).squaredNorm();
        double tail = sv.sigma.tail(sv.sigma.size() - r).squaredNorm();
        CHECK(err2 == doctest::Approx(tail).epsilon(1e-8));
    }
}

TEST_CASE("mixing K changes the factors but not the projector") {
    Matrix x = random_matrix(8, 30, 4);
    Matrix k = random_invertible(3, 5);
    auto plain = fit_empirical_autoencoder(x, 3);
    auto mixed = fit_empirical_autoencoder(x, 3, k);
    CHECK((mixed.encoder * mixed.decoder - Matrix::Identity(3, 3)).norm() <= 1e-10);
    Matrix p0 = plain.decoder * plain.encoder;
    Matrix p1 = mixed.decoder * mixed.encoder;
    CHECK((p0 - p1).norm() <= 1e-10 * p0.norm());
    CHECK((mixed.encoder - plain.encoder).norm() > 1e-6); // factors differ
}

TEST_CASE("empirical autoencoder rejects rank overreach and singular K") {
    Matrix u = random_matrix(6, 2, 6);
    Matrix v = random_matrix(20, 2, 7);
    Matrix x = u * v.transpose(); // rank 2
    CHECK_THROWS_AS((void)fit_empirical_autoencoder(x, 3), std::invalid_argument);
    Matrix singular_k = Matrix::Zero(2, 2);
    CHECK_THROWS_AS((void)fit_empirical_autoencoder(x, 2, singular_k), std::invalid_argument);
}

TEST_CASE("bayes autoencoder splits the projector of the covariance factor") {
    Matrix l = random_matrix(7, 7, 8) + 2.0 * Matrix::Identity(7, 7);
    auto ae = fit_bayes_autoencoder(l, 4);
    auto sv = numerics::svd(l);
    Matrix ur = sv.U.leftCols(4);
    CHECK((ae.decoder * ae.encoder - ur * ur.transpose()).norm() <= 1e-10);
    Matrix rank_def = Matrix::Zero(7, 7);
    CHECK_THROWS_AS((void)fit_bayes_autoencoder(rank_def, 2), std::invalid_argument);
}

TEST_CASE("empirical latent maps solve the paired least-squares problems") {
    Matrix zx = random_matrix(4, 50, 9);
    Matrix zb = random_matrix(3, 50, 10);
    auto maps = fit_empirical_latent_maps(zx, zb);
    CHECK(maps.forward.rows() == 3);
    CHECK(maps.forward.cols() == 4);
    // normal equations of min ||M zx - zb||_F
    Matrix g = zx * zx.transpose();
    CHECK((maps.forward * g - zb * zx.transpose()).norm() <= 1e-8 * (zb * zx.transpose()).norm());
    Matrix h = zb * zb.transpose();
    CHECK((maps.inverse * h - zx * zb.transpose()).norm() <= 1e-8 * (zx * zb.transpose()).norm());
}

TEST_CASE("bayes maps match monte-carlo least squares estimates") {
    const Index n = 6, q = 4, r_x = 3, r_b = 2;
    Matrix a = random_matrix(q, n, 11);
    Matrix lx = random_matrix(n, n, 12) + 2.0 * Matrix::Identity(n, n);
    Matrix gamma_x = lx * lx.transpose();
    Matrix gamma_eps = 0.05 * Matrix::Identity(q, q);

    auto ae_x = fit_bayes_autoencoder(lx, r_x);
    Matrix gamma_b = a * gamma_x * a.transpose() + gamma_eps;
    Eigen::LLT<Matrix> llt_b(gamma_b);
    Matrix lb = llt_b.matrixL();
    auto ae_b = fit_bayes_autoencoder(lb, r_b);

    Matrix m_fwd = bayes_forward_map(ae_x, ae_b, a, gamma_x);
    Matrix m_inv = bayes_inverse_map(ae_x, ae_b, a, gamma_x, gamma_eps);

    // Monte-Carlo oracle: sample x ~ N(0, gamma_x), eps ~ N(0, gamma_eps),
    // fit the latent maps empirically on a large sample
    const Index big = 60000;
    Rng rng(13);
    Matrix lx_chol = Eigen::LLT<Matrix>(gamma_x).matrixL();
    Matrix zx(r_x, big), zb(r_b, big);
    for (Index s = 0; s < big; ++s) {
        Vector gx(n);
        for (Index i = 0; i < n; ++i) gx(i) = rng.normal();
        Vector x = lx_chol * gx;
        Vector eps(q);
        for (Index i = 0; i < q; ++i) eps(i) = rng.normal() * std::sqrt(0.05);
        Vector b = a * x + eps;
        zx.col(s) = ae_x.encoder * x;
        zb.col(s) = ae_b.encoder * b;
    }
    auto emp = fit_empirical_latent_maps(zx, zb);
    CHECK((emp.forward - m_fwd).norm() / m_fwd.norm() <= 0.05);
    CHECK((emp.inverse - m_inv).norm() / m_inv.norm() <= 0.05);
}

TEST_CASE("composed surrogates equal the closed forms, K-invariant") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 5 + static_cast<Index>(rng.uniform_index(4)); // 5..8
        const Index q = 4 + static_cast<Index>(rng.uniform_index(3)); // 4..6
        const Index r_x = 2 + static_cast<Index>(rng.uniform_index(n - 2));
        const Index r_b = 2 + static_cast<Index>(rng.uniform_index(q - 2));
        std::uint64_t s = 100 + static_cast<std::uint64_t>(trial);
        Matrix a = random_matrix(q, n, s);
        Matrix lx = random_matrix(n, n, s + 1) + 2.0 * Matrix::Identity(n, n);
        Matrix gamma_x = lx * lx.transpose();
        Matrix gamma_eps = random_spd(q, s + 2) * 0.01;

        Matrix gamma_b = a * gamma_x * a.transpose() + gamma_eps;
        Matrix lb = Eigen::LLT<Matrix>(gamma_b).matrixL();

        Matrix kx = random_invertible(r_x, s + 3);
        Matrix kb = random_invertible(r_b, s + 4);
        PairModel model;
        model.ae_x = fit_bayes_autoencoder(lx, r_x, kx);
        model.ae_b = fit_bayes_autoencoder(lb, r_b, kb);
        model.maps.forward = bayes_forward_map(model.ae_x, model.ae_b, a, gamma_x);
        model.maps.inverse = bayes_inverse_map(model.ae_x, model.ae_b, a, gamma_x, gamma_eps);

        auto [p_fwd, p_inv] = materialize_surrogates(model);
        auto [c_fwd, c_inv] = closed_form_bayes_surrogates(a, gamma_x, gamma_eps, r_x, r_b);
        CHECK((p_fwd - c_fwd).norm() <= 1e-10 * std::max(1.0, c_fwd.norm()));
        CHECK((p_inv - c_inv).norm() <= 1e-10 * std::max(1.0, c_inv.norm()));
    }
}

TEST_CASE("no compression recovers A and the bayes-risk inverse") {
    const Index n = 5, q = 4;
    Matrix a = random_matrix(q, n, 31);
    Matrix lx = random_matrix(n, n, 32) + 2.0 * Matrix::Identity(n, n);
    Matrix gamma_x = lx * lx.transpose();
    Matrix gamma_eps = random_spd(q, 33) * 0.01;
    Matrix gamma_b = a * gamma_x * a.transpose() + gamma_eps;

    auto [p_fwd, p_inv] = closed_form_bayes_surrogates(a, gamma_x, gamma_eps, n, q);
    CHECK((p_fwd - a).norm() <= 1e-10 * a.norm());
    Matrix tik = gamma_x * a.transpose() * gamma_b.inverse();
    CHECK((p_inv - tik).norm() <= 1e-10 * tik.norm());
}

TEST_CASE("empirical surrogates exactly recover A on noiseless full-rank data") {
    const Index n = 6;
    Matrix a = random_matrix(n, n, 41) + 2.0 * Matrix::Identity(n, n);
    Matrix x = random_matrix(n, 4 * n, 42);
    Matrix b = a * x;

    PairModel model;
    model.ae_x = fit_empirical_autoencoder(x, n);
    model.ae_b = fit_empirical_autoencoder(b, n);
    model.maps = fit_empirical_latent_maps(model.ae_x.encode_cols(x), model.ae_b.encode_cols(b));
    auto [p_fwd, p_inv] = materialize_surrogates(model);
    double cond = numerics::svd(a).sigma(0) / numerics::svd(a).sigma(n - 1);
    CHECK((p_fwd - a).norm() <= 1e-8 * a.norm());
    Matrix a_inv = a.inverse();
    CHECK((p_inv - a_inv).norm() <= 1e-6 * cond * a_inv.norm());
}

TEST_CASE("rank-deficient data: surrogate still maps the training set exactly") {
    const Index n = 8, rank = 3;
    Matrix a = random_matrix(n, n, 51) + 2.0 * Matrix::Identity(n, n);
    Matrix x = random_matrix(n, rank, 52) * random_matrix(rank, 30, 53); // rank 3
    Matrix b = a * x;

    PairModel model;
    model.ae_x = fit_empirical_autoencoder(x, rank);
    model.ae_b = fit_empirical_autoencoder(b, rank);
    model.maps = fit_empirical_latent_maps(model.ae_x.encode_cols(x), model.ae_b.encode_cols(b));
    auto [p_fwd, p_inv] = materialize_surrogates(model);
    CHECK((p_fwd * x - b).norm() <= 1e-8 * b.norm());
    CHECK((p_fwd - a).norm() > 1e-3 * a.norm()); // compression: not A itself
}

TEST_CASE("pair apply helpers compose encoder, map, decoder") {
    Matrix x = random_matrix(6, 30, 61);
    Matrix b = random_matrix(4, 30, 62);
    PairModel model;
    model.ae_x = fit_empirical_autoencoder(x, 3);
    model.ae_b = fit_empirical_autoencoder(b, 2);
    model.maps = fit_empirical_latent_maps(model.ae_x.encode_cols(x), model.ae_b.encode_cols(b));
    Vector probe = x.col(0);
    Vector direct = model.ae_b.decode(model.maps.forward * model.ae_x.encode(probe));
    CHECK((pair_forward_apply(model, probe) - direct).norm() == 0.0);
    Vector probe_b = b.col(0);
    Vector direct_inv = model.ae_x.decode(model.maps.inverse * model.ae_b.encode(probe_b));
    CHECK((pair_inverse_apply(model, probe_b) - direct_inv).norm() == 0.0);
}
