// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line. Criteria 8-10 share one trained deblurring model.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pair/datasets.hpp"
#include "pair/experiments.hpp"
#include "pair/io.hpp"
#include "pair/linear_pair.hpp"
#include "pair/metrics.hpp"
#include "pair/neural.hpp"
#include "pair/numerics.hpp"
#include "pair/operators.hpp"
#include "pair/rng.hpp"

using namespace pair;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void report(int criterion, const char* name, bool pass) {
    std::cout << "[criterion " << criterion << "] " << name << ": " << (pass ? "PASS" : "FAIL")
              << std::endl;
    CHECK_MESSAGE(pass, "criterion ", criterion, " (", std::string(name), ")");
}

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_invertible(Index n, std::uint64_t seed) {
    return random_matrix(n, n, seed) + 3.0 * Matrix::Identity(n, n);
}

Matrix random_spd(Index n, std::uint64_t seed) {
    Matrix a = random_matrix(n, n, seed);
    return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

fs::path work_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / "pair_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// shared across criteria 8-10
struct SharedModel {
    std::string model_dir;
    json cfg;
};
std::optional<SharedModel> g_shared;

json desk_deblur_cfg() {
    // batch 8 gives the fixed 40-epoch budget enough optimizer steps on a
    // 2000-sample training set
    return {{"image_size", 28}, {"train_count", 2000}, {"test_count", 500},
            {"epochs", 40},     {"batch_size", 8},     {"seed", 11},
            {"source", "auto"}};
}

} // namespace

TEST_CASE("criterion 1: projector optimality") {
    Rng rng(101);
    bool pass = true;
    for (int trial = 0; trial < 50; ++trial) {
        Index n = 2 + static_cast<Index>(rng.uniform_index(63));  // 2..64
        Index N = 2 + static_cast<Index>(rng.uniform_index(199)); // 2..200
        Matrix x = random_matrix(n, N, 1000 + static_cast<std::uint64_t>(trial));
        auto sv = numerics::svd(x);
        Index rank = sv.rank();
        Index r = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(rank)));
        auto ae = linear::fit_empirical_autoencoder(x, r);
        Matrix p = ae.decoder * ae.encoder;
        double err2 = ((p - Matrix::Identity(n, n)) * x).squaredNorm();
        double tail = sv.sigma.tail(sv.sigma.size() - r).squaredNorm();
        double scale = std::max(1.0, x.squaredNorm());
        if (std::abs(err2 - tail) > 1e-8 * scale) pass = false;
        if ((p * p - p).norm() > 1e-10 * std::max(1.0, p.norm())) pass = false;
        if ((p - p.transpose()).norm() > 1e-10) pass = false;
    }
    report(1, "projector optimality (Eckart-Young energy, idempotent, symmetric)", pass);
}

TEST_CASE("criterion 2: closed-form surrogate equivalence with K-invariance") {
    Rng rng(202);
    bool pass = true;
    for (int trial = 0; trial < 20; ++trial) {
        std::uint64_t s = 2000 + 10 * static_cast<std::uint64_t>(trial);
        Index n = 5 + static_cast<Index>(rng.uniform_index(4));
        Index q = 4 + static_cast<Index>(rng.uniform_index(3));
        Index r_x = 2 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n - 2)));
        Index r_b = 2 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(q - 2)));
        Matrix a = random_matrix(q, n, s);
        Matrix lx = random_matrix(n, n, s + 1) + 2.0 * Matrix::Identity(n, n);
        Matrix gamma_x = lx * lx.transpose();
        Matrix gamma_eps = random_spd(q, s + 2) * 0.01;
        Matrix gamma_b = a * gamma_x * a.transpose() + gamma_eps;
        Matrix lb = Eigen::LLT<Matrix>(gamma_b).matrixL();

        linear::PairModel model;
        model.ae_x = linear::fit_bayes_autoencoder(lx, r_x, random_invertible(r_x, s + 3));
        model.ae_b = linear::fit_bayes_autoencoder(lb, r_b, random_invertible(r_b, s + 4));
        model.maps.forward = linear::bayes_forward_map(model.ae_x, model.ae_b, a, gamma_x);
        model.maps.inverse =
            linear::bayes_inverse_map(model.ae_x, model.ae_b, a, gamma_x, gamma_eps);
        auto [p_fwd, p_inv] = linear::materialize_surrogates(model);
        auto [c_fwd, c_inv] = linear::closed_form_bayes_surrogates(a, gamma_x, gamma_eps, r_x, r_b);
        if ((p_fwd - c_fwd).norm() > 1e-10 * std::max(1.0, c_fwd.norm())) pass = false;
        if ((p_inv - c_inv).norm() > 1e-10 * std::max(1.0, c_inv.norm())) pass = false;
    }
    report(2, "composed surrogates equal closed forms for 20 random configs", pass);
}

TEST_CASE("criterion 3: exact-recovery corollaries") {
    bool pass = true;
    {
        // no compression: P = A, P+ = Gamma_x A^T Gamma_b^{-1}
        const Index n = 6, q = 5;
        Matrix a = random_matrix(q, n, 31);
        Matrix lx = random_matrix(n, n, 32) + 2.0 * Matrix::Identity(n, n);
        Matrix gamma_x = lx * lx.transpose();
        Matrix gamma_eps = random_spd(q, 33) * 0.01;
        Matrix gamma_b = a * gamma_x * a.transpose() + gamma_eps;
        auto [p_fwd, p_inv] = linear::closed_form_bayes_surrogates(a, gamma_x, gamma_eps, n, q);
        if ((p_fwd - a).norm() > 1e-10 * a.norm()) pass = false;
        Matrix tik = gamma_x * a.transpose() * gamma_b.inverse();
        if ((p_inv - tik).norm() > 1e-10 * tik.norm()) pass = false;
    }
    {
        // empirical, noiseless, full row rank: P = A, P+ = A^{-1}
        const Index n = 6;
        Matrix a = random_matrix(n, n, 41) + 2.0 * Matrix::Identity(n, n);
        Matrix x = random_matrix(n, 5 * n, 42);
        Matrix b = a * x;
        linear::PairModel model;
        model.ae_x = linear::fit_empirical_autoencoder(x, n);
        model.ae_b = linear::fit_empirical_autoencoder(b, n);
        model.maps = linear::fit_empirical_latent_maps(model.ae_x.encode_cols(x),
                                                       model.ae_b.encode_cols(b));
        auto [p_fwd, p_inv] = linear::materialize_surrogates(model);
        auto sv = numerics::svd(a);
        double cond = sv.sigma(0) / sv.sigma(n - 1);
        if ((p_fwd - a).norm() > 1e-8 * a.norm()) pass = false;
        Matrix a_inv = a.inverse();
        if ((p_inv - a_inv).norm() > 1e-6 * cond * a_inv.norm()) pass = false;
    }
    {
        // rank-deficient data: P X = B still holds
        const Index n = 8, rank = 3;
        Matrix a = random_matrix(n, n, 51) + 2.0 * Matrix::Identity(n, n);
        Matrix x = random_matrix(n, rank, 52) * random_matrix(rank, 40, 53);
        Matrix b = a * x;
        linear::PairModel model;
        model.ae_x = linear::fit_empirical_autoencoder(x, rank);
        model.ae_b = linear::fit_empirical_autoencoder(b, rank);
        model.maps = linear::fit_empirical_latent_maps(model.ae_x.encode_cols(x),
                                                       model.ae_b.encode_cols(b));
        auto [p_fwd, p_inv] = linear::materialize_surrogates(model);
        (void)p_inv;
        if ((p_fwd * x - b).norm() > 1e-8 * b.norm()) pass = false;
    }
    report(3, "exact recovery with and without compression", pass);
}

TEST_CASE("criterion 4: bayes vs empirical map consistency at N=50000") {
    const Index n = 8, q = 6, r_x = 4, r_b = 3, N = 50000;
    Matrix a = random_matrix(q, n, 61);
    Matrix lx = random_matrix(n, n, 62) + 2.0 * Matrix::Identity(n, n);
    Matrix gamma_x = lx * lx.transpose();
    const double eps_var = 0.05;
    Matrix gamma_eps = eps_var * Matrix::Identity(q, q);
    Matrix gamma_b = a * gamma_x * a.transpose() + gamma_eps;
    Matrix lb = Eigen::LLT<Matrix>(gamma_b).matrixL();

    auto ae_x = linear::fit_bayes_autoencoder(lx, r_x);
    auto ae_b = linear::fit_bayes_autoencoder(lb, r_b);
    Matrix m_fwd = linear::bayes_forward_map(ae_x, ae_b, a, gamma_x);
    Matrix m_inv = linear::bayes_inverse_map(ae_x, ae_b, a, gamma_x, gamma_eps);

    Matrix lx_chol = Eigen::LLT<Matrix>(gamma_x).matrixL();
    Rng rng(63);
    Matrix zx(r_x, N), zb(r_b, N);
    for (Index s = 0; s < N; ++s) {
        Vector gx(n);
        for (Index i = 0; i < n; ++i) gx(i) = rng.normal();
        Vector x = lx_chol * gx;
        Vector noise(q);
        for (Index i = 0; i < q; ++i) noise(i) = rng.normal() * std::sqrt(eps_var);
        Vector b = a * x + noise;
        zx.col(s) = ae_x.encode(x);
        zb.col(s) = ae_b.encode(b);
    }
    auto emp = linear::fit_empirical_latent_maps(zx, zb);
    double d_fwd = (emp.forward - m_fwd).norm() / m_fwd.norm();
    double d_inv = (emp.inverse - m_inv).norm() / m_inv.norm();
    report(4, "empirical maps within 5% of bayes maps", d_fwd <= 0.05 && d_inv <= 0.05);
}

TEST_CASE("criterion 5: operator adjoints and materialization") {
    bool pass = true;
    auto check_op = [&](const ops::LinearOperator& op, std::uint64_t seed) {
        Vector x = random_matrix(op.in_dim, 1, seed);
        Vector y = random_matrix(op.out_dim, 1, seed + 1);
        Vector ax = op.apply(x);
        if (std::abs(ax.dot(y) - x.dot(op.apply_adjoint(y))) >
            1e-10 * std::max(1.0, ax.norm() * y.norm()))
            pass = false;
        Matrix a = ops::materialize(op);
        if ((a * x - ax).norm() > 1e-12 * std::max(1.0, ax.norm())) pass = false;
        if ((a.transpose() * y - op.apply_adjoint(y)).norm() >
            1e-12 * std::max(1.0, (a.transpose() * y).norm()))
            pass = false;
    };
    check_op(ops::gaussian_blur_operator(28, 28, 8, 10.0), 71);
    check_op(ops::radon_operator(32, 18, 45), 73);
    report(5, "blur and radon adjoint/materialize agreement", pass);
}

TEST_CASE("criterion 6: CT rank sweep at desk scale") {
    json cfg = experiments::resolve_config("ct_rank_sweep", json::object());
    auto dir = work_dir("rank_sweep");
    auto rows = experiments::run_rank_sweep(cfg, dir.string());

    bool pair_beats_tsvd = !rows.empty();
    for (const auto& r : rows)
        if (!(r.pair_inverse_rel < r.tsvd_inverse_rel)) pair_beats_tsvd = false;
    report(6, "a) PAIR inverse beats TSVD inverse at every rank", pair_beats_tsvd);

    // semiconvergence: interior minimum of the PAIR-inverse curve
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].pair_inverse_rel < rows[argmin].pair_inverse_rel) argmin = i;
    bool interior = argmin > 0 && argmin + 1 < rows.size() &&
                    rows.back().pair_inverse_rel > rows[argmin].pair_inverse_rel;
    report(6, "b) PAIR inverse error has an interior minimum", interior);

    auto monotone_down = [](auto get) {
        return [get](const std::vector<experiments::RankSweepRow>& rs) {
            int inversions = 0;
            for (std::size_t i = 1; i < rs.size(); ++i)
                if (get(rs[i]) > get(rs[i - 1]) * (1.0 + 1e-12)) ++inversions;
            return inversions <= 1; // allow one noise-induced inversion
        };
    };
    bool ae_down =
        monotone_down([](const experiments::RankSweepRow& r) { return r.ae_x_rel; })(rows) &&
        monotone_down([](const experiments::RankSweepRow& r) { return r.ae_b_rel; })(rows);
    report(6, "c) autoencoder errors decrease with rank", ae_down);
}

TEST_CASE("criterion 7: neural gradient and shape suite") {
    bool pass = true;
    auto spec = neural::tiny_autoencoder_spec();
    if (spec.encoder_param_count() != 77) pass = false;
    if (spec.param_count() - spec.encoder_param_count() != 159) pass = false;
    if (spec.param_count() != 236) pass = false;
    if (spec.latent_dim() != 147) pass = false;

    // finite differences on the full 236-parameter autoencoder
    Matrix input = random_matrix(784, 2, 81).cwiseAbs();
    Matrix target = random_matrix(784, 2, 82).cwiseAbs();
    Vector params = neural::init_params(spec, 83);
    auto [loss, grad] = neural::loss_and_grad(spec, params, input, target);
    (void)loss;
    const double h = 1e-6;
    double worst = 0.0;
    for (Index k = 0; k < params.size(); ++k) {
        Vector p = params;
        p(k) += h;
        double up = neural::loss_and_grad(spec, p, input, target).first;
        p(k) -= 2.0 * h;
        double down = neural::loss_and_grad(spec, p, input, target).first;
        double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad(k)) / std::max(1.0, std::abs(fd)));
    }
    if (worst > 1e-4) pass = false;

    // deterministic retrain
    Matrix data = random_matrix(784, 32, 84).cwiseAbs();
    neural::TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.seed = 85;
    cfg.lr_schedule = neural::phased_schedule(cfg.epochs);
    auto r1 = neural::train_autoencoder(spec, data, cfg);
    auto r2 = neural::train_autoencoder(spec, data, cfg);
    if ((r1.params - r2.params).norm() != 0.0) pass = false;

    report(7, "param counts 77/159/236, latent 147, FD gradients, determinism", pass);
}

TEST_CASE("criterion 8: deblurring pipeline at desk scale") {
    json cfg = experiments::resolve_config("mnist_pipeline", desk_deblur_cfg());
    auto dir = work_dir("deblur");
    auto result = experiments::run_mnist_pipeline(cfg, dir.string());
    bool err_ok = result.mean_rel_error <= 0.55;
    bool loss_ok = !result.loss_x.empty() &&
                   result.loss_x.back() < 0.5 * result.loss_x.front() &&
                   result.loss_b.back() < 0.5 * result.loss_b.front();
    report(8, "mean inverse relative error <= 0.55", err_ok);
    report(8, "final training loss < 50% of epoch-1 loss", loss_ok);
    g_shared = SharedModel{result.model_dir, cfg};
}

TEST_CASE("criterion 9: PAIR vs end-to-end at small J") {
    REQUIRE_MESSAGE(g_shared.has_value(), "criterion 8 must run first");
    json cfg = desk_deblur_cfg();
    cfg["experiment"] = "e2e_comparison";
    cfg["model_dir"] = g_shared->model_dir;
    auto dir = work_dir("e2e");
    auto rows = experiments::run_e2e_comparison(cfg, dir.string());
    bool has_rows = !rows.empty() && rows.front().pairs == 200;
    bool small_j_ok = has_rows && rows.front().pair_error <= 1.1 * rows.front().e2e_error;
    std::cout << "    (J=200: pair=" << (has_rows ? rows.front().pair_error : -1.0)
              << " e2e=" << (has_rows ? rows.front().e2e_error : -1.0) << ")\n";
    report(9, "PAIR error <= 1.1 x end-to-end error at J=200", small_j_ok);
}

TEST_CASE("criterion 10: OOD separation at desk scale") {
    REQUIRE_MESSAGE(g_shared.has_value(), "criterion 8 must run first");
    json cfg = desk_deblur_cfg();
    cfg["experiment"] = "ood";
    cfg["model_dir"] = g_shared->model_dir;
    auto dir = work_dir("ood");
    auto result = experiments::run_ood_experiment(cfg, dir.string());
    // latent-space metrics are indices 3 and 4
    bool latent_ok = result.auroc[3] >= 0.9 && result.auroc[4] >= 0.9;
    bool null_ok = result.null_auroc >= 0.45 && result.null_auroc <= 0.55;
    std::cout << "    (latent_x auroc=" << result.auroc[3] << " latent_b auroc=" << result.auroc[4]
              << " null=" << result.null_auroc << ")\n";
    report(10, "latent-metric AUROC >= 0.9", latent_ok);
    report(10, "in-set null split AUROC in [0.45, 0.55]", null_ok);
}

TEST_CASE("criterion 11: persistence and byte-identical reruns") {
    bool pass = true;

    // save -> load -> apply bitwise on a linear model
    Matrix x = random_matrix(16, 60, 91);
    Matrix b = random_matrix(12, 60, 92);
    linear::PairModel model;
    model.ae_x = linear::fit_empirical_autoencoder(x, 5);
    model.ae_b = linear::fit_empirical_autoencoder(b, 4);
    model.maps =
        linear::fit_empirical_latent_maps(model.ae_x.encode_cols(x), model.ae_b.encode_cols(b));
    auto mdir = work_dir("model_roundtrip");
    experiments::save_linear_pair(model, mdir.string());
    auto loaded = experiments::load_linear_pair(mdir.string());
    for (int t = 0; t < 10; ++t) {
        Vector px = random_matrix(16, 1, 300 + t);
        Vector pb = random_matrix(12, 1, 400 + t);
        if ((linear::pair_forward_apply(model, px) - linear::pair_forward_apply(loaded, px))
                .norm() != 0.0)
            pass = false;
        if ((linear::pair_inverse_apply(model, pb) - linear::pair_inverse_apply(loaded, pb))
                .norm() != 0.0)
            pass = false;
    }

    // neural model round trip reuses the trained desk-scale model
    if (g_shared) {
        auto nm = experiments::load_neural_pair(g_shared->model_dir);
        auto nm2 = experiments::load_neural_pair(g_shared->model_dir);
        Matrix probe = random_matrix(784, 3, 95).cwiseAbs();
        if ((nm.inverse_apply(probe) - nm2.inverse_apply(probe)).norm() != 0.0) pass = false;
    }

    // rerun an experiment from its recorded run.json: identical bytes
    json cfg = {{"n", 16},
                {"n_angles", 8},
                {"n_detectors", 23},
                {"counts", {{"unpaired_b", 40}, {"unpaired_x", 30}, {"paired", 30}, {"test", 10}}},
                {"ranks", {5, 10, 15}},
                {"seed", 17}};
    auto d1 = work_dir("rerun_1");
    experiments::run_rank_sweep(cfg, d1.string());
    json resolved = json::parse(slurp(d1 / "run.json"));
    auto d2 = work_dir("rerun_2");
    experiments::run_rank_sweep(resolved, d2.string());
    if (slurp(d1 / "rank_sweep.csv") != slurp(d2 / "rank_sweep.csv")) pass = false;
    if (slurp(d1 / "run.json") != slurp(d2 / "run.json")) pass = false;

    report(11, "bitwise save/load/apply and byte-identical reruns", pass);
}
