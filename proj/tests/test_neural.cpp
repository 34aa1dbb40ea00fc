#include "doctest.h"

#include <cmath>

#include "pair/neural.hpp"
#include "pair/rng.hpp"

using namespace pair;
using namespace pair::neural;

namespace {

Matrix random_batch(Index dim, Index count, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(dim, count);
    for (Index j = 0; j < count; ++j)
        for (Index i = 0; i < dim; ++i) m(i, j) = rng.uniform();
    return m;
}

} // namespace

TEST_CASE("hourglass autoencoder has exactly 77 + 159 = 236 parameters") {
    auto spec = tiny_autoencoder_spec();
    CHECK(spec.encoder_param_count() == 77);
    CHECK(spec.param_count() - spec.encoder_param_count() == 159);
    CHECK(spec.param_count() == 236);
    CHECK(spec.latent_dim() == 147); // 7x7x3
    CHECK(spec.output_dim() == 28 * 28);
}

TEST_CASE("forward output matches input shape with sigmoid range") {
    auto spec = tiny_autoencoder_spec();
    Vector params = init_params(spec, 1);
    Matrix batch = random_batch(784, 3, 2);
    Matrix out = forward(spec, params, batch);
    CHECK(out.rows() == 784);
    CHECK(out.cols() == 3);
    CHECK(out.minCoeff() > 0.0);
    CHECK(out.maxCoeff() < 1.0);
}

TEST_CASE("encode/decode round-trip equals full forward") {
    auto spec = tiny_autoencoder_spec();
    Vector params = init_params(spec, 3);
    Matrix batch = random_batch(784, 2, 4);
    Matrix latent = encode_batch(spec, params, batch);
    CHECK(latent.rows() == 147);
    Matrix full = forward(spec, params, batch);
    Matrix split = decode_batch(spec, params, latent);
    CHECK((full - split).norm() == 0.0);
}

TEST_CASE("finite-difference gradient check on a small net") {
    // same layer vocabulary (conv3x3 + relu/sigmoid + pool/upsample) on an
    // 8x8 input so central differencing stays cheap
    ConvNetSpec spec;
    spec.in_h = 8;
    spec.in_w = 8;
    spec.in_c = 1;
    spec.layers = {{1, 2, Act::relu, Resample::maxpool2},
                   {2, 1, Act::relu, Resample::upsample2},
                   {1, 1, Act::sigmoid, Resample::none}};
    spec.encoder_layers = 1;

    Vector params = init_params(spec, 5);
    Matrix input = random_batch(64, 2, 6);
    Matrix target = random_batch(64, 2, 7);
    auto [loss, grad] = loss_and_grad(spec, params, input, target);
    CHECK(std::isfinite(loss));

    const double h = 1e-6;
    double worst = 0.0;
    for (Index k = 0; k < params.size(); ++k) {
        Vector p = params;
        p(k) += h;
        double up = loss_and_grad(spec, p, input, target).first;
        p(k) -= 2.0 * h;
        double down = loss_and_grad(spec, p, input, target).first;
        double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad(k)) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("adam single step matches the hand-computed update") {
    Vector params = Vector::Zero(2);
    Vector grads(2);
    grads << 0.5, -1.0;
    AdamState state;
    state.m = Vector::Zero(2);
    state.v = Vector::Zero(2);
    TrainConfig cfg;
    adam_step(params, grads, state, 1e-3, cfg);
    // bias-corrected first step: update = lr * g / (|g| + eps)
    for (Index i = 0; i < 2; ++i) {
        double m_hat = grads(i); // m = 0.1*g, corrected by 1/(1-0.9)
        double v_hat = grads(i) * grads(i);
        double expect = -1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
        CHECK(params(i) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(state.step == 1);
}

TEST_CASE("phased schedule alternates 1e-3 and 1e-4 over four spans") {
    auto sched = phased_schedule(40);
    REQUIRE(sched.size() == 4);
    Index total = 0;
    for (auto& [span, lr] : sched) total += span;
    CHECK(total == 40);
    CHECK(sched[0].second == 1e-3);
    CHECK(sched[1].second == 1e-4);
    CHECK(sched[2].second == 1e-3);
    CHECK(sched[3].second == 1e-4);
}

TEST_CASE("training is deterministic and reduces the loss") {
    auto spec = tiny_autoencoder_spec();
    Matrix data = random_batch(784, 64, 8);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 16;
    cfg.seed = 9;
    cfg.lr_schedule = phased_schedule(cfg.epochs);
    auto r1 = train_autoencoder(spec, data, cfg);
    auto r2 = train_autoencoder(spec, data, cfg);
    CHECK((r1.params - r2.params).norm() == 0.0);
    CHECK(r1.epoch_loss.size() == 8);
    CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
}

TEST_CASE("end-to-end training accepts a warm start") {
    ConvNetSpec spec;
    spec.in_h = 8;
    spec.in_w = 8;
    spec.in_c = 1;
    spec.layers = {{1, 2, Act::relu, Resample::none}, {2, 1, Act::sigmoid, Resample::none}};
    spec.encoder_layers = 1;
    Matrix input = random_batch(64, 32, 10);
    Matrix target = random_batch(64, 32, 11);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 12;
    cfg.lr_schedule = {{4, 1e-3}};
    auto cold = train_end_to_end(spec, input, target, cfg);
    auto warm = train_end_to_end(spec, input, target, cfg, cold.params);
    CHECK(warm.epoch_loss.front() <= cold.epoch_loss.front());
}

TEST_CASE("schedule spans must partition the epoch count") {
    auto spec = tiny_autoencoder_spec();
    Matrix data = random_batch(784, 8, 13);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.lr_schedule = {{2, 1e-3}}; // spans sum to 2, not 5
    CHECK_THROWS_AS((void)train_autoencoder(spec, data, cfg), std::invalid_argument);
}
