#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pair/rng.hpp"
#include "pair/types.hpp"

namespace pair::neural {

enum class Act { relu, sigmoid };
enum class Resample { none, maxpool2, upsample2 };

struct ConvLayerSpec {
    Index channels_in = 1;
    Index channels_out = 1;
    Act activation = Act::relu;
    Resample resample = Resample::none;
};

/// Stack of 3x3 stride-1 zero-same-padded conv layers. The first
/// encoder_layers entries form the encoder, the rest the decoder.
struct ConvNetSpec {
    std::vector<ConvLayerSpec> layers;
    Index encoder_layers = 0;
    Index in_h = 28, in_w = 28, in_c = 1;

    [[nodiscard]] Index param_count() const;
    [[nodiscard]] Index encoder_param_count() const;
    /// flattened latent size after the encoder's resampling chain
    [[nodiscard]] Index latent_dim() const;
    [[nodiscard]] Index output_dim() const;
};

/// The 2-3-3-2-1 channel hourglass autoencoder: 77 encoder + 159 decoder
/// parameters, latent 7x7x3 on 28x28 inputs.
ConvNetSpec tiny_autoencoder_spec(Index h = 28, Index w = 28);

struct TrainConfig {
    Index epochs = 0;
    Index batch_size = 256;
    std::uint64_t seed = 0;
    // (epoch span, learning rate) phases; spans must sum to epochs
    std::vector<std::pair<Index, double>> lr_schedule;
    double beta1 = 0.9, beta2 = 0.999, eps_hat = 1e-8;
};

/// Four-phase 1e-3/1e-4/1e-3/1e-4 alternation over (near) equal spans.
std::vector<std::pair<Index, double>> phased_schedule(Index epochs);

struct AdamState {
    Vector m, v;
    Index step = 0;
};

/// Glorot-uniform kernels, zero biases; deterministic per seed.
Vector init_params(const ConvNetSpec& spec, std::uint64_t seed);

/// Forward pass on a batch (columns are flattened c*h*w images).
Matrix forward(const ConvNetSpec& spec, const Vector& params, const Matrix& batch);

/// Mean-squared-error loss over batch and pixels, plus its gradient with
/// respect to every parameter (reverse mode).
std::pair<double, Vector> loss_and_grad(const ConvNetSpec& spec, const Vector& params,
                                        const Matrix& input, const Matrix& target);

void adam_step(Vector& params, const Vector& grads, AdamState& state, double lr,
               const TrainConfig& cfg);

struct TrainResult {
    Vector params;
    std::vector<double> epoch_loss;
};

/// Self-supervised training (target = input).
TrainResult train_autoencoder(const ConvNetSpec& spec, const Matrix& data, const TrainConfig& cfg);

/// Supervised input -> target training, optionally warm-started.
TrainResult train_end_to_end(const ConvNetSpec& spec, const Matrix& input, const Matrix& target,
                             const TrainConfig& cfg, const std::optional<Vector>& warm_start = {});

/// Encoder-only pass; one latent column per input column.
Matrix encode_batch(const ConvNetSpec& spec, const Vector& params, const Matrix& batch);

/// Decoder-only pass from latent columns back to image columns.
Matrix decode_batch(const ConvNetSpec& spec, const Vector& params, const Matrix& latent);

} // namespace pair::neural
