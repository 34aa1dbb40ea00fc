#pragma once

#include <cstdint>
#include <functional>

#include "json.hpp"

#include "pair/rng.hpp"
#include "pair/types.hpp"

namespace pair::ops {

/// Matrix-free linear operator with adjoint. The descriptor holds every
/// construction parameter so an operator can be rebuilt exactly from a
/// persisted manifest.
struct LinearOperator {
    Index in_dim = 0;
    Index out_dim = 0;
    std::function<Vector(const Vector&)> apply;
    std::function<Vector(const Vector&)> apply_adjoint;
    nlohmann::json descriptor;
};

enum class NoiseMode { relative_norm, fixed_variance };

struct NoiseSpec {
    NoiseMode mode = NoiseMode::relative_norm;
    double level = 0.0;   // fraction for relative_norm, variance for fixed_variance
    std::uint64_t seed = 0;
};

/// 2-D convolution with a sampled, sum-normalized Gaussian kernel and
/// zero-padded boundary. Even kernel sizes anchor at offset (ksize/2, ksize/2).
LinearOperator gaussian_blur_operator(Index height, Index width, Index ksize = 8,
                                      double sigma = 10.0);

/// Parallel-beam line-integral operator on an n x n image: angles uniform in
/// [0, 180), detector bins spanning width sqrt(2)*n centered on the image,
/// pixel-driven with bilinear splatting onto adjacent bins.
LinearOperator radon_operator(Index n, Index n_angles, Index n_detectors);

/// Additive Gaussian noise per spec. relative_norm rescales the draw so the
/// realized noise norm is exactly level * ||b||; fixed_variance adds
/// N(0, level) per entry. Deterministic given spec.seed.
Vector add_noise(const Vector& b_clean, const NoiseSpec& spec);
Vector add_noise(const Vector& b_clean, NoiseMode mode, double level, Rng& rng);

/// Dense matrix of the operator, column j = apply(e_j). Refuses above 1e8 entries.
Matrix materialize(const LinearOperator& op);

/// Rebuild an operator from its descriptor.
LinearOperator from_descriptor(const nlohmann::json& descriptor);

} // namespace pair::ops
