#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "pair/operators.hpp"
#include "pair/rng.hpp"
#include "pair/types.hpp"

namespace pair::data {

/// Stack of greyscale images with values in [0,1]; one image per column.
struct ImageStack {
    Index height = 0;
    Index width = 0;
    Matrix pixels; // (height*width) x count

    [[nodiscard]] Index count() const { return pixels.cols(); }
};

struct BundleCounts {
    Index unpaired_b = 0;
    Index unpaired_x = 0;
    Index paired = 0;
    Index test = 0;
};

/// Partitioned CT dataset. Partitions are disjoint by construction: every
/// sample is generated from derive_seed(master_seed, partition_tag, index).
struct DatasetBundle {
    Matrix unpaired_b; // sinograms only, q x counts.unpaired_b
    Matrix unpaired_x; // images only, n x counts.unpaired_x
    Matrix paired_x, paired_b;
    Matrix test_x, test_b;
    std::uint64_t master_seed = 0;
    nlohmann::json descriptor; // geometry + noise + counts for exact rebuild
};

/// Randomized Shepp-Logan phantom on an n x n grid, values clipped to [0,1].
/// jitter = 0 renders the canonical ellipse table.
Vector generate_shepp_logan(Index n, Rng& rng, double jitter);

DatasetBundle build_ct_bundle(Index n, const ops::LinearOperator& op, const ops::NoiseSpec& noise,
                              const BundleCounts& counts, std::uint64_t master_seed,
                              double jitter = 0.1);

/// IDX image file (big-endian magic 0x00000803, u8 payload), scaled to [0,1].
ImageStack load_idx_images(const std::string& path);
/// IDX label file (magic 0x00000801).
std::vector<std::uint8_t> load_idx_labels(const std::string& path);
void save_idx_images(const std::string& path, const ImageStack& stack);
void save_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

/// Typed-letter OOD set: single bright stroke glyphs (A-J from an embedded
/// 5x7 table) with random scale/position/thickness jitter on black background.
ImageStack make_ood_glyphs(Index count, Index n, Rng& rng);

/// Synthetic handwritten-style digits (0-9): curved stroke skeletons with
/// random affine distortion and pen thickness. Stands in for MNIST when the
/// IDX files are not available.
ImageStack make_synthetic_digits(Index count, Index n, Rng& rng);

} // namespace pair::data
