#include "pair/operators.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

namespace pair::ops {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct BlurKernel {
    Index ksize;
    Index anchor;
    std::vector<double> weights; // ksize * ksize, sums to 1
};

BlurKernel make_blur_kernel(Index ksize, double sigma) {
    BlurKernel k{ksize, ksize / 2, std::vector<double>(ksize * ksize)};
    double sum = 0.0;
    for (Index i = 0; i < ksize; ++i) {
        for (Index j = 0; j < ksize; ++j) {
            double di = static_cast<double>(i - k.anchor);
            double dj = static_cast<double>(j - k.anchor);
            double w = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            k.weights[i * ksize + j] = w;
            sum += w;
        }
    }
    for (double& w : k.weights) w /= sum;
    return k;
}

// Precomputed splat targets for one (angle, pixel) pair.
struct RadonGeometry {
    Index n, n_angles, n_detectors;
    double inv_bin_width;
    std::vector<double> cos_t, sin_t;
};

// continuous detector-bin coordinate of projection value t
inline double bin_coord(const RadonGeometry& g, double t) {
    return t * g.inv_bin_width + 0.5 * static_cast<double>(g.n_detectors) - 0.5;
}

} // namespace

LinearOperator gaussian_blur_operator(Index height, Index width, Index ksize, double sigma) {
    if (ksize > std::min(height, width))
        throw std::invalid_argument("blur kernel larger than image");
    if (ksize < 1 || sigma <= 0.0) throw std::invalid_argument("bad blur parameters");

    auto kernel = std::make_shared<BlurKernel>(make_blur_kernel(ksize, sigma));
    LinearOperator op;
    op.in_dim = op.out_dim = height * width;
    op.descriptor = {{"kind", "gaussian_blur"},
                     {"height", height},
                     {"width", width},
                     {"ksize", ksize},
                     {"sigma", sigma}};

    // out(y,x) = sum_{i,j} k(i,j) in(y+i-a, x+j-a), zero outside the frame
    op.apply = [height, width, kernel](const Vector& x) {
        Vector out = Vector::Zero(height * width);
        const Index ks = kernel->ksize, a = kernel->anchor;
        for (Index y = 0; y < height; ++y)
            for (Index xx = 0; xx < width; ++xx) {
                double acc = 0.0;
                for (Index i = 0; i < ks; ++i) {
                    Index sy = y + i - a;
                    if (sy < 0 || sy >= height) continue;
                    for (Index j = 0; j < ks; ++j) {
                        Index sx = xx + j - a;
                        if (sx < 0 || sx >= width) continue;
                        acc += kernel->weights[i * ks + j] * x(sy * width + sx);
                    }
                }
                out(y * width + xx) = acc;
            }
        return out;
    };
    op.apply_adjoint = [height, width, kernel](const Vector& v) {
        Vector out = Vector::Zero(height * width);
        const Index ks = kernel->ksize, a = kernel->anchor;
        for (Index y = 0; y < height; ++y)
            for (Index xx = 0; xx < width; ++xx) {
                double val = v(y * width + xx);
                if (val == 0.0) continue;
                for (Index i = 0; i < ks; ++i) {
                    Index sy = y + i - a;
                    if (sy < 0 || sy >= height) continue;
                    for (Index j = 0; j < ks; ++j) {
                        Index sx = xx + j - a;
                        if (sx < 0 || sx >= width) continue;
                        out(sy * width + sx) += kernel->weights[i * ks + j] * val;
                    }
                }
            }
        return out;
    };
    return op;
}

LinearOperator radon_operator(Index n, Index n_angles, Index n_detectors) {
    if (n < 4) throw std::invalid_argument("radon: n must be >= 4");
    if (n_angles < 1 || n_detectors < 1)
        throw std::invalid_argument("radon: need at least one angle and detector");

    auto geo = std::make_shared<RadonGeometry>();
    geo->n = n;
    geo->n_angles = n_angles;
    geo->n_detectors = n_detectors;
    double bin_width = std::sqrt(2.0) * static_cast<double>(n) / static_cast<double>(n_detectors);
    geo->inv_bin_width = 1.0 / bin_width;
    for (Index a = 0; a < n_angles; ++a) {
        double theta = kPi * static_cast<double>(a) / static_cast<double>(n_angles);
        geo->cos_t.push_back(std::cos(theta));
        geo->sin_t.push_back(std::sin(theta));
    }

    LinearOperator op;
    op.in_dim = n * n;
    op.out_dim = n_angles * n_detectors;
    op.descriptor = {{"kind", "radon"},
                     {"n", n},
                     {"n_angles", n_angles},
                     {"n_detectors", n_detectors}};

    // Pixel-driven: each pixel splats value/bin_width onto the two detector
    // bins straddling its projected center; boundary splats clamp into the
    // frame so every angle carries identical total mass.
    op.apply = [geo](const Vector& x) {
        const Index n = geo->n, nd = geo->n_detectors;
        Vector out = Vector::Zero(geo->n_angles * nd);
        double half = 0.5 * static_cast<double>(n - 1);
        for (Index a = 0; a < geo->n_angles; ++a) {
            double c = geo->cos_t[a], s = geo->sin_t[a];
            for (Index i = 0; i < n; ++i) {
                double py = static_cast<double>(i) - half;
                for (Index j = 0; j < n; ++j) {
                    double v = x(i * n + j);
                    if (v == 0.0) continue;
                    double px = static_cast<double>(j) - half;
                    double u = bin_coord(*geo, px * c + py * s);
                    Index k0 = static_cast<Index>(std::floor(u));
                    double f = u - static_cast<double>(k0);
                    double w = v * geo->inv_bin_width;
                    if (k0 < 0) {
                        out(a * nd + 0) += w;
                    } else if (k0 + 1 >= nd) {
                        out(a * nd + nd - 1) += w;
                    } else {
                        out(a * nd + k0) += w * (1.0 - f);
                        out(a * nd + k0 + 1) += w * f;
                    }
                }
            }
        }
        return out;
    };
    op.apply_adjoint = [geo](const Vector& y) {
        const Index n = geo->n, nd = geo->n_detectors;
        Vector out = Vector::Zero(n * n);
        double half = 0.5 * static_cast<double>(n - 1);
        for (Index a = 0; a < geo->n_angles; ++a) {
            double c = geo->cos_t[a], s = geo->sin_t[a];
            for (Index i = 0; i < n; ++i) {
                double py = static_cast<double>(i) - half;
                for (Index j = 0; j < n; ++j) {
                    double px = static_cast<double>(j) - half;
                    double u = bin_coord(*geo, px * c + py * s);
                    Index k0 = static_cast<Index>(std::floor(u));
                    double f = u - static_cast<double>(k0);
                    double acc;
                    if (k0 < 0) {
                        acc = y(a * nd + 0);
                    } else if (k0 + 1 >= nd) {
                        acc = y(a * nd + nd - 1);
                    } else {
                        acc = (1.0 - f) * y(a * nd + k0) + f * y(a * nd + k0 + 1);
                    }
                    out(i * n + j) += acc * geo->inv_bin_width;
                }
            }
        }
        return out;
    };
    return op;
}

Vector add_noise(const Vector& b_clean, NoiseMode mode, double level, Rng& rng) {
    if (level < 0.0) throw std::invalid_argument("noise level must be >= 0");
    if (level == 0.0) return b_clean;
    Vector eta(b_clean.size());
    for (Index i = 0; i < eta.size(); ++i) eta(i) = rng.normal();
    if (mode == NoiseMode::relative_norm) {
        double eta_norm = eta.norm();
        if (eta_norm == 0.0) return b_clean;
        return b_clean + eta * (level * b_clean.norm() / eta_norm);
    }
    return b_clean + std::sqrt(level) * eta;
}

Vector add_noise(const Vector& b_clean, const NoiseSpec& spec) {
    Rng rng(spec.seed);
    return add_noise(b_clean, spec.mode, spec.level, rng);
}

Matrix materialize(const LinearOperator& op) {
    if (static_cast<double>(op.in_dim) * static_cast<double>(op.out_dim) > 1e8)
        throw std::invalid_argument("materialize: refusing to allocate over 1e8 entries");
    Matrix A(op.out_dim, op.in_dim);
    Vector e = Vector::Zero(op.in_dim);
    for (Index j = 0; j < op.in_dim; ++j) {
        e(j) = 1.0;
        A.col(j) = op.apply(e);
        e(j) = 0.0;
    }
    return A;
}

LinearOperator from_descriptor(const nlohmann::json& d) {
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "gaussian_blur")
        return gaussian_blur_operator(d.at("height").get<Index>(), d.at("width").get<Index>(),
                                      d.at("ksize").get<Index>(), d.at("sigma").get<double>());
    if (kind == "radon")
        return radon_operator(d.at("n").get<Index>(), d.at("n_angles").get<Index>(),
                              d.at("n_detectors").get<Index>());
    throw std::invalid_argument("unknown operator kind: " + kind);
}

} // namespace pair::ops
