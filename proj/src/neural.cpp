#include "pair/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pair::neural {

namespace {

struct Shape {
    Index c = 0, h = 0, w = 0;
    [[nodiscard]] Index size() const { return c * h * w; }
};

Shape shape_after(const ConvLayerSpec& layer, Shape s) {
    s.c = layer.channels_out;
    switch (layer.resample) {
        case Resample::none: break;
        case Resample::maxpool2:
            if (s.h % 2 != 0 || s.w % 2 != 0)
                throw std::invalid_argument("maxpool2 requires even spatial dims");
            s.h /= 2;
            s.w /= 2;
            break;
        case Resample::upsample2:
            s.h *= 2;
            s.w *= 2;
            break;
    }
    return s;
}

Index layer_param_count(const ConvLayerSpec& layer) {
    return layer.channels_out * layer.channels_in * 9 + layer.channels_out;
}

// shapes[l] is the input shape of layer l; shapes[n] the final output shape
std::vector<Shape> layer_shapes(const ConvNetSpec& spec) {
    std::vector<Shape> shapes;
    Shape s{spec.in_c, spec.in_h, spec.in_w};
    shapes.push_back(s);
    for (const auto& layer : spec.layers) {
        if (layer.channels_in != s.c) throw std::invalid_argument("channel chain mismatch");
        s = shape_after(layer, s);
        shapes.push_back(s);
    }
    return shapes;
}

inline double activate(Act a, double z) {
    return a == Act::relu ? (z > 0.0 ? z : 0.0) : 1.0 / (1.0 + std::exp(-z));
}

// conv 3x3, stride 1, zero same-padding
void conv_forward(const ConvLayerSpec& L, Shape in, const double* x, const double* w,
                  const double* b, double* z) {
    const Index H = in.h, W = in.w;
    for (Index co = 0; co < L.channels_out; ++co) {
        for (Index y = 0; y < H; ++y)
            for (Index xx = 0; xx < W; ++xx) {
                double acc = b[co];
                for (Index ci = 0; ci < L.channels_in; ++ci) {
                    const double* xi = x + ci * H * W;
                    const double* wk = w + (co * L.channels_in + ci) * 9;
                    for (Index dy = 0; dy < 3; ++dy) {
                        Index sy = y + dy - 1;
                        if (sy < 0 || sy >= H) continue;
                        for (Index dx = 0; dx < 3; ++dx) {
                            Index sx = xx + dx - 1;
                            if (sx < 0 || sx >= W) continue;
                            acc += wk[dy * 3 + dx] * xi[sy * W + sx];
                        }
                    }
                }
                z[(co * H + y) * W + xx] = acc;
            }
    }
}

void conv_backward(const ConvLayerSpec& L, Shape in, const double* x, const double* w,
                   const double* dz, double* dx, double* dw, double* db) {
    const Index H = in.h, W = in.w;
    for (Index co = 0; co < L.channels_out; ++co) {
        for (Index y = 0; y < H; ++y)
            for (Index xx = 0; xx < W; ++xx) {
                double g = dz[(co * H + y) * W + xx];
                if (g == 0.0) continue;
                db[co] += g;
                for (Index ci = 0; ci < L.channels_in; ++ci) {
                    const double* xi = x + ci * H * W;
                    const double* wk = w + (co * L.channels_in + ci) * 9;
                    double* dwk = dw + (co * L.channels_in + ci) * 9;
                    double* dxi = dx + ci * H * W;
                    for (Index dy = 0; dy < 3; ++dy) {
                        Index sy = y + dy - 1;
                        if (sy < 0 || sy >= H) continue;
                        for (Index dxk = 0; dxk < 3; ++dxk) {
                            Index sx = xx + dxk - 1;
                            if (sx < 0 || sx >= W) continue;
                            dwk[dy * 3 + dxk] += g * xi[sy * W + sx];
                            dxi[sy * W + sx] += g * wk[dy * 3 + dxk];
                        }
                    }
                }
            }
    }
}

// per-image forward cache for one layer
struct LayerCache {
    std::vector<double> in;     // input tensor
    std::vector<double> a;      // post-activation (pre-resample)
    std::vector<double> out;    // post-resample
    std::vector<Index> argmax;  // maxpool source index per pooled cell
};

void run_layer(const ConvLayerSpec& L, Shape in_shape, const double* params_l,
               LayerCache& cache) {
    Shape conv_shape{L.channels_out, in_shape.h, in_shape.w};
    const double* w = params_l;
    const double* b = params_l + L.channels_out * L.channels_in * 9;
    std::vector<double> z(conv_shape.size());
    conv_forward(L, in_shape, cache.in.data(), w, b, z.data());
    cache.a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) cache.a[i] = activate(L.activation, z[i]);

    const Index H = conv_shape.h, W = conv_shape.w, C = conv_shape.c;
    switch (L.resample) {
        case Resample::none: cache.out = cache.a; break;
        case Resample::maxpool2: {
            cache.out.assign(C * (H / 2) * (W / 2), 0.0);
            cache.argmax.assign(cache.out.size(), 0);
            for (Index c = 0; c < C; ++c)
                for (Index y = 0; y < H / 2; ++y)
                    for (Index x = 0; x < W / 2; ++x) {
                        // ties go to the first row-major candidate
                        Index best = (c * H + 2 * y) * W + 2 * x;
                        for (Index dy = 0; dy < 2; ++dy)
                            for (Index dx = 0; dx < 2; ++dx) {
                                Index idx = (c * H + 2 * y + dy) * W + 2 * x + dx;
                                if (cache.a[idx] > cache.a[best]) best = idx;
                            }
                        Index o = (c * (H / 2) + y) * (W / 2) + x;
                        cache.out[o] = cache.a[best];
                        cache.argmax[o] = best;
                    }
            break;
        }
        case Resample::upsample2: {
            cache.out.assign(C * (2 * H) * (2 * W), 0.0);
            for (Index c = 0; c < C; ++c)
                for (Index y = 0; y < 2 * H; ++y)
                    for (Index x = 0; x < 2 * W; ++x)
                        cache.out[(c * 2 * H + y) * 2 * W + x] =
                            cache.a[(c * H + y / 2) * W + x / 2];
            break;
        }
    }
}

// forward over a layer range for one image, no cache retention beyond `out`
std::vector<double> run_range(const ConvNetSpec& spec, const Vector& params,
                              std::vector<double> x, Index first, Index last,
                              const std::vector<Shape>& shapes,
                              const std::vector<Index>& offsets) {
    for (Index l = first; l < last; ++l) {
        LayerCache cache;
        cache.in = std::move(x);
        run_layer(spec.layers[l], shapes[l], params.data() + offsets[l], cache);
        x = std::move(cache.out);
    }
    return x;
}

std::vector<Index> param_offsets(const ConvNetSpec& spec) {
    std::vector<Index> offsets;
    Index off = 0;
    for (const auto& layer : spec.layers) {
        offsets.push_back(off);
        off += layer_param_count(layer);
    }
    offsets.push_back(off);
    return offsets;
}

void check_params(const ConvNetSpec& spec, const Vector& params) {
    if (params.size() != spec.param_count()) {
        std::ostringstream msg;
        msg << "parameter vector has " << params.size() << " entries, spec needs "
            << spec.param_count();
        throw std::invalid_argument(msg.str());
    }
}

Matrix run_batch(const ConvNetSpec& spec, const Vector& params, const Matrix& batch, Index first,
                 Index last) {
    check_params(spec, params);
    auto shapes = layer_shapes(spec);
    auto offsets = param_offsets(spec);
    if (batch.rows() != shapes[first].size())
        throw std::invalid_argument("batch row count does not match layer input size");
    Matrix out(shapes[last].size(), batch.cols());
    for (Index k = 0; k < batch.cols(); ++k) {
        std::vector<double> x(batch.rows());
        Eigen::Map<Vector>(x.data(), batch.rows()) = batch.col(k);
        auto y = run_range(spec, params, std::move(x), first, last, shapes, offsets);
        out.col(k) = Eigen::Map<const Vector>(y.data(), out.rows());
    }
    return out;
}

TrainResult train_impl(const ConvNetSpec& spec, const Matrix& input, const Matrix& target,
                       const TrainConfig& cfg, const std::optional<Vector>& warm_start) {
    if (input.cols() == 0) throw std::invalid_argument("training set is empty");
    if (input.cols() != target.cols()) throw std::invalid_argument("input/target count mismatch");
    Index span_sum = 0;
    for (auto& [span, lr] : cfg.lr_schedule) span_sum += span;
    if (cfg.epochs > 0 && span_sum != cfg.epochs)
        throw std::invalid_argument("lr schedule spans must partition [0, epochs)");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

    TrainResult result;
    result.params = warm_start ? *warm_start : init_params(spec, cfg.seed);
    check_params(spec, result.params);
    AdamState state{Vector::Zero(result.params.size()), Vector::Zero(result.params.size()), 0};

    Rng shuffle_rng(derive_seed(cfg.seed, "train/shuffle", 0));
    std::vector<Index> order(input.cols());
    std::iota(order.begin(), order.end(), Index(0));

    auto lr_at = [&](Index epoch) {
        Index e = epoch;
        for (auto& [span, lr] : cfg.lr_schedule) {
            if (e < span) return lr;
            e -= span;
        }
        return cfg.lr_schedule.empty() ? 1e-3 : cfg.lr_schedule.back().second;
    };

    for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (Index i = static_cast<Index>(order.size()) - 1; i > 0; --i) {
            Index j = static_cast<Index>(shuffle_rng.uniform_index(i + 1));
            std::swap(order[i], order[j]);
        }
        double lr = lr_at(epoch);
        double loss_sum = 0.0;
        Index batches = 0;
        for (Index start = 0; start < input.cols(); start += cfg.batch_size) {
            Index bs = std::min(cfg.batch_size, input.cols() - start);
            Matrix bin(input.rows(), bs), btar(target.rows(), bs);
            for (Index k = 0; k < bs; ++k) {
                bin.col(k) = input.col(order[start + k]);
                btar.col(k) = target.col(order[start + k]);
            }
            auto [loss, grad] = loss_and_grad(spec, result.params, bin, btar);
            adam_step(result.params, grad, state, lr, cfg);
            loss_sum += loss;
            ++batches;
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    }
    return result;
}

} // namespace

Index ConvNetSpec::param_count() const {
    Index total = 0;
    for (const auto& layer : layers) total += layer_param_count(layer);
    return total;
}

Index ConvNetSpec::encoder_param_count() const {
    Index total = 0;
    for (Index l = 0; l < encoder_layers; ++l) total += layer_param_count(layers[l]);
    return total;
}

Index ConvNetSpec::latent_dim() const { return layer_shapes(*this)[encoder_layers].size(); }

Index ConvNetSpec::output_dim() const { return layer_shapes(*this).back().size(); }

ConvNetSpec tiny_autoencoder_spec(Index h, Index w) {
    ConvNetSpec spec;
    spec.in_h = h;
    spec.in_w = w;
    spec.in_c = 1;
    spec.layers = {
        {1, 2, Act::relu, Resample::maxpool2},
        {2, 3, Act::relu, Resample::maxpool2},
        {3, 3, Act::relu, Resample::upsample2},
        {3, 2, Act::relu, Resample::upsample2},
        {2, 1, Act::sigmoid, Resample::none},
    };
    spec.encoder_layers = 2;
    return spec;
}

std::vector<std::pair<Index, double>> phased_schedule(Index epochs) {
    if (epochs <= 0) return {};
    Index quarter = epochs / 4;
    std::vector<std::pair<Index, double>> sched = {{quarter, 1e-3},
                                                   {quarter, 1e-4},
                                                   {quarter, 1e-3},
                                                   {epochs - 3 * quarter, 1e-4}};
    return sched;
}

Vector init_params(const ConvNetSpec& spec, std::uint64_t seed) {
    Vector params = Vector::Zero(spec.param_count());
    Rng rng(derive_seed(seed, "init", 0));
    Index off = 0;
    for (const auto& layer : spec.layers) {
        Index fan_in = layer.channels_in * 9;
        Index fan_out = layer.channels_out * 9;
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Index n_w = layer.channels_out * layer.channels_in * 9;
        for (Index i = 0; i < n_w; ++i) params(off + i) = rng.uniform(-bound, bound);
        off += layer_param_count(layer); // biases stay zero
    }
    return params;
}

Matrix forward(const ConvNetSpec& spec, const Vector& params, const Matrix& batch) {
    return run_batch(spec, params, batch, 0, static_cast<Index>(spec.layers.size()));
}

Matrix encode_batch(const ConvNetSpec& spec, const Vector& params, const Matrix& batch) {
    return run_batch(spec, params, batch, 0, spec.encoder_layers);
}

Matrix decode_batch(const ConvNetSpec& spec, const Vector& params, const Matrix& latent) {
    return run_batch(spec, params, latent, spec.encoder_layers,
                     static_cast<Index>(spec.layers.size()));
}

std::pair<double, Vector> loss_and_grad(const ConvNetSpec& spec, const Vector& params,
                                        const Matrix& input, const Matrix& target) {
    check_params(spec, params);
    auto shapes = layer_shapes(spec);
    auto offsets = param_offsets(spec);
    const Index n_layers = static_cast<Index>(spec.layers.size());
    if (input.rows() != shapes.front().size() || target.rows() != shapes.back().size())
        throw std::invalid_argument("loss_and_grad: batch shape mismatch");

    Vector grad = Vector::Zero(params.size());
    double loss = 0.0;
    const double denom = static_cast<double>(input.cols()) * static_cast<double>(target.rows());

    for (Index k = 0; k < input.cols(); ++k) {
        std::vector<LayerCache> caches(n_layers);
        caches[0].in.resize(input.rows());
        Eigen::Map<Vector>(caches[0].in.data(), input.rows()) = input.col(k);
        for (Index l = 0; l < n_layers; ++l) {
            run_layer(spec.layers[l], shapes[l], params.data() + offsets[l], caches[l]);
            if (l + 1 < n_layers) caches[l + 1].in = caches[l].out;
        }

        // MSE head: d loss / d out = 2 (out - target) / (batch * pixels)
        const auto& out = caches[n_layers - 1].out;
        std::vector<double> dout(out.size());
        for (Index p = 0; p < target.rows(); ++p) {
            double diff = out[p] - target(p, k);
            loss += diff * diff / denom;
            dout[p] = 2.0 * diff / denom;
        }

        for (Index l = n_layers - 1; l >= 0; --l) {
            const auto& L = spec.layers[l];
            const auto& cache = caches[l];
            Shape in_shape = shapes[l];
            Shape conv_shape{L.channels_out, in_shape.h, in_shape.w};

            // resample backward: dout -> da
            std::vector<double> da(conv_shape.size(), 0.0);
            switch (L.resample) {
                case Resample::none: da = dout; break;
                case Resample::maxpool2:
                    for (std::size_t o = 0; o < cache.argmax.size(); ++o)
                        da[cache.argmax[o]] += dout[o];
                    break;
                case Resample::upsample2: {
                    const Index H = conv_shape.h, W = conv_shape.w;
                    for (Index c = 0; c < conv_shape.c; ++c)
                        for (Index y = 0; y < 2 * H; ++y)
                            for (Index x = 0; x < 2 * W; ++x)
                                da[(c * H + y / 2) * W + x / 2] +=
                                    dout[(c * 2 * H + y) * 2 * W + x];
                    break;
                }
            }

            // activation backward: da -> dz (relu subgradient 0 at 0)
            std::vector<double> dz(da.size());
            for (std::size_t i = 0; i < da.size(); ++i) {
                if (L.activation == Act::relu)
                    dz[i] = cache.a[i] > 0.0 ? da[i] : 0.0;
                else
                    dz[i] = da[i] * cache.a[i] * (1.0 - cache.a[i]);
            }

            std::vector<double> din(in_shape.size(), 0.0);
            double* dw = grad.data() + offsets[l];
            double* db = dw + L.channels_out * L.channels_in * 9;
            conv_backward(L, in_shape, cache.in.data(), params.data() + offsets[l], dz.data(),
                          din.data(), dw, db);
            dout = std::move(din);
        }
    }
    return {loss, grad};
}

void adam_step(Vector& params, const Vector& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (Index i = 0; i < params.size(); ++i) {
        state.m(i) = cfg.beta1 * state.m(i) + (1.0 - cfg.beta1) * grads(i);
        state.v(i) = cfg.beta2 * state.v(i) + (1.0 - cfg.beta2) * grads(i) * grads(i);
        double mhat = state.m(i) / b1t;
        double vhat = state.v(i) / b2t;
        params(i) -= lr * mhat / (std::sqrt(vhat) + cfg.eps_hat);
    }
}

TrainResult train_autoencoder(const ConvNetSpec& spec, const Matrix& data,
                              const TrainConfig& cfg) {
    return train_impl(spec, data, data, cfg, {});
}

TrainResult train_end_to_end(const ConvNetSpec& spec, const Matrix& input, const Matrix& target,
                             const TrainConfig& cfg, const std::optional<Vector>& warm_start) {
    if (cfg.epochs == 0 && warm_start) return TrainResult{*warm_start, {}};
    return train_impl(spec, input, target, cfg, warm_start);
}

} // namespace pair::neural
