#include "pair/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pair::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
    double intensity, a, b, x0, y0, phi_deg;
};

// modified (Toft) Shepp-Logan table; interior values stay within [0,1]
constexpr std::array<Ellipse, 10> kSheppLogan = {{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

Vector render_ellipses(Index n, const std::array<Ellipse, 10>& table) {
    Vector img = Vector::Zero(n * n);
    for (const Ellipse& e : table) {
        double phi = e.phi_deg * kPi / 180.0;
        double c = std::cos(phi), s = std::sin(phi);
        double inv_a2 = 1.0 / (e.a * e.a), inv_b2 = 1.0 / (e.b * e.b);
        for (Index i = 0; i < n; ++i) {
            // pixel centers on [-1,1]^2, row 0 at the top
            double y = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
            for (Index j = 0; j < n; ++j) {
                double x = (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(n) - 1.0;
                double xr = (x - e.x0) * c + (y - e.y0) * s;
                double yr = -(x - e.x0) * s + (y - e.y0) * c;
                if (xr * xr * inv_a2 + yr * yr * inv_b2 <= 1.0) img(i * n + j) += e.intensity;
            }
        }
    }
    for (Index k = 0; k < img.size(); ++k) img(k) = std::clamp(img(k), 0.0, 1.0);
    return img;
}

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("idx: truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t expected,
                                        const std::string& path) {
    std::vector<unsigned char> buf(expected);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected));
    std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got != expected) {
        std::ostringstream msg;
        msg << "idx: truncated payload in " << path << " (expected " << expected << " bytes, got "
            << got << ")";
        throw std::runtime_error(msg.str());
    }
    return buf;
}

// 5x7 stroke bitmaps for capital letters A-J
constexpr std::array<std::array<const char*, 7>, 10> kGlyphs = {{
    {"01110", "10001", "10001", "11111", "10001", "10001", "10001"}, // A
    {"11110", "10001", "11110", "10001", "10001", "10001", "11110"}, // B
    {"01111", "10000", "10000", "10000", "10000", "10000", "01111"}, // C
    {"11110", "10001", "10001", "10001", "10001", "10001", "11110"}, // D
    {"11111", "10000", "11110", "10000", "10000", "10000", "11111"}, // E
    {"11111", "10000", "11110", "10000", "10000", "10000", "10000"}, // F
    {"01111", "10000", "10000", "10011", "10001", "10001", "01111"}, // G
    {"10001", "10001", "10001", "11111", "10001", "10001", "10001"}, // H
    {"11111", "00100", "00100", "00100", "00100", "00100", "11111"}, // I
    {"11111", "00010", "00010", "00010", "00010", "10010", "01100"}, // J
}};

struct Point {
    double x, y;
};

double seg_distance(Point p, Point a, Point b) {
    double vx = b.x - a.x, vy = b.y - a.y;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

std::vector<Point> arc(double cx, double cy, double rx, double ry, double a0, double a1,
                       int steps = 14) {
    std::vector<Point> pts;
    for (int k = 0; k <= steps; ++k) {
        double t = a0 + (a1 - a0) * static_cast<double>(k) / steps;
        pts.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
    }
    return pts;
}

// digit stroke skeletons in [0,1]^2, y pointing down; each digit is a list
// of polylines
std::vector<std::vector<Point>> digit_strokes(int d) {
    switch (d) {
        case 0: return {arc(0.5, 0.5, 0.30, 0.42, 0.0, 2.0 * kPi, 24)};
        case 1: return {{{0.35, 0.25}, {0.55, 0.10}, {0.55, 0.90}}};
        case 2: {
            auto top = arc(0.5, 0.30, 0.28, 0.22, kPi, 2.35 * kPi, 12);
            top.push_back({0.22, 0.90});
            top.push_back({0.80, 0.90});
            return {top};
        }
        case 3: {
            auto up = arc(0.47, 0.30, 0.27, 0.21, 1.25 * kPi, 2.6 * kPi, 12);
            auto low = arc(0.47, 0.70, 0.29, 0.22, 1.4 * kPi, 2.80 * kPi, 12);
            std::reverse(low.begin(), low.end());
            up.insert(up.end(), low.begin(), low.end());
            return {up};
        }
        case 4: return {{{0.65, 0.90}, {0.65, 0.10}, {0.20, 0.62}, {0.85, 0.62}}};
        case 5: {
            std::vector<Point> s = {{0.78, 0.12}, {0.28, 0.12}, {0.25, 0.48}};
            auto bowl = arc(0.47, 0.68, 0.28, 0.23, 1.30 * kPi, 2.75 * kPi, 12);
            s.insert(s.end(), bowl.begin(), bowl.end());
            return {s};
        }
        case 6: {
            auto sweep = arc(0.62, 0.40, 0.42, 0.55, 0.85 * kPi, 1.45 * kPi, 10);
            auto loop = arc(0.50, 0.68, 0.24, 0.21, 0.0, 2.0 * kPi, 18);
            return {sweep, loop};
        }
        case 7: return {{{0.20, 0.12}, {0.80, 0.12}, {0.42, 0.90}}};
        case 8:
            return {arc(0.5, 0.30, 0.22, 0.19, 0.0, 2.0 * kPi, 18),
                    arc(0.5, 0.70, 0.26, 0.22, 0.0, 2.0 * kPi, 18)};
        case 9: {
            auto loop = arc(0.50, 0.32, 0.24, 0.21, 0.0, 2.0 * kPi, 18);
            auto tail = arc(0.38, 0.60, 0.42, 0.55, -0.45 * kPi, 0.15 * kPi, 10);
            return {loop, tail};
        }
        default: throw std::logic_error("digit out of range");
    }
}

} // namespace

Vector generate_shepp_logan(Index n, Rng& rng, double jitter) {
    if (n < 16) throw std::invalid_argument("shepp-logan: n must be >= 16");
    if (jitter < 0.0 || jitter > 1.0) throw std::invalid_argument("jitter must be in [0,1]");
    std::array<Ellipse, 10> table = kSheppLogan;
    if (jitter > 0.0) {
        for (Ellipse& e : table) {
            e.intensity *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
            e.a *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
            e.b *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
            e.x0 += 0.05 * jitter * rng.uniform(-1.0, 1.0);
            e.y0 += 0.05 * jitter * rng.uniform(-1.0, 1.0);
            e.phi_deg += 10.0 * jitter * rng.uniform(-1.0, 1.0);
            // keep the ellipse inside the unit disk
            double reach = std::hypot(e.x0, e.y0) + std::max(e.a, e.b);
            if (reach > 1.0) {
                e.a /= reach;
                e.b /= reach;
            }
        }
    }
    return render_ellipses(n, table);
}

DatasetBundle build_ct_bundle(Index n, const ops::LinearOperator& op, const ops::NoiseSpec& noise,
                              const BundleCounts& counts, std::uint64_t master_seed,
                              double jitter) {
    DatasetBundle bundle;
    bundle.master_seed = master_seed;
    bundle.descriptor = {{"n", n},
                         {"operator", op.descriptor},
                         {"noise_mode", noise.mode == ops::NoiseMode::relative_norm
                                            ? "relative_norm"
                                            : "fixed_variance"},
                         {"noise_level", noise.level},
                         {"jitter", jitter},
                         {"counts",
                          {{"unpaired_b", counts.unpaired_b},
                           {"unpaired_x", counts.unpaired_x},
                           {"paired", counts.paired},
                           {"test", counts.test}}},
                         {"master_seed", master_seed}};

    auto phantom = [&](const char* tag, Index i) {
        Rng rng(derive_seed(master_seed, tag, static_cast<std::uint64_t>(i)));
        return generate_shepp_logan(n, rng, jitter);
    };
    auto sim = [&](const Vector& x, const char* noise_tag, Index i) {
        Rng rng(derive_seed(master_seed, noise_tag, static_cast<std::uint64_t>(i)));
        return ops::add_noise(op.apply(x), noise.mode, noise.level, rng);
    };

    bundle.unpaired_b.resize(op.out_dim, counts.unpaired_b);
    for (Index i = 0; i < counts.unpaired_b; ++i)
        bundle.unpaired_b.col(i) = sim(phantom("unpaired_b", i), "unpaired_b/noise", i);

    bundle.unpaired_x.resize(n * n, counts.unpaired_x);
    for (Index i = 0; i < counts.unpaired_x; ++i) bundle.unpaired_x.col(i) = phantom("unpaired_x", i);

    bundle.paired_x.resize(n * n, counts.paired);
    bundle.paired_b.resize(op.out_dim, counts.paired);
    for (Index i = 0; i < counts.paired; ++i) {
        bundle.paired_x.col(i) = phantom("paired", i);
        bundle.paired_b.col(i) = sim(bundle.paired_x.col(i), "paired/noise", i);
    }

    bundle.test_x.resize(n * n, counts.test);
    bundle.test_b.resize(op.out_dim, counts.test);
    for (Index i = 0; i < counts.test; ++i) {
        bundle.test_x.col(i) = phantom("test", i);
        bundle.test_b.col(i) = sim(bundle.test_x.col(i), "test/noise", i);
    }
    return bundle;
}

ImageStack load_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("idx: cannot open " + path);
    std::uint32_t magic = read_be32(in, path);
    if (magic != 0x00000803u) {
        std::ostringstream msg;
        msg << "idx: bad magic 0x" << std::hex << magic << " in " << path
            << " (expected 0x00000803 for u8 images)";
        throw std::runtime_error(msg.str());
    }
    std::uint32_t count = read_be32(in, path);
    std::uint32_t rows = read_be32(in, path);
    std::uint32_t cols = read_be32(in, path);
    if (rows == 0 || cols == 0 || count == 0 ||
        static_cast<std::uint64_t>(count) * rows * cols > (1ull << 33))
        throw std::runtime_error("idx: implausible dimensions in " + path);
    auto buf = read_payload(in, std::size_t(count) * rows * cols, path);
    ImageStack stack;
    stack.height = rows;
    stack.width = cols;
    stack.pixels.resize(Index(rows) * Index(cols), count);
    for (std::uint32_t k = 0; k < count; ++k)
        for (std::uint32_t p = 0; p < rows * cols; ++p)
            stack.pixels(p, k) = static_cast<double>(buf[std::size_t(k) * rows * cols + p]) / 255.0;
    return stack;
}

std::vector<std::uint8_t> load_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("idx: cannot open " + path);
    std::uint32_t magic = read_be32(in, path);
    if (magic != 0x00000801u) {
        std::ostringstream msg;
        msg << "idx: bad magic 0x" << std::hex << magic << " in " << path
            << " (expected 0x00000801 for u8 labels)";
        throw std::runtime_error(msg.str());
    }
    std::uint32_t count = read_be32(in, path);
    auto buf = read_payload(in, count, path);
    return {buf.begin(), buf.end()};
}

void save_idx_images(const std::string& path, const ImageStack& stack) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot write " + path);
    write_be32(out, 0x00000803u);
    write_be32(out, static_cast<std::uint32_t>(stack.count()));
    write_be32(out, static_cast<std::uint32_t>(stack.height));
    write_be32(out, static_cast<std::uint32_t>(stack.width));
    for (Index k = 0; k < stack.count(); ++k)
        for (Index p = 0; p < stack.height * stack.width; ++p) {
            double v = std::clamp(stack.pixels(p, k), 0.0, 1.0);
            out.put(static_cast<char>(std::lround(v * 255.0)));
        }
}

void save_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("idx: cannot write " + path);
    write_be32(out, 0x00000801u);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

ImageStack make_ood_glyphs(Index count, Index n, Rng& rng) {
    if (count < 1 || n < 16) throw std::invalid_argument("make_ood_glyphs: bad arguments");
    ImageStack stack;
    stack.height = stack.width = n;
    stack.pixels = Matrix::Zero(n * n, count);
    for (Index k = 0; k < count; ++k) {
        int glyph = static_cast<int>(rng.uniform_index(kGlyphs.size()));
        // glyph box: 5x7 cells scaled into roughly two thirds of the frame
        double scale = (0.55 + 0.25 * rng.uniform()) * static_cast<double>(n) / 7.0;
        double cell_w = scale * 0.9;
        double gw = 5.0 * cell_w, gh = 7.0 * scale;
        double ox = (static_cast<double>(n) - gw) * rng.uniform();
        double oy = (static_cast<double>(n) - gh) * rng.uniform();
        double thick = 0.45 + 0.35 * rng.uniform(); // stroke radius in cells
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                // position in glyph-cell coordinates
                double gx = (static_cast<double>(j) + 0.5 - ox) / cell_w;
                double gy = (static_cast<double>(i) + 0.5 - oy) / scale;
                if (gx < -1.0 || gx > 6.0 || gy < -1.0 || gy > 8.0) continue;
                double best = 1e30;
                for (int r = 0; r < 7; ++r)
                    for (int c = 0; c < 5; ++c)
                        if (kGlyphs[glyph][r][c] == '1') {
                            double dx = gx - (c + 0.5), dy = gy - (r + 0.5);
                            best = std::min(best, std::sqrt(dx * dx + dy * dy));
                        }
                double v = std::clamp(2.0 * (thick - best) + 0.5, 0.0, 1.0);
                stack.pixels(i * n + j, k) = v;
            }
    }
    return stack;
}

ImageStack make_synthetic_digits(Index count, Index n, Rng& rng) {
    if (count < 1 || n < 16) throw std::invalid_argument("make_synthetic_digits: bad arguments");
    ImageStack stack;
    stack.height = stack.width = n;
    stack.pixels = Matrix::Zero(n * n, count);
    double N = static_cast<double>(n);
    for (Index k = 0; k < count; ++k) {
        int digit = static_cast<int>(rng.uniform_index(10));
        auto strokes = digit_strokes(digit);
        // random affine: rotation, shear, anisotropic scale, translation
        double rot = rng.uniform(-0.22, 0.22);
        double shear = rng.uniform(-0.25, 0.25);
        double sx = 0.60 * N * (1.0 + rng.uniform(-0.12, 0.12));
        double sy = 0.72 * N * (1.0 + rng.uniform(-0.10, 0.10));
        double tx = 0.5 * N + rng.uniform(-0.06, 0.06) * N;
        double ty = 0.5 * N + rng.uniform(-0.05, 0.05) * N;
        double cr = std::cos(rot), sr = std::sin(rot);
        auto map = [&](Point p) {
            double x = (p.x - 0.5) + shear * (p.y - 0.5);
            double y = p.y - 0.5;
            return Point{tx + sx * (cr * x - sr * y), ty + sy * (sr * x + cr * y)};
        };
        std::vector<std::vector<Point>> mapped;
        for (auto& poly : strokes) {
            std::vector<Point> mp;
            mp.reserve(poly.size());
            for (Point p : poly) mp.push_back(map(p));
            mapped.push_back(std::move(mp));
        }
        double pen = N * (0.045 + 0.03 * rng.uniform()); // pen radius in pixels
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                Point p{static_cast<double>(j) + 0.5, static_cast<double>(i) + 0.5};
                double best = 1e30;
                for (auto& poly : mapped)
                    for (std::size_t s = 0; s + 1 < poly.size(); ++s)
                        best = std::min(best, seg_distance(p, poly[s], poly[s + 1]));
                // soft pen profile, roughly two pixels of falloff
                double v = std::clamp((pen - best) / 1.6 + 0.55, 0.0, 1.0);
                stack.pixels(i * n + j, k) = v;
            }
    }
    return stack;
}

} // namespace pair::data
