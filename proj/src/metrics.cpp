#include "pair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pair::metrics {

const std::array<const char*, 5> PairMetrics::names = {
    "ae_b_rel", "ae_x_rel", "residual_rel", "latent_x_rel", "latent_b_rel"};

std::optional<double> PairMetrics::by_index(std::size_t i) const {
    switch (i) {
        case 0: return ae_b_rel;
        case 1: return ae_x_rel;
        case 2: return residual_rel;
        case 3: return latent_x_rel;
        case 4: return latent_b_rel;
        default: throw std::out_of_range("metric index");
    }
}

double relative_error(const Vector& x_pred, const Vector& x_true) {
    if (x_pred.size() != x_true.size()) throw std::invalid_argument("dimension mismatch");
    double denom = x_true.norm();
    if (denom == 0.0) throw std::invalid_argument("relative_error: zero reference norm");
    return (x_pred - x_true).norm() / denom;
}

namespace {

std::optional<double> safe_rel(double num, double denom) {
    if (denom == 0.0) return std::nullopt;
    return num / denom;
}

} // namespace

PairMetrics pair_metrics(const VecFn& encode_b, const VecFn& decode_b, const VecFn& encode_x,
                         const VecFn& decode_x, const Matrix& M, const Matrix& M_dag,
                         const Vector& b, const Vector& x_pred) {
    Vector zb = encode_b(b);
    Vector zx = encode_x(x_pred);
    Vector m_zx = M * zx;

    PairMetrics out;
    out.ae_b_rel = safe_rel((decode_b(zb) - b).norm(), b.norm());
    out.ae_x_rel = safe_rel((decode_x(zx) - x_pred).norm(), x_pred.norm());
    out.residual_rel = safe_rel((decode_b(m_zx) - b).norm(), b.norm());
    out.latent_x_rel = safe_rel((M_dag * zb - zx).norm(), zx.norm());
    out.latent_b_rel = safe_rel((m_zx - zb).norm(), zb.norm());
    return out;
}

BaselineDistribution BaselineDistribution::fit(const std::vector<PairMetrics>& training_metrics) {
    if (training_metrics.size() < 30)
        throw std::invalid_argument("baseline needs at least 30 samples");
    BaselineDistribution bl;
    for (std::size_t i = 0; i < 5; ++i) {
        for (const auto& m : training_metrics)
            if (auto v = m.by_index(i)) bl.sorted_[i].push_back(*v);
        if (bl.sorted_[i].empty())
            throw std::invalid_argument("baseline: metric " + std::string(PairMetrics::names[i]) +
                                        " undefined on every sample");
        std::sort(bl.sorted_[i].begin(), bl.sorted_[i].end());
    }
    return bl;
}

double BaselineDistribution::percentile_of(std::size_t metric, double value) const {
    const auto& s = sorted_.at(metric);
    auto lo = std::lower_bound(s.begin(), s.end(), value);
    auto hi = std::upper_bound(s.begin(), s.end(), value);
    // midrank within the sorted baseline
    double rank = 0.5 * static_cast<double>((lo - s.begin()) + (hi - s.begin()));
    return 100.0 * rank / static_cast<double>(s.size());
}

double BaselineDistribution::percentile(std::size_t metric, double pct) const {
    const auto& s = sorted_.at(metric);
    if (pct <= 0.0) return s.front();
    if (pct >= 100.0) return s.back();
    double pos = pct / 100.0 * static_cast<double>(s.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(i);
    if (i + 1 >= s.size()) return s.back();
    return s[i] * (1.0 - frac) + s[i + 1] * frac;
}

void BaselineDistribution::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "metric,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < 5; ++i)
        for (double v : sorted_[i]) out << PairMetrics::names[i] << "," << v << "\n";
}

BaselineDistribution BaselineDistribution::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line != "metric,value") throw std::runtime_error("bad baseline CSV header in " + path);
    BaselineDistribution bl;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        std::string name = line.substr(0, comma);
        double value = std::stod(line.substr(comma + 1));
        bool found = false;
        for (std::size_t i = 0; i < 5; ++i)
            if (name == PairMetrics::names[i]) {
                bl.sorted_[i].push_back(value);
                found = true;
            }
        if (!found) throw std::runtime_error("unknown metric name in baseline CSV: " + name);
    }
    for (auto& s : bl.sorted_)
        if (!std::is_sorted(s.begin(), s.end()))
            throw std::runtime_error("baseline CSV values not sorted");
    return bl;
}

OodScore ood_score(const BaselineDistribution& baseline, const PairMetrics& m,
                   double threshold_pct) {
    OodScore score;
    for (std::size_t i = 0; i < 5; ++i) {
        auto v = m.by_index(i);
        if (!v) continue; // undefined metrics stay undefined
        score.percentiles[i] = baseline.percentile_of(i, *v);
    }
    // flag on the latent-space metrics (indices 3 and 4) only
    for (std::size_t i : {std::size_t(3), std::size_t(4)})
        if (score.percentiles[i] && *score.percentiles[i] > threshold_pct) score.flagged = true;
    return score;
}

double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores) {
    if (in_scores.empty() || out_scores.empty())
        throw std::invalid_argument("auroc: empty score set");
    // U statistic via midranks over the pooled sample
    struct Tagged {
        double v;
        bool is_out;
    };
    std::vector<Tagged> pool;
    pool.reserve(in_scores.size() + out_scores.size());
    for (double v : in_scores) pool.push_back({v, false});
    for (double v : out_scores) pool.push_back({v, true});
    std::sort(pool.begin(), pool.end(), [](const Tagged& a, const Tagged& b) { return a.v < b.v; });

    double rank_sum_out = 0.0;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].v == pool[i].v) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (pool[k].is_out) rank_sum_out += midrank;
        i = j;
    }
    double n_out = static_cast<double>(out_scores.size());
    double n_in = static_cast<double>(in_scores.size());
    double u = rank_sum_out - n_out * (n_out + 1.0) / 2.0;
    return u / (n_in * n_out);
}

} // namespace pair::metrics
