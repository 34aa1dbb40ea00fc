#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pair/types.hpp"

namespace pair::metrics {

/// ||x_pred - x_true|| / ||x_true||. Throws on zero denominator.
double relative_error(const Vector& x_pred, const Vector& x_true);

/// The five PAIR evaluation metrics; a metric is empty when its denominator
/// vanished (never silently zero).
struct PairMetrics {
    std::optional<double> ae_b_rel;      // ||d_b(e_b(b)) - b|| / ||b||
    std::optional<double> ae_x_rel;      // ||d_x(e_x(xp)) - xp|| / ||xp||
    std::optional<double> residual_rel;  // ||d_b(M e_x(xp)) - b|| / ||b||
    std::optional<double> latent_x_rel;  // ||M+ e_b(b) - e_x(xp)|| / ||e_x(xp)||
    std::optional<double> latent_b_rel;  // ||M e_x(xp) - e_b(b)|| / ||e_b(b)||

    static const std::array<const char*, 5> names;
    [[nodiscard]] std::optional<double> by_index(std::size_t i) const;
};

using VecFn = std::function<Vector(const Vector&)>;

/// Works for linear and neural PAIR models alike; callers pass encode/decode
/// callables and the dense latent maps.
PairMetrics pair_metrics(const VecFn& encode_b, const VecFn& decode_b, const VecFn& encode_x,
                         const VecFn& decode_x, const Matrix& M, const Matrix& M_dag,
                         const Vector& b, const Vector& x_pred);

/// Sorted per-metric training samples with linear-interpolation percentiles.
class BaselineDistribution {
public:
    static BaselineDistribution fit(const std::vector<PairMetrics>& training_metrics);

    /// percentile (0..100) of a value within metric i's baseline
    [[nodiscard]] double percentile_of(std::size_t metric, double value) const;
    [[nodiscard]] double percentile(std::size_t metric, double pct) const;
    [[nodiscard]] const std::vector<double>& samples(std::size_t metric) const {
        return sorted_[metric];
    }

    void save_csv(const std::string& path) const;
    static BaselineDistribution load_csv(const std::string& path);

private:
    std::array<std::vector<double>, 5> sorted_;
};

struct OodScore {
    std::array<std::optional<double>, 5> percentiles;
    bool flagged = false; // any latent-space metric above the threshold percentile
};

OodScore ood_score(const BaselineDistribution& baseline, const PairMetrics& m,
                   double threshold_pct = 99.0);

/// Rank-based AUROC with midrank tie handling; higher scores mean "more OOD".
double auroc(const std::vector<double>& in_scores, const std::vector<double>& out_scores);

} // namespace pair::metrics
