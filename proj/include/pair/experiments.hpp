#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "pair/datasets.hpp"
#include "pair/linear_pair.hpp"
#include "pair/neural.hpp"
#include "pair/types.hpp"

namespace pair::experiments {

/// Two trained convolutional autoencoders joined by linear latent maps.
struct NeuralPairModel {
    neural::ConvNetSpec spec;
    Vector params_x;
    Vector params_b;
    Matrix M;     // latent_b x latent_x
    Matrix M_dag; // latent_x x latent_b

    [[nodiscard]] Matrix inverse_apply(const Matrix& b_cols) const;
    [[nodiscard]] Matrix forward_apply(const Matrix& x_cols) const;
};

// ---- model persistence (PMAT + hashed manifest) ----

void save_linear_pair(const linear::PairModel& model, const std::string& dir,
                      const nlohmann::json& config = {});
linear::PairModel load_linear_pair(const std::string& dir);

void save_neural_pair(const NeuralPairModel& model, const std::string& dir,
                      const nlohmann::json& config = {});
NeuralPairModel load_neural_pair(const std::string& dir);

// ---- configuration ----

/// Fills defaults and validates field presence/types; throws with the
/// offending key on error. `kind` is one of ct_rank_sweep, mnist_pipeline,
/// e2e_comparison, ood.
nlohmann::json resolve_config(const std::string& kind, nlohmann::json cfg);

// ---- experiment runners ----
// Every runner writes run.json (the resolved config) plus its CSV outputs
// into out_dir; re-running with the same resolved config reproduces the
// CSVs byte for byte.

struct RankSweepRow {
    Index rank = 0, r_x = 0, r_b = 0;
    double ae_x_rel = 0, ae_b_rel = 0;
    double pair_forward_rel = 0, pair_inverse_rel = 0;
    double tsvd_forward_rel = 0, tsvd_inverse_rel = 0;
};
std::vector<RankSweepRow> run_rank_sweep(const nlohmann::json& cfg, const std::string& out_dir);

struct DeblurResult {
    NeuralPairModel model;
    double mean_rel_error = 0.0;
    std::vector<double> loss_x, loss_b;
    std::string model_dir;
};
/// Deblurring pipeline of the nonlinear experiment: trains both autoencoders
/// self-supervised, fits linear latent maps on pairs, evaluates test-set
/// relative errors. Uses MNIST IDX files when available (cfg "data_dir" or
/// PAIR_DATA_DIR), otherwise the synthetic digit generator.
DeblurResult run_mnist_pipeline(const nlohmann::json& cfg, const std::string& out_dir);

struct E2eRow {
    Index pairs = 0;
    double pair_error = 0, e2e_error = 0;
};
std::vector<E2eRow> run_e2e_comparison(const nlohmann::json& cfg, const std::string& out_dir);

struct OodResult {
    std::array<double, 5> auroc{}; // per PAIR metric
    double null_auroc = 0.0;       // in-set split sanity value
};
OodResult run_ood_experiment(const nlohmann::json& cfg, const std::string& out_dir);

/// CT bundle generation for the gen-ct subcommand: PMAT partitions + manifest.
void generate_ct_dataset(const nlohmann::json& cfg, const std::string& out_dir);

/// 17-significant-digit decimal formatting shared by all CSV writers.
std::string csv_double(double v);

} // namespace pair::experiments
