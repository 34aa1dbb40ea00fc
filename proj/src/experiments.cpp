#include "pair/experiments.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pair/io.hpp"
#include "pair/metrics.hpp"
#include "pair/numerics.hpp"
#include "pair/operators.hpp"

namespace pair::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void write_run_json(const std::string& out_dir, const json& resolved) {
    write_text(out_dir + "/run.json", resolved.dump(2) + "\n");
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// ---- config plumbing ----

enum class FieldType { integer, number, string, array, object, boolean };

struct Field {
    const char* key;
    FieldType type;
    json default_value; // null means required
};

json resolve_with_schema(const std::string& kind, json cfg, const std::vector<Field>& fields) {
    if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
    std::set<std::string> known = {"experiment"};
    for (const auto& f : fields) known.insert(f.key);
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("unknown config key '" + it.key() + "' for " + kind);
    if (cfg.contains("experiment") && cfg["experiment"].get<std::string>() != kind)
        throw std::invalid_argument("config experiment kind is '" +
                                    cfg["experiment"].get<std::string>() + "', expected '" +
                                    kind + "'");
    cfg["experiment"] = kind;
    for (const auto& f : fields) {
        if (!cfg.contains(f.key)) {
            if (f.default_value.is_null())
                throw std::invalid_argument(std::string("missing required config key '") + f.key +
                                            "'");
            cfg[f.key] = f.default_value;
        }
        const json& v = cfg[f.key];
        bool ok = false;
        switch (f.type) {
            case FieldType::integer: ok = v.is_number_integer(); break;
            case FieldType::number: ok = v.is_number(); break;
            case FieldType::string: ok = v.is_string(); break;
            case FieldType::array: ok = v.is_array(); break;
            case FieldType::object: ok = v.is_object(); break;
            case FieldType::boolean: ok = v.is_boolean(); break;
        }
        if (!ok)
            throw std::invalid_argument(std::string("config key '") + f.key +
                                        "' has the wrong type");
    }
    return cfg;
}

json default_ranks() {
    json ranks = json::array();
    for (int r = 25; r <= 400; r += 25) ranks.push_back(r);
    return ranks;
}

// ---- deblurring data shared by the nonlinear experiments ----

struct DeblurData {
    Matrix train_x, train_b;
    Matrix test_x, test_b;
    ops::LinearOperator blur;
    std::string source; // "idx" or "synthetic"
};

Matrix synthetic_digit_columns(Index count, Index n, std::uint64_t master, const char* tag) {
    Matrix out(n * n, count);
    for (Index i = 0; i < count; ++i) {
        Rng rng(derive_seed(master, tag, static_cast<std::uint64_t>(i)));
        out.col(i) = data::make_synthetic_digits(1, n, rng).pixels.col(0);
    }
    return out;
}

Matrix blur_and_noise(const ops::LinearOperator& blur, const Matrix& x, double variance,
                      std::uint64_t master, const char* tag) {
    Matrix b(blur.out_dim, x.cols());
    for (Index i = 0; i < x.cols(); ++i) {
        Rng rng(derive_seed(master, tag, static_cast<std::uint64_t>(i)));
        b.col(i) = ops::add_noise(blur.apply(x.col(i)), ops::NoiseMode::fixed_variance, variance,
                                  rng);
    }
    return b;
}

DeblurData make_deblur_data(const json& cfg, std::string* resolved_source = nullptr) {
    const Index n = cfg.at("image_size").get<Index>();
    const Index train_count = cfg.at("train_count").get<Index>();
    const Index test_count = cfg.at("test_count").get<Index>();
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

    DeblurData d;
    d.blur = ops::gaussian_blur_operator(n, n, cfg.at("blur_ksize").get<Index>(),
                                         cfg.at("blur_sigma").get<double>());

    std::string source = cfg.at("source").get<std::string>();
    std::string dir = cfg.at("data_dir").get<std::string>();
    if (dir.empty())
        if (const char* env = std::getenv("PAIR_DATA_DIR")) dir = env;
    std::string train_file = dir + "/train-images-idx3-ubyte";
    std::string test_file = dir + "/t10k-images-idx3-ubyte";
    if (source == "auto")
        source = (!dir.empty() && fs::exists(train_file) && fs::exists(test_file)) ? "idx"
                                                                                   : "synthetic";
    if (source == "idx") {
        if (dir.empty() || !fs::exists(train_file) || !fs::exists(test_file))
            throw std::runtime_error(
                "MNIST IDX files not found; place train-images-idx3-ubyte and "
                "t10k-images-idx3-ubyte under the config's data_dir (or $PAIR_DATA_DIR), e.g. "
                "from https://ossci-datasets.s3.amazonaws.com/mnist/");
        data::ImageStack train = data::load_idx_images(train_file);
        data::ImageStack test = data::load_idx_images(test_file);
        if (train.count() < train_count || test.count() < test_count)
            throw std::runtime_error("IDX files have fewer images than requested");
        if (train.height != n || train.width != n)
            throw std::runtime_error("IDX image size does not match config image_size");
        d.train_x = train.pixels.leftCols(train_count);
        d.test_x = test.pixels.leftCols(test_count);
    } else if (source == "synthetic") {
        d.train_x = synthetic_digit_columns(train_count, n, seed, "digits/train");
        d.test_x = synthetic_digit_columns(test_count, n, seed, "digits/test");
    } else {
        throw std::invalid_argument("source must be auto, idx, or synthetic");
    }
    d.source = source;
    if (resolved_source) *resolved_source = source;

    double variance = cfg.at("noise_variance").get<double>();
    d.train_b = blur_and_noise(d.blur, d.train_x, variance, seed, "deblur/noise/train");
    d.test_b = blur_and_noise(d.blur, d.test_x, variance, seed, "deblur/noise/test");
    return d;
}

neural::TrainConfig make_train_config(Index epochs, Index batch_size, std::uint64_t seed) {
    neural::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.seed = seed;
    tc.lr_schedule = neural::phased_schedule(epochs);
    return tc;
}

NeuralPairModel train_neural_pair(const DeblurData& d, const json& cfg, std::vector<double>* loss_x,
                                  std::vector<double>* loss_b) {
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    const Index epochs = cfg.at("epochs").get<Index>();
    const Index batch = cfg.at("batch_size").get<Index>();

    NeuralPairModel model;
    model.spec = neural::tiny_autoencoder_spec(d.blur.descriptor.at("height").get<Index>(),
                                               d.blur.descriptor.at("width").get<Index>());
    auto rx = neural::train_autoencoder(model.spec, d.train_x,
                                        make_train_config(epochs, batch, derive_seed(seed, "ae_x", 0)));
    auto rb = neural::train_autoencoder(model.spec, d.train_b,
                                        make_train_config(epochs, batch, derive_seed(seed, "ae_b", 0)));
    model.params_x = rx.params;
    model.params_b = rb.params;
    if (loss_x) *loss_x = rx.epoch_loss;
    if (loss_b) *loss_b = rb.epoch_loss;

    Index map_pairs = cfg.at("map_pairs").get<Index>();
    if (map_pairs <= 0 || map_pairs > d.train_x.cols()) map_pairs = d.train_x.cols();
    Matrix z_x = neural::encode_batch(model.spec, model.params_x, d.train_x.leftCols(map_pairs));
    Matrix z_b = neural::encode_batch(model.spec, model.params_b, d.train_b.leftCols(map_pairs));
    auto maps = linear::fit_empirical_latent_maps(z_x, z_b);
    model.M = maps.forward;
    model.M_dag = maps.inverse;
    return model;
}

std::vector<double> per_sample_rel_errors(const Matrix& pred, const Matrix& truth) {
    std::vector<double> errs;
    errs.reserve(pred.cols());
    for (Index i = 0; i < pred.cols(); ++i)
        errs.push_back(metrics::relative_error(pred.col(i), truth.col(i)));
    return errs;
}

metrics::PairMetrics neural_pair_metrics(const NeuralPairModel& model, const Vector& b,
                                         const Vector& x_pred) {
    auto enc_b = [&](const Vector& v) {
        return Vector(neural::encode_batch(model.spec, model.params_b, v));
    };
    auto dec_b = [&](const Vector& v) {
        return Vector(neural::decode_batch(model.spec, model.params_b, v));
    };
    auto enc_x = [&](const Vector& v) {
        return Vector(neural::encode_batch(model.spec, model.params_x, v));
    };
    auto dec_x = [&](const Vector& v) {
        return Vector(neural::decode_batch(model.spec, model.params_x, v));
    };
    return metrics::pair_metrics(enc_b, dec_b, enc_x, dec_x, model.M, model.M_dag, b, x_pred);
}

} // namespace

std::string csv_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

Matrix NeuralPairModel::inverse_apply(const Matrix& b_cols) const {
    Matrix z = M_dag * neural::encode_batch(spec, params_b, b_cols);
    return neural::decode_batch(spec, params_x, z);
}

Matrix NeuralPairModel::forward_apply(const Matrix& x_cols) const {
    Matrix z = M * neural::encode_batch(spec, params_x, x_cols);
    return neural::decode_batch(spec, params_b, z);
}

// ---- persistence ----

void save_linear_pair(const linear::PairModel& model, const std::string& dir,
                      const json& config) {
    ensure_dir(dir);
    io::write_pmat(dir + "/E_x.pmat", model.ae_x.encoder);
    io::write_pmat(dir + "/D_x.pmat", model.ae_x.decoder);
    io::write_pmat(dir + "/E_b.pmat", model.ae_b.encoder);
    io::write_pmat(dir + "/D_b.pmat", model.ae_b.decoder);
    io::write_pmat(dir + "/M.pmat", model.maps.forward);
    io::write_pmat(dir + "/M_dag.pmat", model.maps.inverse);
    io::write_manifest(dir, "linear-pair",
                       {"E_x.pmat", "D_x.pmat", "E_b.pmat", "D_b.pmat", "M.pmat", "M_dag.pmat"},
                       config);
}

linear::PairModel load_linear_pair(const std::string& dir) {
    json manifest = io::load_manifest(dir);
    if (manifest.at("kind").get<std::string>() != "linear-pair")
        throw std::runtime_error("manifest kind is not linear-pair");
    linear::PairModel model;
    model.ae_x.encoder = io::read_pmat(dir + "/E_x.pmat");
    model.ae_x.decoder = io::read_pmat(dir + "/D_x.pmat");
    model.ae_x.latent_dim = model.ae_x.encoder.rows();
    model.ae_b.encoder = io::read_pmat(dir + "/E_b.pmat");
    model.ae_b.decoder = io::read_pmat(dir + "/D_b.pmat");
    model.ae_b.latent_dim = model.ae_b.encoder.rows();
    model.maps.forward = io::read_pmat(dir + "/M.pmat");
    model.maps.inverse = io::read_pmat(dir + "/M_dag.pmat");
    return model;
}

void save_neural_pair(const NeuralPairModel& model, const std::string& dir, const json& config) {
    ensure_dir(dir);
    io::write_pmat(dir + "/params_x.pmat", Matrix(model.params_x));
    io::write_pmat(dir + "/params_b.pmat", Matrix(model.params_b));
    io::write_pmat(dir + "/M.pmat", model.M);
    io::write_pmat(dir + "/M_dag.pmat", model.M_dag);
    json cfg = config;
    cfg["arch"] = "tiny_autoencoder";
    cfg["in_h"] = model.spec.in_h;
    cfg["in_w"] = model.spec.in_w;
    io::write_manifest(dir, "neural-pair", {"params_x.pmat", "params_b.pmat", "M.pmat", "M_dag.pmat"},
                       cfg);
}

NeuralPairModel load_neural_pair(const std::string& dir) {
    json manifest = io::load_manifest(dir);
    if (manifest.at("kind").get<std::string>() != "neural-pair")
        throw std::runtime_error("manifest kind is not neural-pair");
    const json& cfg = manifest.at("config");
    NeuralPairModel model;
    model.spec = neural::tiny_autoencoder_spec(cfg.at("in_h").get<Index>(),
                                               cfg.at("in_w").get<Index>());
    model.params_x = Vector(io::read_pmat(dir + "/params_x.pmat"));
    model.params_b = Vector(io::read_pmat(dir + "/params_b.pmat"));
    model.M = io::read_pmat(dir + "/M.pmat");
    model.M_dag = io::read_pmat(dir + "/M_dag.pmat");
    if (model.params_x.size() != model.spec.param_count())
        throw std::runtime_error("stored parameter vector does not match architecture");
    return model;
}

// ---- configuration ----

json resolve_config(const std::string& kind, json cfg) {
    if (kind == "ct_rank_sweep") {
        return resolve_with_schema(
            kind, std::move(cfg),
            {{"n", FieldType::integer, 32},
             {"n_angles", FieldType::integer, 18},
             {"n_detectors", FieldType::integer, 45},
             {"noise_level", FieldType::number, 0.05},
             {"jitter", FieldType::number, 0.1},
             {"counts", FieldType::object,
              json{{"unpaired_b", 1000}, {"unpaired_x", 800}, {"paired", 800}, {"test", 200}}},
             {"ranks", FieldType::array, default_ranks()},
             {"seed", FieldType::integer, 7}});
    }
    std::vector<Field> deblur_fields = {
        {"image_size", FieldType::integer, 28},   {"train_count", FieldType::integer, 2000},
        {"test_count", FieldType::integer, 500},  {"blur_ksize", FieldType::integer, 8},
        {"blur_sigma", FieldType::number, 10.0},  {"noise_variance", FieldType::number, 0.01},
        {"epochs", FieldType::integer, 40},       {"batch_size", FieldType::integer, 256},
        {"seed", FieldType::integer, 11},         {"map_pairs", FieldType::integer, 0},
        {"data_dir", FieldType::string, ""},      {"source", FieldType::string, "auto"}};
    if (kind == "mnist_pipeline") return resolve_with_schema(kind, std::move(cfg), deblur_fields);
    if (kind == "e2e_comparison") {
        deblur_fields.push_back({"pair_grid", FieldType::array, json::array({200, 500, 1000, 2000})});
        deblur_fields.push_back({"cold_epochs", FieldType::integer, 40});
        deblur_fields.push_back({"refine_epochs_hi", FieldType::integer, 15});
        deblur_fields.push_back({"refine_epochs_lo", FieldType::integer, 10});
        deblur_fields.push_back({"model_dir", FieldType::string, ""});
        return resolve_with_schema(kind, std::move(cfg), deblur_fields);
    }
    if (kind == "ood") {
        deblur_fields.push_back({"in_count", FieldType::integer, 500});
        deblur_fields.push_back({"ood_count", FieldType::integer, 500});
        deblur_fields.push_back({"baseline_count", FieldType::integer, 500});
        deblur_fields.push_back({"threshold_pct", FieldType::number, 99.0});
        deblur_fields.push_back({"model_dir", FieldType::string, ""});
        return resolve_with_schema(kind, std::move(cfg), deblur_fields);
    }
    throw std::invalid_argument("unknown experiment kind: " + kind);
}

// ---- CT rank sweep ----

std::vector<RankSweepRow> run_rank_sweep(const json& cfg_in, const std::string& out_dir) {
    json cfg = resolve_config("ct_rank_sweep", cfg_in);
    ensure_dir(out_dir);

    const Index n = cfg["n"].get<Index>();
    auto op = ops::radon_operator(n, cfg["n_angles"].get<Index>(), cfg["n_detectors"].get<Index>());
    ops::NoiseSpec noise{ops::NoiseMode::relative_norm, cfg["noise_level"].get<double>(), 0};
    data::BundleCounts counts{cfg["counts"]["unpaired_b"].get<Index>(),
                              cfg["counts"]["unpaired_x"].get<Index>(),
                              cfg["counts"]["paired"].get<Index>(),
                              cfg["counts"]["test"].get<Index>()};
    auto bundle = data::build_ct_bundle(n, op, noise, counts, cfg["seed"].get<std::uint64_t>(),
                                        cfg["jitter"].get<double>());

    auto svd_x = numerics::svd(bundle.unpaired_x);
    auto svd_b = numerics::svd(bundle.unpaired_b);
    Matrix A = ops::materialize(op);
    auto svd_a = numerics::svd(A);

    const Index rank_x_max = svd_x.rank();
    const Index rank_b_max = svd_b.rank();
    const Index rank_a_max = svd_a.rank();

    std::ostringstream log;
    std::vector<RankSweepRow> rows;
    for (const auto& rj : cfg["ranks"]) {
        Index r = rj.get<Index>();
        if (r < 1 || r > std::max(rank_x_max, rank_b_max)) {
            log << "rank " << r << " skipped: exceeds data rank (x " << rank_x_max << ", b "
                << rank_b_max << ")\n";
            continue;
        }
        RankSweepRow row;
        row.rank = r;
        row.r_x = std::min(r, rank_x_max);
        row.r_b = std::min(r, rank_b_max);
        Matrix Ux = svd_x.U.leftCols(row.r_x);
        Matrix Ub = svd_b.U.leftCols(row.r_b);

        Matrix z_x = Ux.transpose() * bundle.paired_x;
        Matrix z_b = Ub.transpose() * bundle.paired_b;
        auto maps = linear::fit_empirical_latent_maps(z_x, z_b);

        Index r_a = std::min(r, rank_a_max);
        Matrix Ua = svd_a.U.leftCols(r_a);
        Matrix Va = svd_a.V.leftCols(r_a);
        Vector sa = svd_a.sigma.head(r_a);

        Matrix tzx = Ux.transpose() * bundle.test_x;
        Matrix tzb = Ub.transpose() * bundle.test_b;
        std::vector<double> e_ax, e_ab, e_pf, e_pi, e_tf, e_ti;
        for (Index i = 0; i < bundle.test_x.cols(); ++i) {
            Vector x = bundle.test_x.col(i);
            Vector b = bundle.test_b.col(i);
            e_ax.push_back(metrics::relative_error(Ux * tzx.col(i), x));
            e_ab.push_back(metrics::relative_error(Ub * tzb.col(i), b));
            e_pf.push_back(metrics::relative_error(Ub * (maps.forward * tzx.col(i)), b));
            e_pi.push_back(metrics::relative_error(Ux * (maps.inverse * tzb.col(i)), x));
            Vector tf = Ua * (sa.asDiagonal() * (Va.transpose() * x));
            e_tf.push_back(metrics::relative_error(tf, b));
            Vector ti = Va * (sa.cwiseInverse().asDiagonal() * (Ua.transpose() * b));
            e_ti.push_back(metrics::relative_error(ti, x));
        }
        row.ae_x_rel = mean(e_ax);
        row.ae_b_rel = mean(e_ab);
        row.pair_forward_rel = mean(e_pf);
        row.pair_inverse_rel = mean(e_pi);
        row.tsvd_forward_rel = mean(e_tf);
        row.tsvd_inverse_rel = mean(e_ti);
        rows.push_back(row);
    }

    std::ostringstream csv;
    csv << "rank,r_x,r_b,ae_x_rel,ae_b_rel,pair_forward_rel,pair_inverse_rel,tsvd_forward_rel,"
           "tsvd_inverse_rel\n";
    for (const auto& r : rows)
        csv << r.rank << "," << r.r_x << "," << r.r_b << "," << csv_double(r.ae_x_rel) << ","
            << csv_double(r.ae_b_rel) << "," << csv_double(r.pair_forward_rel) << ","
            << csv_double(r.pair_inverse_rel) << "," << csv_double(r.tsvd_forward_rel) << ","
            << csv_double(r.tsvd_inverse_rel) << "\n";
    write_text(out_dir + "/rank_sweep.csv", csv.str());
    write_text(out_dir + "/log.txt", log.str());
    write_run_json(out_dir, cfg);
    return rows;
}

// ---- deblurring pipeline ----

DeblurResult run_mnist_pipeline(const json& cfg_in, const std::string& out_dir) {
    json cfg = resolve_config("mnist_pipeline", cfg_in);
    ensure_dir(out_dir);

    std::string resolved_source;
    DeblurData d = make_deblur_data(cfg, &resolved_source);
    cfg["source"] = resolved_source;

    DeblurResult result;
    result.model = train_neural_pair(d, cfg, &result.loss_x, &result.loss_b);

    Matrix pred = result.model.inverse_apply(d.test_b);
    auto errs = per_sample_rel_errors(pred, d.test_x);
    result.mean_rel_error = mean(errs);

    std::ostringstream csv;
    csv << "sample_id,rel_error\n";
    for (std::size_t i = 0; i < errs.size(); ++i) csv << i << "," << csv_double(errs[i]) << "\n";
    write_text(out_dir + "/test_errors.csv", csv.str());

    std::ostringstream loss_csv;
    loss_csv << "epoch,loss_x,loss_b\n";
    for (std::size_t e = 0; e < result.loss_x.size(); ++e)
        loss_csv << e << "," << csv_double(result.loss_x[e]) << "," << csv_double(result.loss_b[e])
                 << "\n";
    write_text(out_dir + "/loss_curves.csv", loss_csv.str());

    result.model_dir = out_dir + "/model";
    save_neural_pair(result.model, result.model_dir, cfg);
    write_run_json(out_dir, cfg);
    return result;
}

// ---- PAIR vs end-to-end ----

std::vector<E2eRow> run_e2e_comparison(const json& cfg_in, const std::string& out_dir) {
    json cfg = resolve_config("e2e_comparison", cfg_in);
    ensure_dir(out_dir);

    std::string resolved_source;
    DeblurData d = make_deblur_data(cfg, &resolved_source);
    cfg["source"] = resolved_source;

    NeuralPairModel model;
    std::string model_dir = cfg["model_dir"].get<std::string>();
    if (!model_dir.empty())
        model = load_neural_pair(model_dir);
    else
        model = train_neural_pair(d, cfg, nullptr, nullptr);

    Matrix z_x_all = neural::encode_batch(model.spec, model.params_x, d.train_x);
    Matrix z_b_all = neural::encode_batch(model.spec, model.params_b, d.train_b);

    std::vector<Index> grid;
    for (const auto& j : cfg["pair_grid"]) grid.push_back(j.get<Index>());
    std::sort(grid.begin(), grid.end());

    const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
    std::ostringstream log;
    std::vector<E2eRow> rows;
    std::optional<Vector> e2e_params;
    for (Index J : grid) {
        if (J < 1 || J > d.train_x.cols()) {
            log << "J " << J << " skipped: exceeds available pairs (" << d.train_x.cols() << ")\n";
            continue;
        }
        E2eRow row;
        row.pairs = J;

        // PAIR: refit latent maps on the first J pairs, autoencoders untouched
        auto maps = linear::fit_empirical_latent_maps(z_x_all.leftCols(J), z_b_all.leftCols(J));
        Matrix z_pred = maps.inverse * neural::encode_batch(model.spec, model.params_b, d.test_b);
        Matrix pred = neural::decode_batch(model.spec, model.params_x, z_pred);
        row.pair_error = mean(per_sample_rel_errors(pred, d.test_x));

        // end-to-end: cold start at the first grid point, warm refinement after
        neural::TrainConfig tc;
        tc.batch_size = cfg["batch_size"].get<Index>();
        tc.seed = derive_seed(seed, "e2e", static_cast<std::uint64_t>(J));
        if (!e2e_params) {
            tc.epochs = cfg["cold_epochs"].get<Index>();
            tc.lr_schedule = neural::phased_schedule(tc.epochs);
        } else {
            Index hi = cfg["refine_epochs_hi"].get<Index>();
            Index lo = cfg["refine_epochs_lo"].get<Index>();
            tc.epochs = hi + lo;
            tc.lr_schedule = {{hi, 1e-3}, {lo, 1e-4}};
        }
        auto r = neural::train_end_to_end(model.spec, d.train_b.leftCols(J), d.train_x.leftCols(J),
                                          tc, e2e_params);
        e2e_params = r.params;
        Matrix e2e_pred = neural::forward(model.spec, *e2e_params, d.test_b);
        row.e2e_error = mean(per_sample_rel_errors(e2e_pred, d.test_x));
        rows.push_back(row);
    }

    std::ostringstream csv;
    csv << "pairs,pair_error,e2e_error\n";
    for (const auto& r : rows)
        csv << r.pairs << "," << csv_double(r.pair_error) << "," << csv_double(r.e2e_error) << "\n";
    write_text(out_dir + "/e2e_comparison.csv", csv.str());
    write_text(out_dir + "/log.txt", log.str());
    write_run_json(out_dir, cfg);
    return rows;
}

// ---- OOD experiment ----

OodResult run_ood_experiment(const json& cfg_in, const std::string& out_dir) {
    json cfg = resolve_config("ood", cfg_in);
    ensure_dir(out_dir);

    std::string resolved_source;
    DeblurData d = make_deblur_data(cfg, &resolved_source);
    cfg["source"] = resolved_source;

    NeuralPairModel model;
    std::string model_dir = cfg["model_dir"].get<std::string>();
    if (!model_dir.empty())
        model = load_neural_pair(model_dir);
    else
        model = train_neural_pair(d, cfg, nullptr, nullptr);

    const Index n = cfg["image_size"].get<Index>();
    const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
    const Index in_count = std::min(cfg["in_count"].get<Index>(), d.test_x.cols());
    const Index ood_count = cfg["ood_count"].get<Index>();

    Matrix in_x = d.test_x.leftCols(in_count);
    Matrix in_b = d.test_b.leftCols(in_count);
    Matrix ood_x(n * n, ood_count);
    for (Index i = 0; i < ood_count; ++i) {
        Rng rng(derive_seed(seed, "ood/glyphs", static_cast<std::uint64_t>(i)));
        ood_x.col(i) = data::make_ood_glyphs(1, n, rng).pixels.col(0);
    }
    Matrix ood_b =
        blur_and_noise(d.blur, ood_x, cfg["noise_variance"].get<double>(), seed, "deblur/noise/ood");

    auto collect = [&](const Matrix& b_cols) {
        Matrix x_pred = model.inverse_apply(b_cols);
        std::vector<metrics::PairMetrics> ms;
        for (Index i = 0; i < b_cols.cols(); ++i)
            ms.push_back(neural_pair_metrics(model, b_cols.col(i), x_pred.col(i)));
        return ms;
    };
    auto in_metrics = collect(in_b);
    auto ood_metrics = collect(ood_b);

    // baseline from training samples (through the same inverse path)
    Index baseline_count = std::min(cfg["baseline_count"].get<Index>(), d.train_x.cols());
    auto baseline_metrics = collect(d.train_b.leftCols(baseline_count));
    auto baseline = metrics::BaselineDistribution::fit(baseline_metrics);
    baseline.save_csv(out_dir + "/baseline.csv");

    std::ostringstream csv;
    csv << "set,sample_id,metric,value\n";
    auto emit = [&](const char* tag, const std::vector<metrics::PairMetrics>& ms) {
        for (std::size_t i = 0; i < ms.size(); ++i)
            for (std::size_t m = 0; m < 5; ++m)
                if (auto v = ms[i].by_index(m))
                    csv << tag << "," << i << "," << metrics::PairMetrics::names[m] << ","
                        << csv_double(*v) << "\n";
    };
    emit("in", in_metrics);
    emit("out", ood_metrics);
    write_text(out_dir + "/ood_metrics.csv", csv.str());

    OodResult result;
    std::ostringstream summary;
    summary << "metric,auroc\n";
    for (std::size_t m = 0; m < 5; ++m) {
        std::vector<double> s_in, s_out;
        for (const auto& mm : in_metrics)
            if (auto v = mm.by_index(m)) s_in.push_back(*v);
        for (const auto& mm : ood_metrics)
            if (auto v = mm.by_index(m)) s_out.push_back(*v);
        result.auroc[m] = metrics::auroc(s_in, s_out);
        summary << metrics::PairMetrics::names[m] << "," << csv_double(result.auroc[m]) << "\n";
    }
    // null comparison: split the in-set in half on the latent_x metric
    {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < in_metrics.size(); ++i)
            if (auto v = in_metrics[i].by_index(3)) (i % 2 == 0 ? a : b).push_back(*v);
        result.null_auroc = metrics::auroc(a, b);
        summary << "null_latent_x_rel," << csv_double(result.null_auroc) << "\n";
    }
    write_text(out_dir + "/auroc_summary.csv", summary.str());
    write_run_json(out_dir, cfg);
    return result;
}

// ---- dataset generation ----

void generate_ct_dataset(const json& cfg_in, const std::string& out_dir) {
    json cfg = resolve_config("ct_rank_sweep", cfg_in);
    ensure_dir(out_dir);
    const Index n = cfg["n"].get<Index>();
    auto op = ops::radon_operator(n, cfg["n_angles"].get<Index>(), cfg["n_detectors"].get<Index>());
    ops::NoiseSpec noise{ops::NoiseMode::relative_norm, cfg["noise_level"].get<double>(), 0};
    data::BundleCounts counts{cfg["counts"]["unpaired_b"].get<Index>(),
                              cfg["counts"]["unpaired_x"].get<Index>(),
                              cfg["counts"]["paired"].get<Index>(),
                              cfg["counts"]["test"].get<Index>()};
    auto bundle = data::build_ct_bundle(n, op, noise, counts, cfg["seed"].get<std::uint64_t>(),
                                        cfg["jitter"].get<double>());
    io::write_pmat(out_dir + "/unpaired_b.pmat", bundle.unpaired_b);
    io::write_pmat(out_dir + "/unpaired_x.pmat", bundle.unpaired_x);
    io::write_pmat(out_dir + "/paired_x.pmat", bundle.paired_x);
    io::write_pmat(out_dir + "/paired_b.pmat", bundle.paired_b);
    io::write_pmat(out_dir + "/test_x.pmat", bundle.test_x);
    io::write_pmat(out_dir + "/test_b.pmat", bundle.test_b);
    json manifest_cfg = cfg;
    manifest_cfg["bundle_descriptor"] = bundle.descriptor;
    io::write_manifest(out_dir, "ct-dataset",
                       {"unpaired_b.pmat", "unpaired_x.pmat", "paired_x.pmat", "paired_b.pmat",
                        "test_x.pmat", "test_b.pmat"},
                       manifest_cfg);
    write_run_json(out_dir, cfg);
}

} // namespace pair::experiments
