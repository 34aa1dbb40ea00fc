#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pair/experiments.hpp"
#include "pair/io.hpp"
#include "pair/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return json::parse(in);
}

json prepare(const std::string& config_path, const std::optional<std::uint64_t>& seed) {
    json cfg = load_config(config_path);
    if (seed) cfg["seed"] = *seed;
    return cfg;
}

struct CommonOpts {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool out_required = true) {
    cmd->add_option("--config", o.config, "JSON config file (defaults apply if omitted)");
    auto* out = cmd->add_option("--out", o.out, "output directory");
    if (out_required) out->required();
    cmd->add_option("--seed", o.seed, "override the config's master seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PAIR: paired autoencoders for linear inverse problems"};
    app.require_subcommand(1);

    CommonOpts gen, sweep, mnist, e2e, ood, save_o, info_o;

    auto* cmd_gen = app.add_subcommand("gen-ct", "generate a CT phantom/sinogram dataset bundle");
    add_common(cmd_gen, gen);
    auto* cmd_sweep = app.add_subcommand("rank-sweep", "linear PAIR vs TSVD over a rank grid");
    add_common(cmd_sweep, sweep);
    auto* cmd_mnist =
        app.add_subcommand("mnist", "train the deblurring PAIR model and evaluate test error");
    add_common(cmd_mnist, mnist);
    auto* cmd_e2e =
        app.add_subcommand("e2e", "PAIR vs end-to-end network over a paired-count grid");
    add_common(cmd_e2e, e2e);
    auto* cmd_ood = app.add_subcommand("ood", "out-of-distribution metric separation experiment");
    add_common(cmd_ood, ood);

    auto* cmd_save =
        app.add_subcommand("save", "verify a saved model directory and rewrite it elsewhere");
    std::string save_model_dir;
    cmd_save->add_option("--model", save_model_dir, "source model directory")->required();
    cmd_save->add_option("--out", save_o.out, "destination directory")->required();

    auto* cmd_info = app.add_subcommand("info", "print the manifest or run.json of a directory");
    std::string info_dir;
    cmd_info->add_option("dir", info_dir, "model or run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        namespace ex = pair::experiments;
        if (cmd_gen->parsed()) {
            ex::generate_ct_dataset(prepare(gen.config, gen.seed), gen.out);
            std::cout << "wrote dataset bundle to " << gen.out << "\n";
        } else if (cmd_sweep->parsed()) {
            auto rows = ex::run_rank_sweep(prepare(sweep.config, sweep.seed), sweep.out);
            std::cout << "rank sweep: " << rows.size() << " rows -> " << sweep.out
                      << "/rank_sweep.csv\n";
        } else if (cmd_mnist->parsed()) {
            auto r = ex::run_mnist_pipeline(prepare(mnist.config, mnist.seed), mnist.out);
            std::cout << "mean test relative error: " << ex::csv_double(r.mean_rel_error)
                      << "\nmodel saved to " << r.model_dir << "\n";
        } else if (cmd_e2e->parsed()) {
            auto rows = ex::run_e2e_comparison(prepare(e2e.config, e2e.seed), e2e.out);
            for (const auto& row : rows)
                std::cout << "J=" << row.pairs << " pair=" << ex::csv_double(row.pair_error)
                          << " e2e=" << ex::csv_double(row.e2e_error) << "\n";
        } else if (cmd_ood->parsed()) {
            auto r = ex::run_ood_experiment(prepare(ood.config, ood.seed), ood.out);
            for (std::size_t m = 0; m < 5; ++m)
                std::cout << pair::metrics::PairMetrics::names[m]
                          << " auroc=" << ex::csv_double(r.auroc[m]) << "\n";
            std::cout << "null split auroc=" << ex::csv_double(r.null_auroc) << "\n";
        } else if (cmd_save->parsed()) {
            json manifest = pair::io::load_manifest(save_model_dir);
            std::string kind = manifest.at("kind").get<std::string>();
            if (kind == "linear-pair")
                ex::save_linear_pair(ex::load_linear_pair(save_model_dir), save_o.out,
                                     manifest.at("config"));
            else if (kind == "neural-pair")
                ex::save_neural_pair(ex::load_neural_pair(save_model_dir), save_o.out,
                                     manifest.at("config"));
            else
                throw std::runtime_error("unsupported model kind: " + kind);
            std::cout << "verified and rewrote " << kind << " model to " << save_o.out << "\n";
        } else if (cmd_info->parsed()) {
            fs::path dir(info_dir);
            if (fs::exists(dir / "manifest.json"))
                std::cout << pair::io::load_manifest(info_dir).dump(2) << "\n";
            else if (fs::exists(dir / "run.json")) {
                std::ifstream in(dir / "run.json");
                std::cout << json::parse(in).dump(2) << "\n";
            } else {
                throw std::runtime_error("no manifest.json or run.json under " + info_dir);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
