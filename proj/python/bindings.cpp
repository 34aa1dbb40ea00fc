#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "pair/datasets.hpp"
#include "pair/experiments.hpp"
#include "pair/io.hpp"
#include "pair/linear_pair.hpp"
#include "pair/metrics.hpp"
#include "pair/neural.hpp"
#include "pair/numerics.hpp"
#include "pair/operators.hpp"
#include "pair/rng.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace pair;

namespace {

json json_from_py(const py::object& obj) {
    if (obj.is_none()) return json::object();
    py::module_ pyjson = py::module_::import("json");
    return json::parse(pyjson.attr("dumps")(obj).cast<std::string>());
}

py::object json_to_py(const json& j) {
    py::module_ pyjson = py::module_::import("json");
    return pyjson.attr("loads")(j.dump());
}

ops::NoiseMode noise_mode(const std::string& s) {
    if (s == "relative_norm") return ops::NoiseMode::relative_norm;
    if (s == "fixed_variance") return ops::NoiseMode::fixed_variance;
    throw std::invalid_argument("noise mode must be relative_norm or fixed_variance");
}

} // namespace

PYBIND11_MODULE(_pair, m) {
    m.doc() = "paired autoencoders for linear inverse problems";

    // numerics
    py::class_<numerics::SvdResult>(m, "SvdResult")
        .def_readonly("U", &numerics::SvdResult::U)
        .def_readonly("sigma", &numerics::SvdResult::sigma)
        .def_readonly("V", &numerics::SvdResult::V)
        .def("rank", &numerics::SvdResult::rank, py::arg("rtol") = -1.0);
    m.def("svd", &numerics::svd);
    m.def("pseudo_inverse", &numerics::pseudo_inverse, py::arg("a"), py::arg("rtol") = -1.0);
    m.def("min_norm_right_solve", &numerics::min_norm_right_solve);

    // linear PAIR
    py::class_<linear::LinearAutoencoder>(m, "LinearAutoencoder")
        .def_readonly("encoder", &linear::LinearAutoencoder::encoder)
        .def_readonly("decoder", &linear::LinearAutoencoder::decoder)
        .def_readonly("latent_dim", &linear::LinearAutoencoder::latent_dim)
        .def("encode", &linear::LinearAutoencoder::encode)
        .def("decode", &linear::LinearAutoencoder::decode);
    py::class_<linear::LatentMap>(m, "LatentMap")
        .def_readonly("forward", &linear::LatentMap::forward)
        .def_readonly("inverse", &linear::LatentMap::inverse);
    py::class_<linear::PairModel>(m, "PairModel")
        .def_readonly("ae_x", &linear::PairModel::ae_x)
        .def_readonly("ae_b", &linear::PairModel::ae_b)
        .def_readonly("maps", &linear::PairModel::maps);
    m.def(
        "fit_empirical_autoencoder",
        [](const Matrix& samples, Index r) { return linear::fit_empirical_autoencoder(samples, r); },
        py::arg("samples"), py::arg("r"));
    m.def("fit_empirical_latent_maps", &linear::fit_empirical_latent_maps);
    m.def("pair_forward_apply", &linear::pair_forward_apply);
    m.def("pair_inverse_apply", &linear::pair_inverse_apply);
    m.def("materialize_surrogates", &linear::materialize_surrogates);
    m.def("closed_form_bayes_surrogates", &linear::closed_form_bayes_surrogates);

    // operators
    py::class_<ops::LinearOperator>(m, "LinearOperator")
        .def_readonly("in_dim", &ops::LinearOperator::in_dim)
        .def_readonly("out_dim", &ops::LinearOperator::out_dim)
        .def("apply", [](const ops::LinearOperator& op, const Vector& x) { return op.apply(x); })
        .def("apply_adjoint",
             [](const ops::LinearOperator& op, const Vector& y) { return op.apply_adjoint(y); })
        .def_property_readonly(
            "descriptor", [](const ops::LinearOperator& op) { return json_to_py(op.descriptor); });
    m.def("gaussian_blur_operator", &ops::gaussian_blur_operator, py::arg("height"),
          py::arg("width"), py::arg("ksize") = 8, py::arg("sigma") = 10.0);
    m.def("radon_operator", &ops::radon_operator);
    m.def("materialize", &ops::materialize);
    m.def(
        "add_noise",
        [](const Vector& b, const std::string& mode, double level, std::uint64_t seed) {
            return ops::add_noise(b, ops::NoiseSpec{noise_mode(mode), level, seed});
        },
        py::arg("b"), py::arg("mode"), py::arg("level"), py::arg("seed"));

    // datasets
    m.def(
        "generate_shepp_logan",
        [](Index n, std::uint64_t seed, double jitter) {
            Rng rng(seed);
            return data::generate_shepp_logan(n, rng, jitter);
        },
        py::arg("n"), py::arg("seed"), py::arg("jitter") = 0.1);
    m.def(
        "make_synthetic_digits",
        [](Index count, Index n, std::uint64_t seed) {
            Rng rng(seed);
            return data::make_synthetic_digits(count, n, rng).pixels;
        },
        py::arg("count"), py::arg("n"), py::arg("seed"));
    m.def(
        "make_ood_glyphs",
        [](Index count, Index n, std::uint64_t seed) {
            Rng rng(seed);
            return data::make_ood_glyphs(count, n, rng).pixels;
        },
        py::arg("count"), py::arg("n"), py::arg("seed"));
    m.def("load_idx_images",
          [](const std::string& path) { return data::load_idx_images(path).pixels; });

    // metrics
    m.def("relative_error", &metrics::relative_error);
    m.def("auroc", &metrics::auroc);

    // persistence + experiments
    m.def("save_linear_pair", [](const linear::PairModel& model, const std::string& dir,
                                 const py::object& cfg) {
        experiments::save_linear_pair(model, dir, json_from_py(cfg));
    }, py::arg("model"), py::arg("dir"), py::arg("config") = py::none());
    m.def("load_linear_pair", &experiments::load_linear_pair);
    m.def("resolve_config", [](const std::string& kind, const py::object& cfg) {
        return json_to_py(experiments::resolve_config(kind, json_from_py(cfg)));
    });
    m.def("run_rank_sweep", [](const py::object& cfg, const std::string& out_dir) {
        auto rows = experiments::run_rank_sweep(json_from_py(cfg), out_dir);
        py::list out;
        for (const auto& r : rows) {
            py::dict d;
            d["rank"] = r.rank;
            d["r_x"] = r.r_x;
            d["r_b"] = r.r_b;
            d["ae_x_rel"] = r.ae_x_rel;
            d["ae_b_rel"] = r.ae_b_rel;
            d["pair_forward_rel"] = r.pair_forward_rel;
            d["pair_inverse_rel"] = r.pair_inverse_rel;
            d["tsvd_forward_rel"] = r.tsvd_forward_rel;
            d["tsvd_inverse_rel"] = r.tsvd_inverse_rel;
            out.append(d);
        }
        return out;
    });

    // io
    m.def("write_pmat", &io::write_pmat);
    m.def("read_pmat", &io::read_pmat);
    m.def("sha256_file", &io::sha256_file);
}
