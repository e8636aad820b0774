#include "lgfn/cli.hpp"
#include "lgfn/cost.hpp"
#include "lgfn/gradcheck.hpp"
#include "lgfn/metrics.hpp"
#include "lgfn/model.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace lgfn;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <typename T, typename A>
Tensor<T> to_tensor(const A& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor<T>(shape, std::vector<T>(a.data(), a.data() + a.size()));
}

template <typename T>
py::array_t<T> to_array(const Tensor<T>& t) {
    py::array_t<T> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.span().begin(), t.span().end(), out.mutable_data());
    return out;
}

LightField to_field(const F32Array& a) {
    if (a.ndim() != 5) throw ShapeError("expected a [U,V,C,H,W] array");
    return LightField(to_tensor<float>(a));
}

CliConfig config_or_default(const std::optional<std::string>& path) {
    return path ? load_cli_config(*path) : CliConfig{};
}

py::dict cost_dict(const CostReport& r) {
    py::dict groups;
    for (const auto& [name, n] : r.params_by_group) groups[py::str(name)] = n;
    py::dict d;
    d["params_total"] = r.params_total;
    d["params_by_group"] = groups;
    d["macs"] = r.macs_total;
    d["flops"] = r.flops_total;
    d["elementwise_ops"] = r.elementwise_total;
    d["convention"] = r.convention;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Light-field super-resolution core";

    // Translators run newest first, so the base class goes in before its subclasses.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

    m.def(
        "analyze",
        [](std::optional<std::string> config, Index height, Index width) {
            const CliConfig c = config_or_default(config);
            return cost_dict(count_flops(c.model, InputSpec{c.model.angular, c.model.angular, height, width, c.model.scale}));
        },
        py::arg("config") = py::none(), py::arg("height") = 32, py::arg("width") = 32);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a subcommand; returns (exit_code, stdout, stderr).");

    m.def(
        "gradcheck",
        [](std::uint64_t seed, bool include_model) {
            py::list out;
            for (const auto& c : run_gradcheck_suite(seed, include_model))
                out.append(py::dict(py::arg("name") = c.name, py::arg("error") = c.max_rel_error,
                                    py::arg("tolerance") = c.tolerance, py::arg("passed") = c.passed()));
            return out;
        },
        py::arg("seed") = 0, py::arg("include_model") = true);

    m.def("load_field", [](const std::string& path) { return to_array(lf_load(path).data); }, py::arg("path"));
    m.def(
        "store_field", [](const F32Array& a, const std::string& path) { lf_store(to_field(a), path); }, py::arg("field"),
        py::arg("path"));

    m.def(
        "disparity_field",
        [](Index U, Index V, Index H, Index W, double disparity, double taper) {
            return to_array(disparity_field(U, V, H, W, disparity, taper).data);
        },
        py::arg("U"), py::arg("V"), py::arg("H"), py::arg("W"), py::arg("disparity") = 1.0, py::arg("taper") = 10.0);

    m.def(
        "degrade_bicubic", [](const F32Array& hr, Index s) { return to_array(degrade_bicubic(to_field(hr), s).data); },
        py::arg("hr"), py::arg("scale"));

    m.def(
        "baseline_sr",
        [](const F32Array& lr, Index s, const std::string& mode) {
            if (mode != "bicubic" && mode != "bilinear") throw py::value_error("mode must be 'bicubic' or 'bilinear'");
            const auto rm = mode == "bicubic" ? kernels::ResizeMode::bicubic : kernels::ResizeMode::bilinear;
            return to_array(baseline_sr(to_field(lr), s, rm).data);
        },
        py::arg("lr"), py::arg("scale"), py::arg("mode") = "bicubic");

    m.def(
        "init_checkpoint",
        [](const std::string& path, std::optional<std::string> config, std::uint64_t seed) {
            checkpoint_save(init_params(config_or_default(config).model, seed), path);
        },
        py::arg("path"), py::arg("config") = py::none(), py::arg("seed") = 0);

    m.def(
        "super_resolve",
        [](const F32Array& lr, const std::string& checkpoint, std::optional<std::string> config) {
            const LgfnConfig cfg = config_or_default(config).model;
            const LightField field = to_field(lr);
            const ParamStore<float> p = checkpoint_load(checkpoint, cfg);
            LightField sr;
            {
                py::gil_scoped_release release;
                sr = lgfn_forward(field, p, cfg);
            }
            return to_array(sr.data);
        },
        py::arg("lr"), py::arg("checkpoint"), py::arg("config") = py::none());

    m.def(
        "psnr", [](const F64Array& a, const F64Array& b, double peak) { return psnr(to_tensor<double>(a), to_tensor<double>(b), peak); },
        py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);
    m.def(
        "ssim", [](const F64Array& a, const F64Array& b) { return ssim(to_tensor<double>(a), to_tensor<double>(b)); },
        py::arg("a"), py::arg("b"));

    m.def(
        "lr_at",
        [](Index epoch, std::optional<std::string> config) { return lr_at(epoch, config_or_default(config).train); },
        py::arg("epoch"), py::arg("config") = py::none());
}
