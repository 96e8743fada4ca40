#include <cstring>
#include <optional>
#include <utility>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "amnet/config.hpp"
#include "amnet/datasets.hpp"
#include "amnet/error.hpp"
#include "amnet/experiment.hpp"
#include "amnet/matrix.hpp"
#include "amnet/network.hpp"
#include "amnet/rng.hpp"
#include "amnet/trainer.hpp"

namespace py = pybind11;
using namespace amnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& arr) {
    if (arr.ndim() != 2) throw DimensionError("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::memcpy(m.data(), arr.data(), sizeof(double) * m.size());
    return m;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> arr({m.rows(), m.cols()});
    std::memcpy(arr.mutable_data(), m.data(), sizeof(double) * m.size());
    return arr;
}

py::dict manifest_dict(const RunManifest& man) {
    py::dict d;
    d["config_hash"] = man.config_hash;
    d["started_at"] = man.started_at;
    d["finished_at"] = man.finished_at;
    d["version"] = man.version;
    d["run_dir"] = man.run_dir.string();
    d["config"] = man.config_path.string();
    d["csv"] = man.csv_path.string();
    d["svg"] = man.svg_path.string();
    d["checkpoint"] = man.checkpoint_path.string();
    d["manifest"] = man.manifest_path.string();
    return d;
}

} // namespace

PYBIND11_MODULE(_amnet, m) {
    m.doc() = "dense networks with per-task adversarial memory units";
    m.attr("__version__") = std::string(kVersion);

    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DataError>(m, "DataError");

    py::class_<Rng>(m, "Rng", "xoshiro256** seeded via SplitMix64; platform-independent")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def_property_readonly("seed", &Rng::seed)
        .def("next_u64", &Rng::next_u64)
        .def("uniform01", &Rng::uniform01)
        .def("uniform", &Rng::uniform, py::arg("lo"), py::arg("hi"))
        .def("uniform_int", &Rng::uniform_int, py::arg("bound"));

    py::enum_<Activation>(m, "Activation")
        .value("relu", Activation::Relu)
        .value("tanh", Activation::Tanh);
    py::enum_<Loss>(m, "Loss")
        .value("softmax_ce", Loss::SoftmaxCe)
        .value("sigmoid_ce", Loss::SigmoidCe);
    py::enum_<Scheme>(m, "Scheme")
        .value("shared", Scheme::Shared)
        .value("individual", Scheme::Individual);
    py::enum_<Method>(m, "Method")
        .value("pgd", Method::Pgd)
        .value("ewc", Method::EwcOnly)
        .value("ad", Method::Ad)
        .value("ad_ewc", Method::AdEwc);

    m.def(
        "matmul",
        [](const DoubleArray& a, const DoubleArray& b) {
            return to_array(matmul(to_matrix(a), to_matrix(b)));
        },
        py::arg("a"), py::arg("b"), "row-major double matrix product");
    m.def(
        "sign_scale",
        [](const DoubleArray& g, double eps) { return to_array(sign_scale(to_matrix(g), eps)); },
        py::arg("g"), py::arg("eps"),
        "elementwise eps*sign(g); exactly zero where the gradient is zero");
    m.def(
        "uniform_init",
        [](Rng& rng, std::size_t rows, std::size_t cols, double scale) {
            return to_array(uniform_init(rng, rows, cols, scale));
        },
        py::arg("rng"), py::arg("rows"), py::arg("cols"), py::arg("scale"));

    py::class_<Network>(m, "Network",
                        "stack of dense layers with per-task memory units per neuron")
        .def(py::init([](const std::vector<std::size_t>& dims, std::size_t num_tasks,
                         std::size_t k, Activation activation, Loss loss, Scheme scheme,
                         std::uint64_t seed) {
                 Rng rng(seed);
                 return Network(dims, num_tasks, k, activation, loss, scheme, rng);
             }),
             py::arg("dims"), py::arg("num_tasks"), py::arg("k"),
             py::arg("activation") = Activation::Relu, py::arg("loss") = Loss::SoftmaxCe,
             py::arg("scheme") = Scheme::Shared, py::arg("seed") = 1)
        .def_property_readonly("num_layers", &Network::num_layers)
        .def_property_readonly("num_tasks", &Network::num_tasks)
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("active_task", &Network::active_task)
        .def("set_active_task", &Network::set_active_task, py::arg("task").none(true))
        .def(
            "forward",
            [](const Network& net, const DoubleArray& x) {
                return to_array(net.forward(to_matrix(x)));
            },
            py::arg("x"));

    m.def(
        "load_mnist",
        [](const std::filesystem::path& images, const std::filesystem::path& labels) {
            const LabeledDataset d = load_mnist(images, labels);
            return py::make_tuple(to_array(d.images), d.labels);
        },
        py::arg("images_path"), py::arg("labels_path"),
        "parse a raw IDX pair into (images in [0,1], labels)");

    m.def(
        "run_experiment",
        [](const std::string& config_path,
           const std::vector<std::pair<std::string, std::string>>& overrides) {
            const ExperimentConfig cfg = parse_config(config_path, overrides);
            return manifest_dict(run_experiment(cfg));
        },
        py::arg("config_path") = std::string(),
        py::arg("overrides") = std::vector<std::pair<std::string, std::string>>{},
        "run one experiment config and return its manifest as a dict");
}
