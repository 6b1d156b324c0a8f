#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "devfp/harness.hpp"

namespace py = pybind11;
using namespace devfp;

namespace {

AccumulatorSpec acc_of(const std::string& s) {
    if (s == "fp32") return {AccWidth::Bits32, false};
    if (s == "fp32+fma") return {AccWidth::Bits32, true};
    if (s == "fp64") return {AccWidth::Bits64, false};
    if (s == "fp64+fma") return {AccWidth::Bits64, true};
    throw Error("accumulator must be fp32, fp32+fma, fp64 or fp64+fma");
}

}  // namespace

PYBIND11_MODULE(_devfp, m) {
    m.doc() = "Numerical fingerprinting of simulated inference systems";
    py::register_exception<Error>(m, "DevfpError", PyExc_ValueError);

    m.def(
        "reduce",
        [](const std::vector<float>& v, const std::string& strategy, const std::string& acc) {
            return reduce(v, ReductionStrategy::parse(strategy), acc_of(acc));
        },
        py::arg("values"), py::arg("strategy") = "sequential", py::arg("acc") = "fp32");
    m.def(
        "softmax",
        [](const std::vector<float>& l, const std::string& variant, const std::string& strategy,
           const std::string& acc) {
            return softmax(l, parse_softmax(variant), ReductionStrategy::parse(strategy), acc_of(acc));
        },
        py::arg("logits"), py::arg("variant") = "two_pass", py::arg("strategy") = "sequential",
        py::arg("acc") = "fp32");
    m.def(
        "trace_demo",
        [](int n, double a, double b, const std::string& strategy, const std::string& acc) {
            return trace_demo(n, a, b, ReductionStrategy::parse(strategy), acc_of(acc));
        },
        py::arg("n") = 100, py::arg("a") = 0.02, py::arg("b") = 0.005, py::arg("strategy") = "sequential",
        py::arg("acc") = "fp32");

    m.def("valid_configs", [] {
        std::vector<std::string> ids;
        for (const auto& c : valid_configs()) ids.push_back(c.id());
        return ids;
    });

    m.def(
        "train_forest",
        [](const std::vector<std::vector<double>>& X, const std::vector<std::string>& y, int n_trees,
           uint64_t seed) {
            ForestParams p;
            p.n_trees = n_trees;
            p.seed = seed;
            return train_forest(X, y, "py", p).to_json();
        },
        py::arg("X"), py::arg("y"), py::arg("n_trees") = 100, py::arg("seed") = 0,
        "Train a forest; returns its JSON serialization.");
    m.def(
        "predict",
        [](const std::string& model_json, const std::vector<std::vector<double>>& X) {
            auto model = ForestModel::from_json(model_json);
            std::vector<std::string> out;
            for (const auto& x : X) out.push_back(predict(model, x));
            return out;
        },
        py::arg("model_json"), py::arg("X"));

    m.def(
        "run_experiment",
        [](const std::string& spec_json) {
            auto spec = ExperimentSpec::from_json(nlohmann::json::parse(spec_json));
            AccuracyReport r;
            {
                py::gil_scoped_release nogil;
                r = run_experiment(spec);
            }
            return r.to_csv();
        },
        py::arg("spec_json"), "Run one experiment from a JSON spec; returns the report CSV.");

    m.attr("experiments") = std::vector<std::string>(std::begin(kExperiments), std::end(kExperiments));
}
