#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "pathlab/experiments.hpp"
#include "pathlab/homology.hpp"
#include "pathlab/leafgrowth.hpp"
#include "pathlab/lyapunov.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

pathlab::TorusMap map_from(const std::string& text) { return pathlab::torus_map_from_json(json::parse(text)); }

pathlab::Vector to_vector(const std::vector<double>& v) {
    pathlab::Vector x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
    return x;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Torus-map growth, currents and Lyapunov exponents (JSON-in, JSON-out)";

    py::register_exception<pathlab::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<pathlab::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("eigenvalues", [](const std::string& map_json) {
        return map_from(map_json).eigen().values;
    }, py::arg("map_json"));

    m.def("topological_growth", [](const std::string& map_json, const std::vector<int>& bundle) {
        const auto map = map_from(map_json);
        const auto s = pathlab::BundleSelector::from_one_based(bundle, map.dim());
        return pathlab::homology_fragment(pathlab::topological_growth(map.linear_real(), map.eigen(), s), map.dim()).dump();
    }, py::arg("map_json"), py::arg("bundle"));

    m.def("qr_spectrum", [](const std::string& map_json, const std::vector<double>& x, int steps) {
        return pathlab::qr_spectrum(map_from(map_json), to_vector(x), steps);
    }, py::arg("map_json"), py::arg("x"), py::arg("steps"));

    m.def("integrated_exponent", [](const std::string& map_json, const std::vector<int>& bundle, std::int64_t samples,
                                    std::uint64_t seed, const std::string& estimator, int threads) {
        const auto map = map_from(map_json);
        const auto s = pathlab::BundleSelector::from_one_based(bundle, map.dim());
        py::gil_scoped_release release;
        const auto r = pathlab::integrated_exponent(map, s, samples, {}, seed, threads,
                                                    pathlab::estimator_from_string(estimator));
        return pathlab::to_json(r).dump();
    }, py::arg("map_json"), py::arg("bundle"), py::arg("samples"), py::arg("seed") = 1,
       py::arg("estimator") = "uniform", py::arg("threads") = 1);

    m.def("leaf_volumes", [](const std::string& map_json, const std::vector<int>& bundle, const std::vector<double>& x,
                             double radius, double delta, int steps) {
        const auto map = map_from(map_json);
        const auto s = pathlab::BundleSelector::from_one_based(bundle, map.dim());
        const auto p = to_vector(x);
        auto disk = pathlab::seed_disk(p, pathlab::orthonormalize(pathlab::bundle_frame(map, p, s)), radius, delta);
        pathlab::iterate_refine(disk, map, steps);
        return py::make_tuple(disk.volumes, disk.truncated);
    }, py::arg("map_json"), py::arg("bundle"), py::arg("x"), py::arg("radius"), py::arg("delta"), py::arg("steps"));

    m.def("run", [](const std::string& command, const std::string& config_path, const std::string& out,
                    std::optional<std::uint64_t> seed, int threads) {
        pathlab::RunContext ctx;
        ctx.out = out;
        ctx.threads = threads;
        ctx.seed = seed;
        std::ostringstream log;
        int code = 0;
        {
            py::gil_scoped_release release;
            code = pathlab::run_command(command, config_path, ctx, log);
        }
        return py::make_tuple(code, log.str());
    }, py::arg("command"), py::arg("config_path"), py::arg("out"), py::arg("seed") = py::none(), py::arg("threads") = 1);
}
