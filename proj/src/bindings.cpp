#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vvccs/dynamics.hpp"
#include "vvccs/engine.hpp"
#include "vvccs/net.hpp"
#include "vvccs/planner.hpp"
#include "vvccs/scenario.hpp"

namespace py = pybind11;
using namespace vvccs;

namespace {

std::string run_scenario_file(const std::string& path, std::int64_t seed,
                              const std::string& algo,
                              const std::vector<std::string>& no_v2v) {
    auto sc = sim::load_scenario(path);
    if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
    if (!algo.empty()) sc.algorithm = sim::parse_algorithm(algo);
    sim::RunOptions opts;
    opts.extra_no_v2v = no_v2v;
    return sim::metrics_to_json(sim::run_scenario(sc, opts));
}

py::dict compare_scenario_file(const std::string& path, std::int64_t seed) {
    auto sc = sim::load_scenario(path);
    if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
    auto res = sim::compare_algorithms(sc);
    py::dict d;
    d["lease"] = sim::metrics_to_json(res.lease);
    d["lock"] = sim::metrics_to_json(res.lock);
    d["completion_ratio"] = res.completion_ratio;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lease-based intersection coordination simulator core";
    m.attr("__version__") = "0.1.0";

    m.def("run_scenario", &run_scenario_file, py::arg("path"), py::arg("seed") = -1,
          py::arg("algo") = "", py::arg("no_v2v") = std::vector<std::string>{},
          "Run one scenario file and return the metrics as a JSON string.");
    m.def("compare_scenarios", &compare_scenario_file, py::arg("path"), py::arg("seed") = -1,
          "Run a scenario under both algorithms; returns metrics and the completion ratio.");

    m.def(
        "controller_step",
        [](double v_current, double integral, double v_target, double dt) {
            dyn::VehicleParams p;
            dyn::MotorState s;
            s.v_current = v_current;
            s.integral_error = integral;
            auto r = dyn::controller_step(p, s, v_target, dt);
            return py::make_tuple(r.duty_cycle, r.motor.integral_error);
        },
        py::arg("v_current"), py::arg("integral"), py::arg("v_target"), py::arg("dt"),
        "One feedforward + PI step with default parameters; returns (duty, integral).");

    m.def("stopping_distance", &plan::stopping_distance, py::arg("v"), py::arg("a_min") = -2.0);

    m.def(
        "aggregate_bandwidth",
        [](int n, double msg_size, double period, double overhead) {
            net::NetParams p;
            p.msg_size = msg_size;
            p.update_period = period;
            p.overhead_fraction = overhead;
            return net::aggregate_bandwidth(n, p);
        },
        py::arg("n_vehicles"), py::arg("msg_size") = 4096.0, py::arg("period") = 0.1,
        py::arg("overhead") = 0.0, "Store synchronization traffic in bytes per second.");

    m.def(
        "max_supported_vehicles",
        [](double capacity, double msg_size, double period, double overhead) {
            net::NetParams p;
            p.capacity = capacity;
            p.msg_size = msg_size;
            p.update_period = period;
            p.overhead_fraction = overhead;
            return net::max_supported_vehicles(p);
        },
        py::arg("capacity") = 30.0e6, py::arg("msg_size") = 4096.0, py::arg("period") = 0.1,
        py::arg("overhead") = 0.0, "Largest fleet whose update traffic fits the capacity.");
}
