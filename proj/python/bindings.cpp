#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "memdse/config.hpp"
#include "memdse/graph_ir.hpp"
#include "memdse/report.hpp"
#include "memdse/residency.hpp"
#include "memdse/sweep.hpp"
#include "memdse/synth.hpp"

namespace py = pybind11;
using namespace memdse;

namespace {

py::dict point_dict(const SweepPoint& p) {
    py::dict d;
    d["l1"] = p.l1;
    d["llc"] = p.llc;
    d["total_energy"] = p.energy.total;
    d["e_l1"] = p.energy.e_l1;
    d["e_llc"] = p.energy.e_llc;
    d["e_dram"] = p.energy.e_dram;
    d["e_core"] = p.energy.e_core;
    d["e_leakage"] = p.energy.e_leakage;
    d["dram_read"] = p.traffic.dram_read;
    d["dram_write"] = p.traffic.dram_write;
    d["llc_read"] = p.traffic.llc_read;
    d["llc_write"] = p.traffic.llc_write;
    d["l1_read"] = p.traffic.l1_read;
    d["l1_write"] = p.traffic.l1_write;
    d["t_mem"] = p.latency.t_mem;
    d["t_compute"] = p.t_compute;
    d["roofline_total"] = p.roofline_total;
    d["mapping_digest"] = p.mapping_digest;
    return d;
}

py::list points_list(const std::vector<SweepPoint>& points) {
    py::list out;
    for (const auto& p : points) out.append(point_dict(p));
    return out;
}

EngineConfig config_from(const std::optional<std::string>& path) {
    if (path) return load_engine_config(*path);
    EngineConfig cfg;
    cfg.tech = TechParams::defaults();
    return cfg;
}

std::vector<SweepPoint> sweep_impl(const WorkloadGraph& g, const std::optional<std::string>& config,
                                   std::optional<std::uint64_t> seed, std::optional<unsigned> workers,
                                   EngineConfig& cfg) {
    cfg = config_from(config);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    py::gil_scoped_release release;
    return run_sweep(g, cfg.grid, cfg.sweep_options(), cfg.tech);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Memory-hierarchy design-space exploration core";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<GraphError>(m, "GraphError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ModelError>(m, "ModelError", base.ptr());

    py::class_<WorkloadGraph>(m, "WorkloadGraph")
        .def_property_readonly("name", &WorkloadGraph::name)
        .def_property_readonly("num_nodes", [](const WorkloadGraph& g) { return g.nodes().size(); })
        .def_property_readonly("num_tensors", [](const WorkloadGraph& g) { return g.tensors().size(); })
        .def("node_ids",
             [](const WorkloadGraph& g) {
                 std::vector<std::string> ids;
                 for (const auto& n : g.nodes()) ids.push_back(n.id);
                 return ids;
             })
        .def("schedule", [](const WorkloadGraph& g) { return topological_order(g).ids(g); })
        .def("to_json", &serialize_workload)
        .def("__eq__", [](const WorkloadGraph& a, const WorkloadGraph& b) { return a == b; });

    m.def("parse_workload", [](const std::string& text) { return parse_workload(text); }, py::arg("text"));
    m.def("load_workload", &load_workload, py::arg("path"));
    m.def(
        "stats",
        [](const WorkloadGraph& g) {
            const auto s = tensor_stats(g);
            py::dict d;
            d["weight_mb"] = s.weight_mb;
            d["act_mb"] = s.act_mb;
            d["gflops"] = s.gflops;
            return d;
        },
        py::arg("graph"));
    m.def(
        "generate",
        [](const std::string& family, std::uint64_t seed, const std::map<std::string, std::int64_t>& params) {
            return generate_workload({family, params, seed});
        },
        py::arg("family"), py::arg("seed") = 0, py::arg("params") = std::map<std::string, std::int64_t>{});
    m.def("families", &synthetic_families);
    m.def("parse_capacity", [](const std::string& s) { return parse_capacity(s); }, py::arg("text"));

    m.def(
        "evaluate",
        [](const WorkloadGraph& g, const std::string& l1, const std::string& llc, std::optional<std::string> config,
           std::optional<std::uint64_t> seed) {
            auto cfg = config_from(config);
            if (seed) cfg.seed = *seed;
            return point_dict(evaluate_config(g, parse_capacity(l1), parse_capacity(llc), cfg.sweep_options(), cfg.tech));
        },
        py::arg("graph"), py::arg("l1"), py::arg("llc"), py::arg("config") = py::none(), py::arg("seed") = py::none());

    m.def(
        "sweep",
        [](const WorkloadGraph& g, std::optional<std::string> config, std::optional<std::uint64_t> seed,
           std::optional<unsigned> workers) {
            EngineConfig cfg;
            const auto points = sweep_impl(g, config, seed, workers, cfg);
            const auto r = classify_regime(points, cfg.grid, cfg.regime);
            const auto& best = best_point(points);
            py::dict out;
            out["points"] = points_list(points);
            out["pareto"] = points_list(pareto_front(points));
            out["best"] = point_dict(best);
            out["baseline"] = point_dict(find_point(points, cfg.grid.baseline_l1, cfg.grid.baseline_llc));
            out["regime"] = std::string(to_string(r.label));
            out["max_adjacent_drop"] = r.evidence.max_adjacent_drop;
            out["drop_step"] = r.evidence.drop_step;
            out["dram_fraction_at_max"] = r.evidence.dram_fraction_at_max;
            std::ostringstream heat;
            write_heatmap_csv(points, cfg.grid, heat);
            out["heatmap_csv"] = heat.str();
            return out;
        },
        py::arg("graph"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
        py::arg("workers") = py::none());

    m.def(
        "pareto_indices",
        [](const std::vector<std::pair<double, double>>& objectives) {
            std::vector<Objective> obj;
            for (const auto& [e, l] : objectives) obj.push_back({e, l});
            return pareto_indices(obj);
        },
        py::arg("objectives"));
}
