// memdse: command-line front end for the memory design-space explorer.
//
// Exit codes: 0 success, 1 usage / config / parse errors, 2 model errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memdse/config.hpp"
#include "memdse/graph_ir.hpp"
#include "memdse/report.hpp"
#include "memdse/residency.hpp"
#include "memdse/sweep.hpp"
#include "memdse/synth.hpp"

namespace fs = std::filesystem;
using namespace memdse;

namespace {

EngineConfig config_or_defaults(const std::string& path) {
    if (!path.empty()) return load_engine_config(path);
    EngineConfig cfg;
    cfg.tech = TechParams::defaults();
    return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path.string() + ": cannot write file");
    out << text;
    if (!out) throw ConfigError(path.string() + ": write failed");
}

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

std::pair<std::size_t, std::size_t> parse_grid_shape(const std::string& text) {
    const auto x = text.find_first_of("xX");
    std::size_t a = 0, b = 0;
    try {
        if (x == std::string::npos) throw std::invalid_argument(text);
        std::size_t used = 0;
        a = std::stoul(text.substr(0, x), &used);
        if (used != x) throw std::invalid_argument(text);
        b = std::stoul(text.substr(x + 1), &used);
        if (used != text.size() - x - 1) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw ConfigError("--grid expects AxB, e.g. 3x2; got '" + text + "'");
    }
    return {a, b};
}

int cmd_stats(const std::string& workload) {
    const auto g = load_workload(workload);
    const auto s = tensor_stats(g);
    std::printf("%-24s %12s %10s %10s %7s\n", "workload", "Weight(MB)", "Act(MB)", "GFLOPs", "nodes");
    std::printf("%-24s %12.2f %10.2f %10.2f %7zu\n", g.name().c_str(), s.weight_mb, s.act_mb, s.gflops,
                g.nodes().size());
    return 0;
}

struct SweepArgs {
    std::string workload;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string grid;
    bool trace = false;
};

int cmd_sweep(const SweepArgs& a) {
    auto cfg = config_or_defaults(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (a.workers) cfg.workers = *a.workers;
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (a.trace) cfg.emit_trace = true;
    if (!a.grid.empty()) {
        const auto [n_l1, n_llc] = parse_grid_shape(a.grid);
        cfg.grid = cfg.grid.truncated(n_l1, n_llc);
    }
    const auto g = load_workload(a.workload);
    const auto options = cfg.sweep_options();
    const auto points = run_sweep(g, cfg.grid, options, cfg.tech);

    const fs::path out = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError(out.string() + ": cannot create directory: " + ec.message());

    write_file(out / "heatmap.csv", render([&](std::ostream& os) { write_heatmap_csv(points, cfg.grid, os); }));
    write_file(out / "breakdown.csv", render([&](std::ostream& os) { write_breakdown_csv(points, os); }));
    write_file(out / "pareto.csv", render([&](std::ostream& os) { write_pareto_csv(points, cfg.grid, os); }));
    write_file(out / "regime.txt",
               render([&](std::ostream& os) { write_regime_txt(points, cfg.grid, cfg.regime, g.name(), os); }));
    const auto summary = render([&](std::ostream& os) { write_summary(points, cfg.grid, g.name(), os); });
    write_file(out / "summary.txt", summary);
    if (cfg.emit_roofline_total)
        write_file(out / "roofline.csv", render([&](std::ostream& os) { write_roofline_csv(points, os); }));
    if (cfg.emit_trace) {
        const auto prepared = prepare_workload(g, options.policy);
        const auto intervals = live_intervals(prepared.graph, prepared.schedule);
        for (auto llc : cfg.grid.llc_points) {
            const auto trace = simulate_residency(prepared.graph, prepared.schedule, intervals, llc);
            write_file(out / ("trace_llc_" + format_capacity(llc) + ".csv"),
                       render([&](std::ostream& os) { write_trace_csv(trace, os); }));
        }
    }
    std::cout << summary;
    std::cout << "regime: " << to_string(classify_regime(points, cfg.grid, cfg.regime).label) << '\n';
    std::cout << "wrote " << points.size() << " points to " << out.string() << '\n';
    return 0;
}

int cmd_map(const std::string& workload, const std::string& l1_text, const std::string& llc_text,
            const std::string& config, std::optional<std::uint64_t> seed) {
    auto cfg = config_or_defaults(config);
    if (seed) cfg.seed = *seed;
    const auto l1 = parse_capacity(l1_text);
    const auto llc = parse_capacity(llc_text);
    const auto g = load_workload(workload);
    const auto options = cfg.sweep_options();
    const auto prepared = prepare_workload(g, options.policy);
    const auto decisions = map_layers(prepared, l1, options.policy, options.annealing, options.weights, options.seed);

    std::printf("%-28s %-4s %-26s %s\n", "node", "mode", "tile", "fused_into");
    for (const auto& d : decisions) {
        std::string tile = "-";
        if (d.tiling) {
            tile = std::visit(
                [](const auto& t) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, ConvTile>)
                        return "ci=" + std::to_string(t.c_in) + " co=" + std::to_string(t.c_out) +
                               " h=" + std::to_string(t.h_out) + " w=" + std::to_string(t.w_out);
                    else
                        return "m=" + std::to_string(t.m) + " n=" + std::to_string(t.n) + " k=" + std::to_string(t.k);
                },
                *d.tiling);
        }
        std::printf("%-28s %-4s %-26s %s\n", d.node_id.c_str(), std::string(to_string(d.stationary)).c_str(),
                    tile.c_str(), d.fused_into.value_or("-").c_str());
    }
    const auto p = evaluate_config(g, l1, llc, options, cfg.tech);
    std::cout << "total_energy " << format_number(p.energy.total) << " J\n"
              << "e_dram " << format_number(p.energy.e_dram) << " J\n"
              << "dram_bytes " << p.traffic.dram_read + p.traffic.dram_write << '\n'
              << "t_mem " << format_number(p.latency.t_mem) << " s\n";
    return 0;
}

int cmd_gen(const std::string& family, std::uint64_t seed, const std::string& out,
            const std::vector<std::string>& params) {
    SyntheticFamilySpec spec;
    spec.family = family;
    spec.seed = seed;
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
        std::int64_t value = 0;
        try {
            std::size_t used = 0;
            value = std::stoll(kv.substr(eq + 1), &used);
            if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
        } catch (const std::exception&) {
            throw ConfigError("--param value must be an integer: '" + kv + "'");
        }
        spec.params[kv.substr(0, eq)] = value;
    }
    const auto text = serialize_workload(generate_workload(spec));
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    return 0;
}

int cmd_pareto(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::vector<HeatmapRow> rows;
    try {
        rows = read_heatmap_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line(), e.column());
    }
    std::vector<Objective> obj;
    for (const auto& r : rows) obj.push_back({r.total_energy, r.t_mem});
    std::cout << "l1,llc,total_energy,normalized_energy,t_mem,normalized_latency\n";
    for (auto i : pareto_indices(obj)) {
        const auto& r = rows[i];
        std::cout << r.l1 << ',' << r.llc << ',' << format_number(r.total_energy) << ','
                  << format_number(r.normalized_energy) << ',' << format_number(r.t_mem) << ','
                  << format_number(r.normalized_latency) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memory-hierarchy design-space exploration for DNN workloads"};
    app.require_subcommand(1);

    std::string workload, config, out, grid, l1, llc, family, heatmap;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    bool trace = false;
    std::vector<std::string> params;

    auto* stats = app.add_subcommand("stats", "Print weight/activation footprint and GFLOPs");
    stats->add_option("workload", workload, "Workload JSON")->required();

    auto* sweep = app.add_subcommand("sweep", "Sweep the L1 x LLC grid and write reports");
    sweep->add_option("workload", workload, "Workload JSON")->required();
    sweep->add_option("--config", config, "Engine config JSON (defaults when omitted)");
    sweep->add_option("--out", out, "Output directory");
    auto* sweep_seed = sweep->add_option("--seed", seed, "Global seed");
    auto* sweep_workers = sweep->add_option("--workers", workers, "Worker threads (0 = all cores)");
    sweep->add_option("--grid", grid, "Use the first A L1 and B LLC points, e.g. 3x2");
    sweep->add_flag("--trace", trace, "Write residency traces");

    auto* map = app.add_subcommand("map", "Show per-layer mapping for one configuration");
    map->add_option("workload", workload, "Workload JSON")->required();
    map->add_option("--l1", l1, "L1 capacity, e.g. 32KB")->required();
    map->add_option("--llc", llc, "LLC capacity, e.g. 16MB")->required();
    map->add_option("--config", config, "Engine config JSON (defaults when omitted)");
    auto* map_seed = map->add_option("--seed", seed, "Global seed");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic workload");
    gen->add_option("--family", family, "Workload family")->required();
    gen->add_option("--seed", seed, "Generator seed");
    gen->add_option("--out", out, "Output file (stdout when omitted)");
    gen->add_option("--param,-p", params, "Family parameter key=value (repeatable)");

    auto* pareto = app.add_subcommand("pareto", "Print the Pareto front of a heatmap CSV");
    pareto->add_option("heatmap", heatmap, "heatmap.csv from a sweep")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*stats) return cmd_stats(workload);
        if (*sweep) {
            SweepArgs a{workload, config, out, std::nullopt, std::nullopt, grid, trace};
            if (*sweep_seed) a.seed = seed;
            if (*sweep_workers) a.workers = workers;
            return cmd_sweep(a);
        }
        if (*map) return cmd_map(workload, l1, llc, config, *map_seed ? std::optional(seed) : std::nullopt);
        if (*gen) return cmd_gen(family, seed, out, params);
        if (*pareto) return cmd_pareto(heatmap);
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
