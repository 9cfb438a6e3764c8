#include "memdse/costmodel.hpp"

#include <algorithm>
#include <set>

namespace memdse {

namespace {

constexpr double kPico = 1e-12;

void check_level(const LevelParams& p, const char* name) {
    if (p.read_pj_per_byte < 0 || p.write_pj_per_byte < 0 || p.leakage_pw_per_byte < 0)
        throw ConfigError(std::string("tech: ") + name + " coefficients must be >= 0");
    if (!(p.bandwidth_bytes_per_s > 0)) throw ConfigError(std::string("tech: ") + name + " bandwidth must be > 0");
}

// Sum of induced input extents over the output blocks of one spatial axis.
std::int64_t halo_sum(std::int64_t out_extent, std::int64_t tile, std::int64_t in_extent, std::int64_t stride,
                      std::int64_t kernel, std::int64_t pad) {
    auto induced = [&](std::int64_t t) { return std::min(in_extent, stride * (t - 1) + kernel + 2 * pad); };
    const auto full = out_extent / tile;
    const auto rem = out_extent % tile;
    return full * induced(tile) + (rem > 0 ? induced(rem) : 0);
}

double energy_of(std::int64_t read, std::int64_t write, const LevelParams& p) {
    return (static_cast<double>(read) * p.read_pj_per_byte + static_cast<double>(write) * p.write_pj_per_byte) * kPico;
}

} // namespace

TechParams TechParams::defaults() {
    TechParams t;
    t.l1 = {0.8, 1.0, 128.0e9, 2000.0};
    t.llc = {4.0, 4.5, 64.0e9, 1000.0};
    t.dram = {120.0, 130.0, 25.6e9, 20.0};
    t.compute.lanes = 16;
    t.compute.clock_hz = 1.0e9;
    t.compute.ops_per_lane_per_cycle = 2.0;
    t.compute.pj_per_op = {
        {OpClass::Conv, 0.6},       {OpClass::Gemm, 0.6},   {OpClass::Elementwise, 0.8},
        {OpClass::Activation, 0.8}, {OpClass::Transform, 1.5}, {OpClass::Reduce, 0.8},
        {OpClass::Softmax, 1.5},    {OpClass::Concat, 0.0}, {OpClass::DataMovement, 0.0},
    };
    t.dram_capacity_bytes = std::int64_t{8} << 30;
    return t;
}

void TechParams::validate() const {
    check_level(l1, "l1");
    check_level(llc, "llc");
    check_level(dram, "dram");
    if (compute.lanes < 1) throw ConfigError("tech: lanes must be >= 1");
    if (!(compute.clock_hz > 0) || !(compute.ops_per_lane_per_cycle > 0))
        throw ConfigError("tech: clock and ops per cycle must be > 0");
    for (const auto& [op, pj] : compute.pj_per_op)
        if (pj < 0) throw ConfigError("tech: pj_per_op must be >= 0");
    if (dram_capacity_bytes <= 0) throw ConfigError("tech: dram_capacity_bytes must be > 0");
}

LayerTraffic layer_l1_traffic(const LayerShape& shape, const TilingConfig& tiling, Stationary stationary) {
    LayerTraffic t;
    const bool ws = stationary == Stationary::WS;
    if (const auto* conv = std::get_if<ConvShape>(&shape)) {
        const auto& a = conv->attrs;
        const auto& tile = std::get<ConvTile>(tiling);
        const std::int64_t e = conv->element_bytes;
        const auto n_ci = ceil_div(a.c_in, tile.c_in);
        const auto n_co = ceil_div(a.c_out, tile.c_out);
        const auto n_sp = ceil_div(conv->h_out, tile.h_out) * ceil_div(conv->w_out, tile.w_out);
        const auto rows = halo_sum(conv->h_out, tile.h_out, a.h_in, a.stride, a.k_h, a.pad);
        const auto cols = halo_sum(conv->w_out, tile.w_out, a.w_in, a.stride, a.k_w, a.pad);
        const auto weights = a.c_in * a.c_out * a.k_h * a.k_w * e;
        const auto outputs = a.c_out * conv->h_out * conv->w_out * e;

        t.input_bytes = n_co * a.c_in * rows * cols * e;
        t.weight_bytes = ws ? weights : weights * n_sp;
        t.output_write_bytes = ws ? n_ci * outputs : outputs;
        t.output_read_bytes = ws ? (n_ci - 1) * outputs : 0;
        return t;
    }
    const auto& gemm = std::get<GemmShape>(shape);
    const auto& a = gemm.attrs;
    const auto& tile = std::get<GemmTile>(tiling);
    const std::int64_t e = gemm.element_bytes;
    const auto n_m = ceil_div(a.m, tile.m);
    const auto n_n = ceil_div(a.n, tile.n);
    const auto n_k = ceil_div(a.k, tile.k);
    const auto b_bytes = a.k * a.n * e;
    const auto outputs = a.m * a.n * e;

    t.input_bytes = n_n * a.m * a.k * e;
    t.weight_bytes = ws ? b_bytes : b_bytes * n_m;
    t.output_write_bytes = ws ? n_k * outputs : outputs;
    t.output_read_bytes = ws ? (n_k - 1) * outputs : 0;
    return t;
}

LayerTraffic node_l1_traffic(const WorkloadGraph& g, const OperatorNode& node, const MappingDecision& decision) {
    if (decision.tiling) {
        const auto shape = layer_shape(g, node);
        if (!shape) throw ModelError("node '" + node.id + "' has a tiling but is not a Conv/GEMM");
        return layer_l1_traffic(*shape, *decision.tiling, decision.stationary);
    }

    LayerTraffic t;
    bool behind_tiled_producer = false;
    std::set<std::string> seen;
    for (const auto& tid : node.inputs) {
        if (!seen.insert(tid).second) continue;
        const auto& spec = g.tensor(tid);
        if (spec.tile_local) {
            if (auto p = g.producer(tid)) {
                const auto op = g.nodes()[*p].op_class;
                behind_tiled_producer |= op == OpClass::Conv || op == OpClass::Gemm;
            }
            continue;
        }
        t.input_bytes += spec.footprint_bytes();
    }
    if (!behind_tiled_producer) {
        for (const auto& tid : node.outputs) {
            const auto& spec = g.tensor(tid);
            if (!spec.tile_local) t.output_write_bytes += spec.footprint_bytes();
        }
    }
    return t;
}

FlopsByClass flops_by_class(const WorkloadGraph& g) {
    FlopsByClass out;
    for (const auto& n : g.nodes()) out[n.op_class] += n.flops;
    return out;
}

EnergyBreakdown energy(const TrafficBreakdown& traffic, const FlopsByClass& flops, const TechParams& tech,
                       double t_mem, std::int64_t l1_capacity, std::int64_t llc_capacity) {
    EnergyBreakdown e;
    e.e_l1 = energy_of(traffic.l1_read, traffic.l1_write, tech.l1);
    e.e_llc = energy_of(traffic.llc_read, traffic.llc_write, tech.llc);
    e.e_dram = energy_of(traffic.dram_read, traffic.dram_write, tech.dram);
    for (const auto& [op, count] : flops) {
        auto it = tech.compute.pj_per_op.find(op);
        if (it != tech.compute.pj_per_op.end()) e.e_core += static_cast<double>(count) * it->second * kPico;
    }
    const double static_pw = tech.l1.leakage_pw_per_byte * static_cast<double>(l1_capacity) +
                             tech.llc.leakage_pw_per_byte * static_cast<double>(llc_capacity) +
                             tech.dram.leakage_pw_per_byte * static_cast<double>(tech.dram_capacity_bytes);
    e.e_leakage = static_pw * kPico * t_mem;
    e.total = e.e_l1 + e.e_llc + e.e_dram + e.e_core + e.e_leakage;
    return e;
}

LatencyProxy latency_proxy(const TrafficBreakdown& traffic, const TechParams& tech) {
    LatencyProxy l;
    l.t_l1 = static_cast<double>(traffic.l1_read + traffic.l1_write) / tech.l1.bandwidth_bytes_per_s;
    l.t_llc = static_cast<double>(traffic.llc_read + traffic.llc_write) / tech.llc.bandwidth_bytes_per_s;
    l.t_dram = static_cast<double>(traffic.dram_read + traffic.dram_write) / tech.dram.bandwidth_bytes_per_s;
    l.t_mem = std::max({l.t_l1, l.t_llc, l.t_dram});
    return l;
}

double compute_time(const FlopsByClass& flops, const TechParams& tech) {
    std::int64_t ops = 0;
    for (const auto& [op, count] : flops) ops += count;
    const double rate = tech.compute.lanes * tech.compute.clock_hz * tech.compute.ops_per_lane_per_cycle;
    return static_cast<double>(ops) / rate;
}

} // namespace memdse
