#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "memdse/graph_ir.hpp"
#include "memdse/tiling.hpp"

namespace memdse {

struct LevelParams {
    double read_pj_per_byte = 0.0;
    double write_pj_per_byte = 0.0;
    double bandwidth_bytes_per_s = 1.0;
    double leakage_pw_per_byte = 0.0;   ///< static power per byte of capacity

    bool operator==(const LevelParams&) const = default;
};

struct ComputeParams {
    int lanes = 16;
    double clock_hz = 1.0e9;
    double ops_per_lane_per_cycle = 2.0;   ///< FMA counts as two ops
    std::map<OpClass, double> pj_per_op;

    bool operator==(const ComputeParams&) const = default;
};

/// Technology coefficients. Values are representative and user-replaceable.
struct TechParams {
    LevelParams l1;
    LevelParams llc;
    LevelParams dram;
    ComputeParams compute;
    std::int64_t dram_capacity_bytes = std::int64_t{8} << 30;

    /// Built-in defaults; identical to configs/tech_default.json.
    static TechParams defaults();
    void validate() const;

    bool operator==(const TechParams&) const = default;
};

/// L1<->LLC bytes moved by a single operator.
struct LayerTraffic {
    std::int64_t input_bytes = 0;
    std::int64_t weight_bytes = 0;
    std::int64_t output_write_bytes = 0;
    std::int64_t output_read_bytes = 0;   ///< PSUM re-reads

    std::int64_t read() const { return input_bytes + weight_bytes + output_read_bytes; }
    std::int64_t write() const { return output_write_bytes; }
    bool operator==(const LayerTraffic&) const = default;
};

struct TrafficBreakdown {
    std::int64_t l1_read = 0;     ///< LLC -> L1 fills
    std::int64_t l1_write = 0;    ///< L1 -> LLC writes
    std::int64_t llc_read = 0;
    std::int64_t llc_write = 0;
    std::int64_t dram_read = 0;
    std::int64_t dram_write = 0;

    bool operator==(const TrafficBreakdown&) const = default;
};

/// Joules.
struct EnergyBreakdown {
    double e_l1 = 0.0;
    double e_llc = 0.0;
    double e_dram = 0.0;
    double e_core = 0.0;
    double e_leakage = 0.0;
    double total = 0.0;
};

/// Seconds.
struct LatencyProxy {
    double t_l1 = 0.0;
    double t_llc = 0.0;
    double t_dram = 0.0;
    double t_mem = 0.0;
};

using FlopsByClass = std::map<OpClass, std::int64_t>;

/// Reference accounting for a tiled Conv/GEMM layer.
///
/// Conv with n_ci, n_co, n_sp blocks along C_in, C_out and output space:
///   inputs   n_co passes over every input tile, halo included
///   weights  WS: loaded once; OS: every (c_in, c_out, spatial) tile reloads its slice
///   outputs  OS: written once, PSUMs accumulate in L1
///            WS: written per c_in block and re-read between blocks, (2*n_ci - 1) passes
/// GEMM maps K onto C_in, N onto C_out and M onto the spatial axis.
LayerTraffic layer_l1_traffic(const LayerShape& shape, const TilingConfig& tile, Stationary stationary);

/// Node-level L1 traffic, including streamed operators. Tile-local tensors
/// never cross the L1 boundary; an activation fused behind a Conv/GEMM does
/// not re-charge the output the producer already wrote.
LayerTraffic node_l1_traffic(const WorkloadGraph& g, const OperatorNode& node, const MappingDecision& decision);

FlopsByClass flops_by_class(const WorkloadGraph& g);

EnergyBreakdown energy(const TrafficBreakdown& traffic, const FlopsByClass& flops, const TechParams& tech,
                       double t_mem, std::int64_t l1_capacity, std::int64_t llc_capacity);

LatencyProxy latency_proxy(const TrafficBreakdown& traffic, const TechParams& tech);

/// Total ops over the SIMD core's peak op rate. Reported, not part of t_mem.
double compute_time(const FlopsByClass& flops, const TechParams& tech);

} // namespace memdse
