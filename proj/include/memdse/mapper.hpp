#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memdse/graph_ir.hpp"
#include "memdse/tiling.hpp"

namespace memdse {

struct MapperPolicy {
    double rho = 0.5;                          ///< WS iff B_w < rho * L1_eff
    std::int64_t l1_bookkeeping_bytes = 1024;  ///< reserve subtracted from L1
    bool fusion_enabled = true;

    std::int64_t l1_eff(std::int64_t l1_capacity) const { return l1_capacity - l1_bookkeeping_bytes; }
    void validate(std::int64_t l1_capacity) const;
};

Stationary select_stationary(std::int64_t weight_bytes, std::int64_t l1_eff, const MapperPolicy& policy);

// ---------------------------------------------------------------------------
// Fusion

enum class FusionPattern {
    TiledActivation,        ///< Conv/GEMM -> unary activation
    ElementwiseActivation,  ///< elementwise -> unary activation
};

std::string_view to_string(FusionPattern p);

struct FusionRecord {
    std::string producer;
    std::string consumer;
    std::string intermediate;
    FusionPattern pattern = FusionPattern::TiledActivation;

    bool operator==(const FusionRecord&) const = default;
};

struct FusionResult {
    WorkloadGraph graph;
    std::vector<FusionRecord> records;
};

/// Fuses a producer into its activation when the intermediate has a single
/// consumer, is not a graph output, and keeps its shape. Fused intermediates
/// are marked tile-local; nodes and edges are kept as they are.
FusionResult apply_fusion(const WorkloadGraph& g);

// ---------------------------------------------------------------------------
// Tiling search

struct TileCostWeights {
    double alpha = 1.0;   ///< compute
    double beta = 1.0;    ///< L1-boundary bytes
    double gamma = 0.1;   ///< tile count
    /// Rescale each term to 1.0 at the search's initial feasible state before
    /// applying the weights above.
    bool normalize = true;
};

struct CostTerms {
    double compute = 0.0;
    double bytes = 0.0;
    double tiles = 0.0;
};

CostTerms tile_cost_terms(const TilingConfig& tile, const LayerShape& shape, Stationary stationary);

/// alpha*Compute + beta*Bytes + gamma*N_tiles with the weights taken as given
/// (no normalisation); +inf when the tile does not fit l1_eff.
double tile_cost(const TilingConfig& tile, const LayerShape& shape, Stationary stationary, std::int64_t l1_eff,
                 const TileCostWeights& weights);

struct AnnealingParams {
    double t0_factor = 1e3;      ///< T0 = t0_factor * cost(initial state)
    double t_min_factor = 1e-3;  ///< T_min = t_min_factor * T0
    double alpha_t = 0.9;        ///< cooling factor
    int l_iters = 50;            ///< moves per temperature
    std::int64_t delta = 1;      ///< base step; moves are delta * 2^j along one dimension
    std::uint64_t seed = 0;

    void validate() const;
};

class NoFeasibleTiling : public ModelError {
public:
    using ModelError::ModelError;
};

struct AnnealResult {
    TilingConfig tile;
    double cost = 0.0;              ///< under effective_weights
    TilingConfig initial;
    TileCostWeights effective_weights;
    std::int64_t moves = 0;
};

AnnealResult anneal_tiling_detailed(const LayerShape& shape, Stationary stationary, std::int64_t l1_eff,
                                    const AnnealingParams& sa, const TileCostWeights& weights);

TilingConfig anneal_tiling(const LayerShape& shape, Stationary stationary, std::int64_t l1_eff,
                           const AnnealingParams& sa, const TileCostWeights& weights);

// ---------------------------------------------------------------------------
// Whole-graph mapping

/// Capacity-independent part of the mapping: fusion and schedule.
struct PreparedWorkload {
    WorkloadGraph graph;   ///< after fusion
    std::vector<FusionRecord> fusions;
    Schedule schedule;
};

PreparedWorkload prepare_workload(const WorkloadGraph& g, const MapperPolicy& policy);

/// One decision per node, in graph node order. Each layer's annealing seed is
/// derived from (global_seed, node id, l1_capacity).
std::vector<MappingDecision> map_layers(const PreparedWorkload& prepared, std::int64_t l1_capacity,
                                        const MapperPolicy& policy, const AnnealingParams& sa,
                                        const TileCostWeights& weights, std::uint64_t global_seed);

} // namespace memdse
