#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include "memdse/graph_ir.hpp"

namespace memdse {

enum class Stationary { WS, OS, NotApplicable };

std::string_view to_string(Stationary s);

/// Blocking factors for a Conv layer. Each extent is in [1, layer extent].
struct ConvTile {
    std::int64_t c_in = 1;
    std::int64_t c_out = 1;
    std::int64_t h_out = 1;
    std::int64_t w_out = 1;

    bool operator==(const ConvTile&) const = default;
};

/// Blocking factors for C[M,N] = A[M,K] * B[K,N].
struct GemmTile {
    std::int64_t m = 1;
    std::int64_t n = 1;
    std::int64_t k = 1;

    bool operator==(const GemmTile&) const = default;
};

using TilingConfig = std::variant<ConvTile, GemmTile>;

struct ConvShape {
    ConvAttrs attrs;
    std::int64_t h_out = 1;
    std::int64_t w_out = 1;
    int element_bytes = 4;

    static ConvShape from_attrs(const ConvAttrs& attrs, int element_bytes = 4);
    std::int64_t flops() const;
};

struct GemmShape {
    GemmAttrs attrs;
    int element_bytes = 4;

    std::int64_t flops() const { return 2 * attrs.m * attrs.n * attrs.k; }
};

using LayerShape = std::variant<ConvShape, GemmShape>;

/// Shape of a Conv/GEMM node; nullopt for streamed operator classes.
std::optional<LayerShape> layer_shape(const WorkloadGraph& g, const OperatorNode& node);

struct InputTile {
    std::int64_t h = 0;
    std::int64_t w = 0;

    bool operator==(const InputTile&) const = default;
};

/// min(H_in, stride*(h_out_t - 1) + K_h + 2*pad), and likewise along W.
InputTile induced_input_tile(const ConvTile& tile, const ConvAttrs& attrs);

struct FeasibilityReport {
    std::int64_t s_in = 0;    ///< input (or A) tile elements
    std::int64_t s_ker = 0;   ///< weight (or B) tile elements
    std::int64_t s_out = 0;   ///< output/PSUM tile elements
    std::int64_t bytes_total = 0;
    bool feasible = false;
    std::int64_t h_in_tile = 0;   ///< 0 for GEMM
    std::int64_t w_in_tile = 0;   ///< 0 for GEMM
};

FeasibilityReport tile_footprint(const ConvTile& tile, const ConvAttrs& attrs, int element_bytes, std::int64_t l1_eff);
FeasibilityReport tile_footprint(const GemmTile& tile, const GemmAttrs& attrs, int element_bytes, std::int64_t l1_eff);
FeasibilityReport tile_footprint(const TilingConfig& tile, const LayerShape& shape, std::int64_t l1_eff);

/// Product of ceil(extent / tile) over every blocked dimension.
std::int64_t tile_count(const TilingConfig& tile, const LayerShape& shape);

/// The single tile covering the whole layer.
TilingConfig full_tile(const LayerShape& shape);
/// The all-ones tile.
TilingConfig minimal_tile(const LayerShape& shape);

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

} // namespace memdse

namespace memdse {

/// Per-node mapping outcome. Conv/GEMM nodes carry a stationary choice and a
/// tiling; every other node is streamed.
struct MappingDecision {
    std::string node_id;
    Stationary stationary = Stationary::NotApplicable;
    std::optional<TilingConfig> tiling;
    /// Consumer node this node was fused with, if any.
    std::optional<std::string> fused_into;

    bool operator==(const MappingDecision&) const = default;
};

} // namespace memdse
