#include "memdse/tiling.hpp"

#include <algorithm>

namespace memdse {

std::string_view to_string(Stationary s) {
    switch (s) {
    case Stationary::WS: return "WS";
    case Stationary::OS: return "OS";
    case Stationary::NotApplicable: return "-";
    }
    return "-";
}

ConvShape ConvShape::from_attrs(const ConvAttrs& attrs, int element_bytes) {
    const auto out = conv_output_dims(attrs);
    return {attrs, out.h, out.w, element_bytes};
}

std::int64_t ConvShape::flops() const {
    return 2 * attrs.c_in * attrs.c_out * attrs.k_h * attrs.k_w * h_out * w_out;
}

std::optional<LayerShape> layer_shape(const WorkloadGraph& g, const OperatorNode& node) {
    if (node.op_class == OpClass::Conv)
        return ConvShape::from_attrs(conv_attrs(node), g.tensor(node.inputs[0]).element_bytes);
    if (node.op_class == OpClass::Gemm)
        return GemmShape{gemm_attrs(node), g.tensor(node.inputs[0]).element_bytes};
    return std::nullopt;
}

InputTile induced_input_tile(const ConvTile& tile, const ConvAttrs& a) {
    return {std::min(a.h_in, a.stride * (tile.h_out - 1) + a.k_h + 2 * a.pad),
            std::min(a.w_in, a.stride * (tile.w_out - 1) + a.k_w + 2 * a.pad)};
}

FeasibilityReport tile_footprint(const ConvTile& tile, const ConvAttrs& a, int element_bytes, std::int64_t l1_eff) {
    FeasibilityReport r;
    const auto in = induced_input_tile(tile, a);
    r.h_in_tile = in.h;
    r.w_in_tile = in.w;
    r.s_in = tile.c_in * in.h * in.w;
    r.s_ker = tile.c_in * tile.c_out * a.k_h * a.k_w;
    r.s_out = tile.c_out * tile.h_out * tile.w_out;
    r.bytes_total = (r.s_in + r.s_ker + r.s_out) * element_bytes;
    r.feasible = r.bytes_total <= l1_eff;
    return r;
}

FeasibilityReport tile_footprint(const GemmTile& tile, const GemmAttrs&, int element_bytes, std::int64_t l1_eff) {
    FeasibilityReport r;
    r.s_in = tile.m * tile.k;
    r.s_ker = tile.k * tile.n;
    r.s_out = tile.m * tile.n;
    r.bytes_total = (r.s_in + r.s_ker + r.s_out) * element_bytes;
    r.feasible = r.bytes_total <= l1_eff;
    return r;
}

FeasibilityReport tile_footprint(const TilingConfig& tile, const LayerShape& shape, std::int64_t l1_eff) {
    if (const auto* conv = std::get_if<ConvShape>(&shape))
        return tile_footprint(std::get<ConvTile>(tile), conv->attrs, conv->element_bytes, l1_eff);
    const auto& gemm = std::get<GemmShape>(shape);
    return tile_footprint(std::get<GemmTile>(tile), gemm.attrs, gemm.element_bytes, l1_eff);
}

std::int64_t tile_count(const TilingConfig& tile, const LayerShape& shape) {
    if (const auto* conv = std::get_if<ConvShape>(&shape)) {
        const auto& t = std::get<ConvTile>(tile);
        return ceil_div(conv->attrs.c_in, t.c_in) * ceil_div(conv->attrs.c_out, t.c_out) *
               ceil_div(conv->h_out, t.h_out) * ceil_div(conv->w_out, t.w_out);
    }
    const auto& a = std::get<GemmShape>(shape).attrs;
    const auto& t = std::get<GemmTile>(tile);
    return ceil_div(a.m, t.m) * ceil_div(a.n, t.n) * ceil_div(a.k, t.k);
}

TilingConfig full_tile(const LayerShape& shape) {
    if (const auto* conv = std::get_if<ConvShape>(&shape))
        return ConvTile{conv->attrs.c_in, conv->attrs.c_out, conv->h_out, conv->w_out};
    const auto& a = std::get<GemmShape>(shape).attrs;
    return GemmTile{a.m, a.n, a.k};
}

TilingConfig minimal_tile(const LayerShape& shape) {
    if (std::holds_alternative<ConvShape>(shape)) return ConvTile{};
    return GemmTile{};
}

} // namespace memdse
