#include "memdse/mapper.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "memdse/costmodel.hpp"
#include "memdse/rng.hpp"

namespace memdse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Intermediate `t` of producer `p` can be fused into its sole consumer.
std::optional<std::size_t> fusable_consumer(const WorkloadGraph& g, const OperatorNode& p) {
    if (p.outputs.size() != 1) return std::nullopt;
    const auto& t = g.tensor(p.outputs[0]);
    if (t.kind != TensorKind::Activation) return std::nullopt;
    const auto consumers = g.consumers(t.id);
    if (consumers.size() != 1) return std::nullopt;
    const auto& c = g.nodes()[consumers[0]];
    if (c.op_class != OpClass::Activation || c.inputs.size() != 1 || c.outputs.size() != 1) return std::nullopt;
    const auto& out = g.tensor(c.outputs[0]);
    if (out.dims != t.dims || out.element_bytes != t.element_bytes) return std::nullopt;
    return consumers[0];
}

double weighted(const CostTerms& c, const TileCostWeights& w) {
    return w.alpha * c.compute + w.beta * c.bytes + w.gamma * c.tiles;
}

template <std::size_t N>
using State = std::array<std::int64_t, N>;

struct ConvCodec {
    static constexpr std::size_t N = 4;
    static State<N> extents(const LayerShape& s) {
        const auto& c = std::get<ConvShape>(s);
        return {c.attrs.c_in, c.attrs.c_out, c.h_out, c.w_out};
    }
    static TilingConfig to_tile(const State<N>& x) { return ConvTile{x[0], x[1], x[2], x[3]}; }
};

struct GemmCodec {
    static constexpr std::size_t N = 3;
    static State<N> extents(const LayerShape& s) {
        const auto& a = std::get<GemmShape>(s).attrs;
        return {a.m, a.n, a.k};
    }
    static TilingConfig to_tile(const State<N>& x) { return GemmTile{x[0], x[1], x[2]}; }
};

template <class Codec>
AnnealResult anneal(const LayerShape& shape, Stationary stationary, std::int64_t l1_eff, const AnnealingParams& sa,
                     const TileCostWeights& weights) {
    constexpr std::size_t N = Codec::N;
    const auto extent = Codec::extents(shape);

    auto feasible = [&](const State<N>& x) { return tile_footprint(Codec::to_tile(x), shape, l1_eff).feasible; };

    State<N> ones;
    ones.fill(1);
    if (!feasible(ones)) {
        throw NoFeasibleTiling("no feasible tiling: minimal tile needs " +
                               std::to_string(tile_footprint(Codec::to_tile(ones), shape, l1_eff).bytes_total) +
                               " B, L1_eff is " + std::to_string(l1_eff) + " B");
    }

    // Shrink from the full layer: halve the largest blocking factor until it fits.
    State<N> x = extent;
    while (!feasible(x)) {
        std::size_t d = 0;
        for (std::size_t i = 1; i < N; ++i)
            if (x[i] > x[d]) d = i;
        x[d] = ceil_div(x[d], 2);
    }

    AnnealResult result;
    result.initial = Codec::to_tile(x);
    result.effective_weights = weights;
    const auto terms0 = tile_cost_terms(result.initial, shape, stationary);
    if (weights.normalize) {
        auto& w = result.effective_weights;
        if (terms0.compute > 0) w.alpha /= terms0.compute;
        if (terms0.bytes > 0) w.beta /= terms0.bytes;
        if (terms0.tiles > 0) w.gamma /= terms0.tiles;
    }
    const auto& w = result.effective_weights;
    auto cost = [&](const State<N>& y) {
        return feasible(y) ? weighted(tile_cost_terms(Codec::to_tile(y), shape, stationary), w) : kInf;
    };

    std::array<std::uint64_t, N> ladder_len{};
    for (std::size_t d = 0; d < N; ++d) {
        const auto ratio = static_cast<std::uint64_t>(std::max<std::int64_t>(1, extent[d] / sa.delta));
        ladder_len[d] = static_cast<std::uint64_t>(std::bit_width(ratio));
    }

    Rng rng(sa.seed);
    double f = cost(x);
    State<N> best = x;
    double best_f = f;

    double temp = sa.t0_factor * f;
    const double t_min = sa.t_min_factor * temp;
    std::int64_t moves = 0;
    while (temp > t_min) {
        for (int i = 0; i < sa.l_iters; ++i) {
            State<N> y = x;
            const auto d = rng.below(N);
            const auto step = sa.delta << rng.below(ladder_len[d]);
            y[d] = rng.coin() ? y[d] + step : y[d] - step;
            y[d] = std::clamp<std::int64_t>(y[d], 1, extent[d]);
            const double g = cost(y);
            const double delta = g - f;
            ++moves;
            if (delta <= 0 || rng.uniform() < std::exp(-delta / temp)) {
                x = y;
                f = g;
                if (f < best_f) {
                    best = x;
                    best_f = f;
                }
            }
        }
        temp *= sa.alpha_t;
    }

    result.tile = Codec::to_tile(best);
    result.cost = best_f;
    result.moves = moves;
    return result;
}

} // namespace

void MapperPolicy::validate(std::int64_t l1_capacity) const {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("mapper: rho must be in (0, 1)");
    if (l1_bookkeeping_bytes < 0) throw ConfigError("mapper: l1_bookkeeping_bytes must be >= 0");
    if (l1_bookkeeping_bytes >= l1_capacity)
        throw ConfigError("mapper: l1_bookkeeping_bytes must be below the L1 capacity (" +
                          std::to_string(l1_capacity) + " B)");
}

Stationary select_stationary(std::int64_t weight_bytes, std::int64_t l1_eff, const MapperPolicy& policy) {
    return static_cast<double>(weight_bytes) < policy.rho * static_cast<double>(l1_eff) ? Stationary::WS
                                                                                         : Stationary::OS;
}

std::string_view to_string(FusionPattern p) {
    return p == FusionPattern::TiledActivation ? "tiled+activation" : "elementwise+activation";
}

FusionResult apply_fusion(const WorkloadGraph& g) {
    std::vector<FusionRecord> records;
    std::vector<std::string> tile_local;
    for (const auto& p : g.nodes()) {
        FusionPattern pattern;
        if (p.op_class == OpClass::Conv || p.op_class == OpClass::Gemm)
            pattern = FusionPattern::TiledActivation;
        else if (p.op_class == OpClass::Elementwise)
            pattern = FusionPattern::ElementwiseActivation;
        else
            continue;
        const auto c = fusable_consumer(g, p);
        if (!c) continue;
        records.push_back({p.id, g.nodes()[*c].id, p.outputs[0], pattern});
        tile_local.push_back(p.outputs[0]);
    }
    return {g.with_tile_local(tile_local), std::move(records)};
}

CostTerms tile_cost_terms(const TilingConfig& tile, const LayerShape& shape, Stationary stationary) {
    CostTerms c;
    c.compute = static_cast<double>(std::visit([](const auto& s) { return s.flops(); }, shape));
    const auto traffic = layer_l1_traffic(shape, tile, stationary);
    c.bytes = static_cast<double>(traffic.read() + traffic.write());
    c.tiles = static_cast<double>(tile_count(tile, shape));
    return c;
}

double tile_cost(const TilingConfig& tile, const LayerShape& shape, Stationary stationary, std::int64_t l1_eff,
                 const TileCostWeights& weights) {
    if (!tile_footprint(tile, shape, l1_eff).feasible) return kInf;
    return weighted(tile_cost_terms(tile, shape, stationary), weights);
}

void AnnealingParams::validate() const {
    if (!(t0_factor > 0)) throw ConfigError("annealing: t0_factor must be > 0");
    if (!(t_min_factor > 0 && t_min_factor < 1)) throw ConfigError("annealing: t_min_factor must be in (0, 1)");
    if (!(alpha_t > 0 && alpha_t < 1)) throw ConfigError("annealing: alpha_t must be in (0, 1)");
    if (l_iters < 1) throw ConfigError("annealing: l_iters must be >= 1");
    if (delta < 1) throw ConfigError("annealing: delta must be >= 1");
}

AnnealResult anneal_tiling_detailed(const LayerShape& shape, Stationary stationary, std::int64_t l1_eff,
                                    const AnnealingParams& sa, const TileCostWeights& weights) {
    if (std::holds_alternative<ConvShape>(shape)) return anneal<ConvCodec>(shape, stationary, l1_eff, sa, weights);
    return anneal<GemmCodec>(shape, stationary, l1_eff, sa, weights);
}

TilingConfig anneal_tiling(const LayerShape& shape, Stationary stationary, std::int64_t l1_eff,
                           const AnnealingParams& sa, const TileCostWeights& weights) {
    return anneal_tiling_detailed(shape, stationary, l1_eff, sa, weights).tile;
}

PreparedWorkload prepare_workload(const WorkloadGraph& g, const MapperPolicy& policy) {
    if (!policy.fusion_enabled) return {g, {}, topological_order(g)};
    auto fused = apply_fusion(g);
    auto schedule = topological_order(fused.graph);
    return {std::move(fused.graph), std::move(fused.records), std::move(schedule)};
}

std::vector<MappingDecision> map_layers(const PreparedWorkload& prepared, std::int64_t l1_capacity,
                                        const MapperPolicy& policy, const AnnealingParams& sa,
                                        const TileCostWeights& weights, std::uint64_t global_seed) {
    policy.validate(l1_capacity);
    sa.validate();
    const auto& g = prepared.graph;
    const auto l1_eff = policy.l1_eff(l1_capacity);

    std::map<std::string, std::string> fused_into;
    for (const auto& r : prepared.fusions) fused_into[r.producer] = r.consumer;

    std::vector<MappingDecision> decisions;
    decisions.reserve(g.nodes().size());
    for (const auto& node : g.nodes()) {
        MappingDecision d;
        d.node_id = node.id;
        if (auto it = fused_into.find(node.id); it != fused_into.end()) d.fused_into = it->second;
        if (const auto shape = layer_shape(g, node)) {
            const auto weight_bytes = g.tensor(node.inputs[1]).footprint_bytes();
            d.stationary = select_stationary(weight_bytes, l1_eff, policy);
            AnnealingParams layer_sa = sa;
            layer_sa.seed = derive_seed(global_seed, node.id, l1_capacity);
            try {
                d.tiling = anneal_tiling(*shape, d.stationary, l1_eff, layer_sa, weights);
            } catch (const NoFeasibleTiling& e) {
                throw NoFeasibleTiling("layer '" + node.id + "' at L1 " + std::to_string(l1_capacity) + " B: " +
                                       e.what());
            }
        }
        decisions.push_back(std::move(d));
    }
    return decisions;
}

} // namespace memdse
