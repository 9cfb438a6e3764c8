#include <doctest.h>

#include <limits>

#include "memdse/mapper.hpp"
#include "memdse/rng.hpp"
#include "memdse/synth.hpp"
#include "oracles.hpp"

using namespace memdse;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConvShape conv_shape(std::int64_t cin, std::int64_t cout, std::int64_t h, std::int64_t k, std::int64_t stride,
                     std::int64_t pad) {
    return ConvShape::from_attrs({k, k, stride, pad, cin, cout, h, h});
}

// conv -> act with optional extra consumer / reshape in between.
WorkloadGraph conv_act(bool skip_consumer, bool reshape) {
    std::vector<TensorSpec> ts = {
        {"x", {1, 4, 8, 8}, 4, TensorKind::Input, false},
        {"w", {4, 4, 3, 3}, 4, TensorKind::Weight, false},
        {"c", {1, 4, 8, 8}, 4, TensorKind::Activation, false},
        {"y", {1, 4, 8, 8}, 4, TensorKind::Output, false},
    };
    std::vector<OperatorNode> ns;
    OperatorNode conv{"conv", OpClass::Conv, {"x", "w"}, {"c"},
                      {{"K_h", 3}, {"K_w", 3}, {"stride", 1}, {"pad", 1}, {"C_in", 4}, {"C_out", 4}, {"H_in", 8},
                       {"W_in", 8}}};
    ns.push_back(conv);
    std::string act_in = "c";
    if (reshape) {
        ts.push_back({"r", {1, 4, 8, 8}, 4, TensorKind::Activation, false});
        ns.push_back({"reshape", OpClass::Concat, {"c"}, {"r"}, {}});
        act_in = "r";
    }
    ns.push_back({"relu", OpClass::Activation, {act_in}, {"y"}, {}});
    if (skip_consumer) {
        ts.push_back({"s", {1, 4, 8, 8}, 4, TensorKind::Output, false});
        ns.push_back({"add", OpClass::Elementwise, {"c", "y"}, {"s"}, {}});
    }
    return WorkloadGraph("conv_act", ts, ns);
}

} // namespace

TEST_SUITE("mapper") {

TEST_CASE("stationary selection") {
    MapperPolicy p;
    CHECK(select_stationary(100 << 10, 256 << 10, p) == Stationary::WS);
    CHECK(select_stationary(0, 256 << 10, p) == Stationary::WS);
    CHECK(select_stationary(128 << 10, 256 << 10, p) == Stationary::OS);
    CHECK(p.l1_eff(32 << 10) == 31744);
    CHECK_THROWS_AS(p.validate(1024), ConfigError);
    MapperPolicy bad;
    bad.rho = 1.0;
    CHECK_THROWS_AS(bad.validate(32 << 10), ConfigError);
}

TEST_CASE("fusion patterns") {
    SUBCASE("conv -> relu fuses") {
        const auto r = apply_fusion(conv_act(false, false));
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].producer == "conv");
        CHECK(r.records[0].consumer == "relu");
        CHECK(r.graph.tensor("c").tile_local);
        CHECK(r.graph.nodes().size() == 2);
    }
    SUBCASE("reshape blocks fusion") {
        const auto r = apply_fusion(conv_act(false, true));
        CHECK(r.records.empty());
    }
    SUBCASE("extra consumer blocks fusion") {
        const auto r = apply_fusion(conv_act(true, false));
        CHECK(r.records.empty());
        CHECK_FALSE(r.graph.tensor("c").tile_local);
    }
    SUBCASE("elementwise -> activation fuses") {
        std::vector<TensorSpec> ts = {{"a", {16}, 4, TensorKind::Input, false},
                                      {"b", {16}, 4, TensorKind::Input, false},
                                      {"s", {16}, 4, TensorKind::Activation, false},
                                      {"y", {16}, 4, TensorKind::Output, false}};
        std::vector<OperatorNode> ns = {{"add", OpClass::Elementwise, {"a", "b"}, {"s"}, {}},
                                        {"relu", OpClass::Activation, {"s"}, {"y"}, {}}};
        const auto r = apply_fusion(WorkloadGraph("ew", ts, ns));
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].pattern == FusionPattern::ElementwiseActivation);
    }
}

TEST_CASE("induced input tile") {
    const ConvAttrs a{3, 3, 1, 0, 16, 16, 64, 64};
    CHECK(induced_input_tile(ConvTile{1, 1, 8, 8}, a).h == 10);
    const ConvAttrs id{1, 1, 1, 0, 4, 4, 20, 20};
    CHECK(induced_input_tile(ConvTile{1, 1, 20, 20}, id).h == 20);
    const ConvAttrs big{7, 7, 2, 3, 3, 8, 32, 32};
    CHECK(induced_input_tile(ConvTile{1, 1, 16, 16}, big).h == 32);
}

TEST_CASE("tile footprint") {
    const ConvAttrs a{3, 3, 1, 0, 16, 16, 64, 64};
    const auto r = tile_footprint(ConvTile{16, 16, 8, 8}, a, 4, 32 << 10);
    CHECK(r.s_in == 1600);
    CHECK(r.s_ker == 2304);
    CHECK(r.s_out == 1024);
    CHECK(r.bytes_total == 19712);
    CHECK(r.feasible);
    CHECK_FALSE(tile_footprint(ConvTile{16, 16, 8, 8}, a, 4, 16 << 10).feasible);
    const ConvAttrs one{1, 1, 1, 0, 4, 4, 4, 4};
    CHECK(tile_footprint(ConvTile{1, 1, 1, 1}, one, 4, 12).feasible);
    CHECK_FALSE(tile_footprint(ConvTile{1, 1, 1, 1}, one, 4, 11).feasible);
}

TEST_CASE("tile cost") {
    const auto shape = LayerShape{conv_shape(8, 64, 16, 3, 1, 1)};
    const TileCostWeights tiles_only{0, 0, 1, false};
    CHECK(tile_cost(ConvTile{8, 64, 16, 16}, shape, Stationary::WS, 1 << 30, tiles_only) == 1.0);
    CHECK(tile_cost(ConvTile{8, 16, 16, 16}, shape, Stationary::WS, 1 << 30, tiles_only) == 4.0);
    CHECK(tile_cost(ConvTile{8, 64, 16, 16}, shape, Stationary::WS, 1024, tiles_only) == kInf);
}

TEST_CASE("annealing") {
    AnnealingParams sa;
    sa.seed = 11;
    SUBCASE("whole layer fits -> full tile") {
        const auto shape = LayerShape{conv_shape(4, 4, 8, 3, 1, 1)};
        CHECK(anneal_tiling(shape, Stationary::WS, 1 << 20, sa, {}) == full_tile(shape));
    }
    SUBCASE("11 bytes is infeasible") {
        const auto shape = LayerShape{conv_shape(4, 4, 8, 1, 1, 0)};
        CHECK_THROWS_AS(anneal_tiling(shape, Stationary::WS, 11, sa, {}), NoFeasibleTiling);
        CHECK_NOTHROW(anneal_tiling(shape, Stationary::WS, 12, sa, {}));
    }
    SUBCASE("deterministic for a seed") {
        const auto shape = LayerShape{conv_shape(64, 64, 56, 3, 1, 1)};
        const auto a = anneal_tiling_detailed(shape, Stationary::OS, 31744, sa, {});
        const auto b = anneal_tiling_detailed(shape, Stationary::OS, 31744, sa, {});
        CHECK(a.tile == b.tile);
        CHECK(a.cost == b.cost);
        CHECK(a.moves > 0);
    }
    SUBCASE("result never beats the exhaustive optimum and is feasible") {
        Rng rng(5);
        for (int i = 0; i < 20; ++i) {
            const auto k = 1 + 2 * static_cast<std::int64_t>(rng.below(2));
            const auto shape = LayerShape{conv_shape(1 + static_cast<std::int64_t>(rng.below(8)),
                                                     1 + static_cast<std::int64_t>(rng.below(8)),
                                                     k + static_cast<std::int64_t>(rng.below(8)), k, 1, k / 2)};
            const std::int64_t l1 = 200 + static_cast<std::int64_t>(rng.below(4000));
            sa.seed = rng.next();
            AnnealResult r;
            try {
                r = anneal_tiling_detailed(shape, Stationary::WS, l1, sa, {});
            } catch (const NoFeasibleTiling&) {
                continue;
            }
            CHECK(tile_footprint(r.tile, shape, l1).feasible);
            const auto ex = oracle::exhaustive_tiling(shape, Stationary::WS, l1, r.effective_weights);
            CHECK(r.cost >= ex.best - 1e-12);
        }
    }
    SUBCASE("gemm") {
        const auto shape = LayerShape{GemmShape{{256, 256, 256}, 4}};
        const auto r = anneal_tiling_detailed(shape, Stationary::OS, 31744, sa, {});
        CHECK(tile_footprint(r.tile, shape, 31744).feasible);
    }
    SUBCASE("parameter validation") {
        AnnealingParams bad;
        bad.alpha_t = 1.0;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("map_layers") {
    const auto g = generate_workload({"encoder_decoder_cnn", {{"width", 32}}, 0});
    const auto prepared = prepare_workload(g, {});
    CHECK_FALSE(prepared.fusions.empty());
    const auto d1 = map_layers(prepared, 32 << 10, {}, {}, {}, 42);
    const auto d2 = map_layers(prepared, 32 << 10, {}, {}, {}, 42);
    REQUIRE(d1.size() == g.nodes().size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        CHECK(d1[i].tiling == d2[i].tiling);
        const auto& n = prepared.graph.nodes()[i];
        const bool tiled = n.op_class == OpClass::Conv || n.op_class == OpClass::Gemm;
        CHECK(d1[i].tiling.has_value() == tiled);
        if (tiled) CHECK(tile_footprint(*d1[i].tiling, *layer_shape(prepared.graph, n), 31744).feasible);
    }
}

} // TEST_SUITE
