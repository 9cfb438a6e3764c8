#include <doctest.h>

#include "memdse/config.hpp"
#include "memdse/costmodel.hpp"
#include "memdse/rng.hpp"

using namespace memdse;

namespace {

ConvShape conv(std::int64_t cin, std::int64_t cout, std::int64_t h, std::int64_t k, std::int64_t stride,
               std::int64_t pad) {
    return ConvShape::from_attrs({k, k, stride, pad, cin, cout, h, h});
}

// Walks every tile explicitly and sums the bytes each tile pulls in.
LayerTraffic walk_conv(const ConvShape& s, const ConvTile& t, Stationary st) {
    const auto& a = s.attrs;
    const std::int64_t e = s.element_bytes;
    LayerTraffic r;
    std::int64_t spatial_tiles = 0;
    for (std::int64_t co = 0; co < a.c_out; co += t.c_out)
        for (std::int64_t h0 = 0; h0 < s.h_out; h0 += t.h_out)
            for (std::int64_t w0 = 0; w0 < s.w_out; w0 += t.w_out) {
                const auto th = std::min(t.h_out, s.h_out - h0);
                const auto tw = std::min(t.w_out, s.w_out - w0);
                if (co == 0) ++spatial_tiles;
                const auto in = induced_input_tile(ConvTile{1, 1, th, tw}, a);
                for (std::int64_t ci = 0; ci < a.c_in; ci += t.c_in) {
                    const auto tci = std::min(t.c_in, a.c_in - ci);
                    r.input_bytes += tci * in.h * in.w * e;
                }
            }
    const auto weights = a.c_in * a.c_out * a.k_h * a.k_w * e;
    const auto outputs = a.c_out * s.h_out * s.w_out * e;
    const auto n_ci = ceil_div(a.c_in, t.c_in);
    r.weight_bytes = st == Stationary::WS ? weights : weights * spatial_tiles;
    r.output_write_bytes = st == Stationary::WS ? n_ci * outputs : outputs;
    r.output_read_bytes = st == Stationary::WS ? (n_ci - 1) * outputs : 0;
    return r;
}

} // namespace

TEST_SUITE("costmodel") {

TEST_CASE("whole-layer tile reads everything once") {
    const auto s = conv(8, 16, 12, 3, 1, 1);
    const auto t = layer_l1_traffic(s, ConvTile{8, 16, 12, 12}, Stationary::WS);
    CHECK(t.input_bytes == 8 * 12 * 12 * 4);
    CHECK(t.weight_bytes == 8 * 16 * 9 * 4);
    CHECK(t.output_write_bytes == 16 * 12 * 12 * 4);
    CHECK(t.output_read_bytes == 0);
}

TEST_CASE("psum accounting") {
    const auto s = conv(16, 8, 6, 1, 1, 0);
    const std::int64_t out = 8 * 6 * 6 * 4;
    const auto os = layer_l1_traffic(s, ConvTile{4, 8, 6, 6}, Stationary::OS);
    CHECK(os.output_write_bytes + os.output_read_bytes == out);
    const auto ws = layer_l1_traffic(s, ConvTile{4, 8, 6, 6}, Stationary::WS);
    CHECK(ws.output_write_bytes + ws.output_read_bytes == 7 * out);
}

TEST_CASE("conv traffic equals an explicit tile walk") {
    Rng rng(99);
    for (int i = 0; i < 300; ++i) {
        const auto k = 1 + static_cast<std::int64_t>(rng.below(5));
        const auto stride = 1 + static_cast<std::int64_t>(rng.below(3));
        const auto pad = static_cast<std::int64_t>(rng.below(3));
        const auto s = conv(1 + static_cast<std::int64_t>(rng.below(12)), 1 + static_cast<std::int64_t>(rng.below(12)),
                            k + static_cast<std::int64_t>(rng.below(20)), k, stride, pad);
        const ConvTile t{1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.attrs.c_in))),
                         1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.attrs.c_out))),
                         1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.h_out))),
                         1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(s.w_out)))};
        for (auto st : {Stationary::WS, Stationary::OS}) CHECK(layer_l1_traffic(s, t, st) == walk_conv(s, t, st));
    }
}

TEST_CASE("gemm traffic") {
    const GemmShape g{{64, 32, 16}, 4};
    const auto t = layer_l1_traffic(g, GemmTile{16, 8, 4}, Stationary::OS);
    CHECK(t.input_bytes == 4 * 64 * 16 * 4);
    CHECK(t.weight_bytes == 16 * 32 * 4 * 4);
    CHECK(t.output_write_bytes == 64 * 32 * 4);
    const auto w = layer_l1_traffic(g, GemmTile{16, 8, 4}, Stationary::WS);
    CHECK(w.weight_bytes == 16 * 32 * 4);
    CHECK(w.output_write_bytes + w.output_read_bytes == 7 * 64 * 32 * 4);
}

TEST_CASE("energy") {
    TechParams zero;
    zero.l1 = zero.llc = zero.dram = LevelParams{0, 0, 1e9, 0};
    SUBCASE("zero traffic and zero leakage") {
        const auto e = energy({}, {}, zero, 1.0, 1 << 15, 1 << 24);
        CHECK(e.total == 0.0);
    }
    SUBCASE("leakage only") {
        auto t = zero;
        t.llc.leakage_pw_per_byte = 1000.0;
        const auto e = energy({}, {}, t, 2.0, 1 << 15, 1 << 20);
        CHECK(e.total == doctest::Approx(1000.0 * (1 << 20) * 1e-12 * 2.0));
        CHECK(e.total == e.e_leakage);
    }
    SUBCASE("1 GiB DRAM read at 20 pJ/B") {
        auto t = zero;
        t.dram.read_pj_per_byte = 20.0;
        TrafficBreakdown tr;
        tr.dram_read = std::int64_t{1} << 30;
        const auto e = energy(tr, {}, t, 0.0, 0, 0);
        CHECK(e.e_dram == doctest::Approx(0.021474836));
    }
    SUBCASE("core energy per class") {
        const auto e = energy({}, {{OpClass::Conv, 1000000}}, TechParams::defaults(), 0.0, 0, 0);
        CHECK(e.e_core == doctest::Approx(1e6 * 0.6e-12));
    }
}

TEST_CASE("latency proxy") {
    TechParams t = TechParams::defaults();
    t.l1.bandwidth_bytes_per_s = 100e9;
    t.llc.bandwidth_bytes_per_s = 100e9;
    t.dram.bandwidth_bytes_per_s = 25e9;
    TrafficBreakdown tr;
    tr.llc_read = 100'000'000;
    tr.dram_read = 50'000'000;
    auto l = latency_proxy(tr, t);
    CHECK(l.t_mem == doctest::Approx(2e-3));
    tr.dram_read = 0;
    l = latency_proxy(tr, t);
    CHECK(l.t_mem == doctest::Approx(1e-3));
    CHECK(compute_time({{OpClass::Gemm, 32'000'000'000}}, TechParams::defaults()) == doctest::Approx(1.0));
}

TEST_CASE("tech validation") {
    auto t = TechParams::defaults();
    CHECK_NOTHROW(t.validate());
    t.dram.bandwidth_bytes_per_s = 0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("bundled tech file equals the built-in defaults") {
    CHECK(load_tech_params(MEMDSE_SOURCE_DIR "/configs/tech_default.json") == TechParams::defaults());
    CHECK(parse_tech_params(serialize_tech_params(TechParams::defaults())) == TechParams::defaults());
}

} // TEST_SUITE
