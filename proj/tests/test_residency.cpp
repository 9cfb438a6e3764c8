#include <doctest.h>

#include <sstream>

#include "memdse/residency.hpp"
#include "random_graphs.hpp"

using namespace memdse;

namespace {

struct Built {
    WorkloadGraph g;
    Schedule s;
    std::vector<LiveInterval> iv;
};

Built build(std::vector<TensorSpec> ts, std::vector<OperatorNode> ns) {
    WorkloadGraph g("t", std::move(ts), std::move(ns));
    auto s = topological_order(g);
    auto iv = live_intervals(g, s);
    return {std::move(g), std::move(s), std::move(iv)};
}

const LiveInterval& interval(const Built& b, const std::string& id) {
    for (const auto& iv : b.iv)
        if (iv.tensor_id == id) return iv;
    throw std::runtime_error("missing interval " + id);
}

TensorSpec t(const std::string& id, std::int64_t kb, TensorKind kind) { return {id, {kb * 256}, 4, kind, false}; }

// a: x -> t1 ; b: t1 -> t2 ; c: t2 -> y, all in 1 KB tensors, w unused.
Built chain3() {
    return build({t("x", 1, TensorKind::Input), t("t1", 1, TensorKind::Activation), t("t2", 1, TensorKind::Activation),
                  t("y", 1, TensorKind::Output), t("w", 1, TensorKind::Weight)},
                 {{"a", OpClass::Elementwise, {"x"}, {"t1"}, {}},
                  {"b", OpClass::Elementwise, {"t1"}, {"t2"}, {}},
                  {"c", OpClass::Elementwise, {"t2"}, {"y"}, {}}});
}

} // namespace

TEST_SUITE("residency") {

TEST_CASE("live intervals") {
    const auto b = chain3();
    CHECK(interval(b, "t1").birth == 0);
    CHECK(interval(b, "t1").death == 1);
    CHECK(interval(b, "x").birth == -1);
    CHECK(interval(b, "x").death == 0);
    CHECK(interval(b, "w").birth == -1);
    CHECK(interval(b, "w").death == -1);
    CHECK(interval(b, "y").death == 2);

    const auto shared = build({t("x", 1, TensorKind::Input), t("a", 1, TensorKind::Activation),
                               t("y", 1, TensorKind::Output)},
                              {{"n0", OpClass::Elementwise, {"x"}, {"a"}, {}},
                               {"n1", OpClass::Elementwise, {"x", "a"}, {"y"}, {}}});
    CHECK(interval(shared, "x").birth == -1);
    CHECK(interval(shared, "x").death == 1);
}

TEST_CASE("everything fits: compulsory traffic only") {
    const auto b = build({t("x", 4, TensorKind::Input), t("w", 2, TensorKind::Weight), t("h", 4, TensorKind::Activation),
                          t("y", 4, TensorKind::Output)},
                         {{"a", OpClass::Elementwise, {"x", "w"}, {"h"}, {}},
                          {"b", OpClass::Elementwise, {"h"}, {"y"}, {}}});
    const auto tr = simulate_residency(b.g, b.s, b.iv, 1 << 20);
    CHECK(tr.dram_read == (4 + 2) * 1024);
    CHECK(tr.dram_write == 4 * 1024);
    for (const auto& e : tr.events) CHECK(!(e.kind == TraceEventKind::EvictSpill && e.bytes > 0));
    const auto c = compulsory_traffic(b.g);
    CHECK(c.read == tr.dram_read);
    CHECK(c.write == tr.dram_write);
    CHECK(tr.streamed.empty());
}

TEST_CASE("reused tensor larger than the LLC is spilled and re-fetched") {
    // s (8 KB) is produced by a and read by b and c.
    auto make = [] {
        return build({t("x", 1, TensorKind::Input), t("s", 8, TensorKind::Activation), t("u", 1, TensorKind::Activation),
                      t("y", 1, TensorKind::Output)},
                     {{"a", OpClass::Transform, {"x"}, {"s"}, {}},
                      {"b", OpClass::Transform, {"s"}, {"u"}, {}},
                      {"c", OpClass::Elementwise, {"s", "u"}, {"y"}, {}}});
    };
    const auto b = make();
    const auto fits = simulate_residency(b.g, b.s, b.iv, 64 << 10);
    const auto tight = simulate_residency(b.g, b.s, b.iv, 4 << 10);
    const std::int64_t s_bytes = 8 << 10;
    CHECK(tight.dram_read + tight.dram_write >= fits.dram_read + fits.dram_write + 2 * s_bytes);
    CHECK(tight.dram_write - fits.dram_write == s_bytes);
    CHECK(tight.dram_read - fits.dram_read == 2 * s_bytes);
    CHECK(tight.streamed == std::vector<std::string>{"s"});
}

TEST_CASE("furthest next use is evicted first") {
    // Both a1 and a2 are needed later; a1 is needed last, so with room for
    // only one of them a1 goes to DRAM.
    const auto b = build({t("x", 1, TensorKind::Input), t("a1", 4, TensorKind::Activation),
                          t("a2", 4, TensorKind::Activation), t("b", 1, TensorKind::Activation),
                          t("y", 1, TensorKind::Output)},
                         {{"n0", OpClass::Elementwise, {"x"}, {"a1"}, {}},
                          {"n1", OpClass::Elementwise, {"x"}, {"a2"}, {}},
                          {"n2", OpClass::Elementwise, {"a2"}, {"b"}, {}},
                          {"n3", OpClass::Elementwise, {"a1", "b"}, {"y"}, {}}});
    const auto tr = simulate_residency(b.g, b.s, b.iv, 6 << 10);
    bool a1_spilled = false, a2_spilled = false;
    for (const auto& e : tr.events) {
        if (e.kind == TraceEventKind::EvictSpill && e.bytes > 0) {
            a1_spilled |= e.tensor_id == "a1";
            a2_spilled |= e.tensor_id == "a2";
        }
    }
    CHECK(a1_spilled);
    CHECK_FALSE(a2_spilled);
}

TEST_CASE("resident set never exceeds capacity and DRAM traffic is monotone") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto g = testgen::random_dag(seed * 7919 + 1);
        const auto s = topological_order(g);
        const auto iv = live_intervals(g, s);
        std::int64_t prev = std::numeric_limits<std::int64_t>::max();
        for (std::int64_t cap : {1 << 10, 16 << 10, 64 << 10, 256 << 10, 1 << 20, 8 << 20}) {
            const auto tr = simulate_residency(g, s, iv, cap);
            for (const auto& st : tr.steps) CHECK(st.resident_bytes <= cap);
            const auto total = tr.dram_read + tr.dram_write;
            CHECK(total <= prev);
            prev = total;
        }
    }
}

TEST_CASE("tile-local tensors are invisible") {
    const auto b = chain3();
    const std::vector<std::string> local = {"t1"};
    const auto g = b.g.with_tile_local(local);
    const auto s = topological_order(g);
    const auto tr = simulate_residency(g, s, live_intervals(g, s), 1 << 20);
    for (const auto& e : tr.events) CHECK(e.tensor_id != "t1");
}

TEST_CASE("trace csv and validation") {
    const auto b = chain3();
    const auto tr = simulate_residency(b.g, b.s, b.iv, 1 << 20);
    std::ostringstream os;
    write_trace_csv(tr, os);
    CHECK(os.str().rfind("step,node_id,tensor_id,event,bytes\n", 0) == 0);
    CHECK(os.str().find("fetch_dram") != std::string::npos);
    CHECK_THROWS_AS(simulate_residency(b.g, b.s, b.iv, 0), ModelError);
    CHECK(peak_live_bytes(b.g, b.iv) == 2 * 1024);
}

} // TEST_SUITE
