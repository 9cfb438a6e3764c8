#pragma once

// Brute-force reference implementations used by the unit and acceptance tests.
// They deliberately avoid calling the library's closed-form code paths.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "memdse/mapper.hpp"
#include "memdse/sweep.hpp"
#include "memdse/tiling.hpp"

namespace oracle {

/// Counts sliding-window positions over the padded axis.
inline std::int64_t conv_out_extent(std::int64_t in, std::int64_t k, std::int64_t stride, std::int64_t pad) {
    std::int64_t count = 0;
    for (std::int64_t start = 0; start + k <= in + 2 * pad; start += stride) ++count;
    return count;
}

/// Rows of the padded input touched by output rows [0, t), found by walking
/// every window index, plus the 2*pad border the tile buffer reserves, clamped
/// to the input extent.
inline std::int64_t induced_extent(std::int64_t t, std::int64_t in, std::int64_t k, std::int64_t stride,
                                   std::int64_t pad) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (std::int64_t o = 0; o < t; ++o)
        for (std::int64_t r = 0; r < k; ++r) {
            lo = std::min(lo, o * stride + r);
            hi = std::max(hi, o * stride + r);
        }
    return std::min(in, hi - lo + 1 + 2 * pad);
}

/// Window span alone (no border); equals induced_extent when pad == 0.
inline std::int64_t window_span(std::int64_t t, std::int64_t k, std::int64_t stride) {
    std::set<std::int64_t> rows;
    for (std::int64_t o = 0; o < t; ++o)
        for (std::int64_t r = 0; r < k; ++r) rows.insert(o * stride + r);
    return *rows.rbegin() - *rows.begin() + 1;
}

struct ExhaustiveResult {
    double best = std::numeric_limits<double>::infinity();
    std::int64_t legal = 0;
};

/// Minimum of the weighted tile cost over every legal tiling of a layer.
inline ExhaustiveResult exhaustive_tiling(const memdse::LayerShape& shape, memdse::Stationary st,
                                          std::int64_t l1_eff, const memdse::TileCostWeights& w) {
    using namespace memdse;
    ExhaustiveResult r;
    auto consider = [&](const TilingConfig& tile) {
        const double c = tile_cost(tile, shape, st, l1_eff, w);
        if (c == std::numeric_limits<double>::infinity()) return;
        ++r.legal;
        r.best = std::min(r.best, c);
    };
    if (const auto* conv = std::get_if<ConvShape>(&shape)) {
        for (std::int64_t ci = 1; ci <= conv->attrs.c_in; ++ci)
            for (std::int64_t co = 1; co <= conv->attrs.c_out; ++co)
                for (std::int64_t h = 1; h <= conv->h_out; ++h)
                    for (std::int64_t x = 1; x <= conv->w_out; ++x) consider(ConvTile{ci, co, h, x});
    } else {
        const auto& a = std::get<GemmShape>(shape).attrs;
        for (std::int64_t m = 1; m <= a.m; ++m)
            for (std::int64_t n = 1; n <= a.n; ++n)
                for (std::int64_t k = 1; k <= a.k; ++k) consider(GemmTile{m, n, k});
    }
    return r;
}

/// O(n^2) dominance filter; returns surviving indices in input order.
inline std::vector<std::size_t> pareto(const std::vector<memdse::Objective>& pts) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            if (i == j) continue;
            const bool le = pts[j].energy <= pts[i].energy && pts[j].latency <= pts[i].latency;
            const bool lt = pts[j].energy < pts[i].energy || pts[j].latency < pts[i].latency;
            dominated = le && lt;
        }
        if (!dominated) out.push_back(i);
    }
    return out;
}

} // namespace oracle
