#include "memdse/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>
#include <tuple>

#include "memdse/rng.hpp"

namespace memdse {

namespace {

// Runs body(i) for i in [0, n) on up to `workers` threads. The first failure
// in index order is rethrown, so errors are reported deterministically.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void check_increasing(const std::vector<std::int64_t>& v, const char* name) {
    if (v.empty()) throw ConfigError(std::string("grid: ") + name + " points must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] <= 0) throw ConfigError(std::string("grid: ") + name + " capacities must be positive");
        if (i > 0 && v[i] <= v[i - 1]) throw ConfigError(std::string("grid: ") + name + " points must be strictly increasing");
    }
}

std::int64_t total_footprint(const WorkloadGraph& g) {
    std::int64_t total = 0;
    for (const auto& [id, t] : g.tensors()) total += t.footprint_bytes();
    return total;
}

void check_dram(const WorkloadGraph& g, const TechParams& tech) {
    const auto total = total_footprint(g);
    if (total > tech.dram_capacity_bytes)
        throw ModelError("workload footprint " + std::to_string(total) + " B exceeds DRAM capacity " +
                         std::to_string(tech.dram_capacity_bytes) + " B");
}

} // namespace

SweepGrid SweepGrid::defaults() {
    SweepGrid g;
    for (std::int64_t kb : {16, 32, 64, 128, 256}) g.l1_points.push_back(kb << 10);
    for (std::int64_t mb : {16, 32, 64}) g.llc_points.push_back(mb << 20);
    g.baseline_l1 = 32 << 10;
    g.baseline_llc = std::int64_t{16} << 20;
    return g;
}

SweepGrid SweepGrid::truncated(std::size_t n_l1, std::size_t n_llc) const {
    if (n_l1 == 0 || n_llc == 0 || n_l1 > l1_points.size() || n_llc > llc_points.size())
        throw ConfigError("grid: requested " + std::to_string(n_l1) + "x" + std::to_string(n_llc) + " exceeds the " +
                          std::to_string(l1_points.size()) + "x" + std::to_string(llc_points.size()) + " grid");
    SweepGrid g = *this;
    g.l1_points.resize(n_l1);
    g.llc_points.resize(n_llc);
    const bool has_l1 = std::count(g.l1_points.begin(), g.l1_points.end(), baseline_l1) > 0;
    const bool has_llc = std::count(g.llc_points.begin(), g.llc_points.end(), baseline_llc) > 0;
    if (!has_l1 || !has_llc) {
        g.baseline_l1 = g.l1_points.front();
        g.baseline_llc = g.llc_points.front();
    }
    return g;
}

void SweepGrid::validate() const {
    check_increasing(l1_points, "l1");
    check_increasing(llc_points, "llc");
    if (std::find(l1_points.begin(), l1_points.end(), baseline_l1) == l1_points.end() ||
        std::find(llc_points.begin(), llc_points.end(), baseline_llc) == llc_points.end())
        throw ConfigError("grid: baseline must be a grid cell");
}

std::string mapping_digest(const std::vector<MappingDecision>& decisions) {
    std::ostringstream os;
    for (const auto& d : decisions) {
        os << d.node_id << '|' << to_string(d.stationary) << '|';
        if (d.tiling) {
            std::visit(
                [&](const auto& t) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, ConvTile>)
                        os << t.c_in << ',' << t.c_out << ',' << t.h_out << ',' << t.w_out;
                    else
                        os << t.m << ',' << t.n << ',' << t.k;
                },
                *d.tiling);
        }
        os << '|' << d.fused_into.value_or("") << ';';
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

SweepPoint evaluate_point(const PreparedWorkload& prepared, const std::vector<MappingDecision>& decisions,
                          const ResidencyTrace& trace, const TechParams& tech, std::int64_t l1_capacity,
                          std::int64_t llc_capacity) {
    const auto& g = prepared.graph;
    if (decisions.size() != g.nodes().size()) throw ModelError("mapping does not cover every node");

    SweepPoint p;
    p.l1 = l1_capacity;
    p.llc = llc_capacity;
    std::int64_t tiled_refill = 0;
    for (std::size_t i = 0; i < g.nodes().size(); ++i) {
        const auto t = node_l1_traffic(g, g.nodes()[i], decisions[i]);
        p.traffic.l1_read += t.read();
        p.traffic.l1_write += t.write();
        if (decisions[i].tiling) tiled_refill += t.read();
    }
    p.traffic.dram_read = trace.dram_read;
    p.traffic.dram_write = trace.dram_write;
    p.traffic.llc_read = p.traffic.l1_read + trace.llc_read;
    p.traffic.llc_write = p.traffic.l1_write + trace.llc_write;
    if (p.traffic.llc_read < tiled_refill) throw ModelError("LLC reads do not cover L1 refills");

    const auto flops = flops_by_class(g);
    p.latency = latency_proxy(p.traffic, tech);
    p.energy = energy(p.traffic, flops, tech, p.latency.t_mem, l1_capacity, llc_capacity);
    p.t_compute = compute_time(flops, tech);
    p.roofline_total = std::max(p.t_compute, p.latency.t_mem);
    p.mapping_digest = mapping_digest(decisions);
    return p;
}

SweepPoint evaluate_config(const WorkloadGraph& g, std::int64_t l1_capacity, std::int64_t llc_capacity,
                           const SweepOptions& options, const TechParams& tech) {
    tech.validate();
    check_dram(g, tech);
    const auto prepared = prepare_workload(g, options.policy);
    const auto decisions =
        map_layers(prepared, l1_capacity, options.policy, options.annealing, options.weights, options.seed);
    const auto intervals = live_intervals(prepared.graph, prepared.schedule);
    const auto trace = simulate_residency(prepared.graph, prepared.schedule, intervals, llc_capacity);
    return evaluate_point(prepared, decisions, trace, tech, l1_capacity, llc_capacity);
}

std::vector<SweepPoint> run_sweep(const WorkloadGraph& g, const SweepGrid& grid, const SweepOptions& options,
                                  const TechParams& tech) {
    grid.validate();
    tech.validate();
    check_dram(g, tech);
    for (auto l1 : grid.l1_points) options.policy.validate(l1);
    options.annealing.validate();

    // Mapping depends only on L1 and residency only on the LLC, so each is
    // computed once per axis point; every cell still sees exactly what an
    // isolated evaluation would.
    const auto prepared = prepare_workload(g, options.policy);
    const auto intervals = live_intervals(prepared.graph, prepared.schedule);
    const auto n_l1 = grid.l1_points.size();
    const auto n_llc = grid.llc_points.size();
    std::vector<std::vector<MappingDecision>> mappings(n_l1);
    std::vector<ResidencyTrace> traces(n_llc);

    parallel_for(n_l1 + n_llc, options.workers, [&](std::size_t task) {
        if (task < n_l1) {
            mappings[task] = map_layers(prepared, grid.l1_points[task], options.policy, options.annealing,
                                        options.weights, options.seed);
        } else {
            const auto j = task - n_l1;
            traces[j] = simulate_residency(prepared.graph, prepared.schedule, intervals, grid.llc_points[j]);
        }
    });

    std::vector<SweepPoint> points;
    points.reserve(grid.size());
    for (std::size_t i = 0; i < n_l1; ++i)
        for (std::size_t j = 0; j < n_llc; ++j)
            points.push_back(
                evaluate_point(prepared, mappings[i], traces[j], tech, grid.l1_points[i], grid.llc_points[j]));
    return points;
}

std::vector<std::size_t> pareto_indices(std::span<const Objective> obj) {
    std::vector<std::size_t> order(obj.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (obj[a].energy != obj[b].energy) return obj[a].energy < obj[b].energy;
        if (obj[a].latency != obj[b].latency) return obj[a].latency < obj[b].latency;
        return a < b;
    });

    // Walk groups of equal energy. Within a group only the minimum latency can
    // survive, and only if it beats every strictly cheaper point.
    std::vector<std::size_t> front;
    double best_latency = std::numeric_limits<double>::infinity();
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo;
        while (hi < order.size() && obj[order[hi]].energy == obj[order[lo]].energy) ++hi;
        const double group_min = obj[order[lo]].latency;
        if (group_min < best_latency) {
            for (std::size_t k = lo; k < hi && obj[order[k]].latency == group_min; ++k) front.push_back(order[k]);
            best_latency = group_min;
        }
        lo = hi;
    }
    return front;
}

std::vector<SweepPoint> pareto_front(std::span<const SweepPoint> points) {
    std::vector<Objective> obj;
    obj.reserve(points.size());
    for (const auto& p : points) obj.push_back({p.energy.total, p.latency.t_mem});
    std::vector<SweepPoint> out;
    for (auto i : pareto_indices(obj)) out.push_back(points[i]);
    return out;
}

const SweepPoint& best_point(std::span<const SweepPoint> points) {
    if (points.empty()) throw ModelError("no sweep points");
    const SweepPoint* best = &points[0];
    for (const auto& p : points) {
        const auto key = std::tuple(p.energy.total, p.llc, p.l1);
        if (key < std::tuple(best->energy.total, best->llc, best->l1)) best = &p;
    }
    return *best;
}

const SweepPoint& find_point(std::span<const SweepPoint> points, std::int64_t l1, std::int64_t llc) {
    for (const auto& p : points)
        if (p.l1 == l1 && p.llc == llc) return p;
    throw ModelError("no sweep point at L1 " + std::to_string(l1) + " B, LLC " + std::to_string(llc) + " B");
}

std::string_view to_string(RegimeLabel label) {
    switch (label) {
    case RegimeLabel::EarlySaturating: return "EarlySaturating";
    case RegimeLabel::CapacityGated: return "CapacityGated";
    case RegimeLabel::PersistentDram: return "PersistentDram";
    }
    return "?";
}

Regime classify_regime_at(std::span<const SweepPoint> points, std::int64_t l1, const RegimeThresholds& thr) {
    std::vector<const SweepPoint*> row;
    std::int64_t l1_max = 0;
    std::int64_t llc_max = 0;
    for (const auto& p : points) {
        if (p.l1 == l1) row.push_back(&p);
        l1_max = std::max(l1_max, p.l1);
        llc_max = std::max(llc_max, p.llc);
    }
    if (row.empty()) throw ModelError("no sweep points at L1 " + std::to_string(l1) + " B");
    std::sort(row.begin(), row.end(), [](const SweepPoint* a, const SweepPoint* b) { return a->llc < b->llc; });

    Regime r;
    r.l1 = l1;
    double min_total = row[0]->energy.total;
    for (const auto* p : row) min_total = std::min(min_total, p->energy.total);
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k]->energy.total <= (1.0 + thr.saturation_tolerance) * min_total) {
            r.evidence.saturation_index = static_cast<int>(k);
            break;
        }
    }
    for (std::size_t k = 0; k + 1 < row.size(); ++k) {
        const double before = row[k]->energy.e_dram;
        const double after = row[k + 1]->energy.e_dram;
        const double drop = before > 0 ? (before - after) / before : 0.0;
        if (drop > r.evidence.max_adjacent_drop) {
            r.evidence.max_adjacent_drop = drop;
            r.evidence.drop_step = static_cast<int>(k);
        }
    }
    const auto& corner = find_point(points, l1_max, llc_max);
    r.evidence.dram_fraction_at_max = corner.energy.total > 0 ? corner.energy.e_dram / corner.energy.total : 0.0;

    if (r.evidence.dram_fraction_at_max >= thr.dram_fraction_threshold)
        r.label = RegimeLabel::PersistentDram;
    else if (r.evidence.max_adjacent_drop >= thr.drop_threshold)
        r.label = RegimeLabel::CapacityGated;
    else
        r.label = RegimeLabel::EarlySaturating;
    return r;
}

Regime classify_regime(std::span<const SweepPoint> points, const SweepGrid& grid, const RegimeThresholds& thr) {
    return classify_regime_at(points, grid.baseline_l1, thr);
}

} // namespace memdse
