#include "memdse/residency.hpp"

#include <algorithm>
#include <map>
#include <limits>
#include <ostream>
#include <set>

namespace memdse {

namespace {

struct TensorState {
    const TensorSpec* spec = nullptr;
    std::int64_t bytes = 0;
    int birth = -1;
    int death = -1;
    bool graph_output = false;
    std::vector<int> uses;   // schedule steps that read the tensor, ascending
    bool held = false;
    bool dirty = false;
};

bool has_use_after(const TensorState& t, int step) {
    return std::upper_bound(t.uses.begin(), t.uses.end(), step) != t.uses.end();
}

int next_use_after(const TensorState& t, int step) {
    auto it = std::upper_bound(t.uses.begin(), t.uses.end(), step);
    return it == t.uses.end() ? std::numeric_limits<int>::max() : *it;
}

} // namespace

std::string_view to_string(TraceEventKind kind) {
    switch (kind) {
    case TraceEventKind::FetchDram: return "fetch_dram";
    case TraceEventKind::HitLlc: return "hit_llc";
    case TraceEventKind::Install: return "install";
    case TraceEventKind::EvictSpill: return "evict_spill";
    case TraceEventKind::EvictDead: return "evict_dead";
    case TraceEventKind::WritebackOutput: return "writeback_output";
    }
    return "?";
}

std::vector<LiveInterval> live_intervals(const WorkloadGraph& g, const Schedule& s) {
    std::vector<int> position(g.nodes().size(), -1);
    for (std::size_t i = 0; i < s.order.size(); ++i) position[s.order[i]] = static_cast<int>(i);
    const int last = static_cast<int>(s.order.size()) - 1;

    std::vector<LiveInterval> out;
    out.reserve(g.tensors().size());
    for (const auto& [id, t] : g.tensors()) {
        LiveInterval iv{id, -1, -1};
        if (auto p = g.producer(id)) iv.birth = position[*p];
        iv.death = iv.birth;
        for (auto c : g.consumers(id)) iv.death = std::max(iv.death, position[c]);
        if (g.is_graph_output(t)) iv.death = last;
        out.push_back(std::move(iv));
    }
    return out;
}

ResidencyTrace simulate_residency(const WorkloadGraph& g, const Schedule& s, const std::vector<LiveInterval>& intervals,
                                  std::int64_t llc_capacity) {
    if (llc_capacity <= 0) throw ModelError("LLC capacity must be positive");
    if (intervals.size() != g.tensors().size()) throw ModelError("live intervals do not match the graph");

    std::vector<int> position(g.nodes().size(), -1);
    for (std::size_t i = 0; i < s.order.size(); ++i) position[s.order[i]] = static_cast<int>(i);

    std::vector<TensorState> tensors;
    std::map<std::string, std::size_t> index;
    tensors.reserve(intervals.size());
    for (const auto& iv : intervals) {
        TensorState st;
        st.spec = &g.tensor(iv.tensor_id);
        st.bytes = st.spec->footprint_bytes();
        st.birth = iv.birth;
        st.death = iv.death;
        st.graph_output = g.is_graph_output(*st.spec);
        for (auto c : g.consumers(iv.tensor_id)) st.uses.push_back(position[c]);
        std::sort(st.uses.begin(), st.uses.end());
        index.emplace(iv.tensor_id, tensors.size());
        tensors.push_back(std::move(st));
    }

    ResidencyTrace trace;
    trace.llc_capacity = llc_capacity;
    std::set<std::string> streamed;

    std::vector<std::size_t> ranked;
    std::vector<int> key(tensors.size());
    std::vector<char> in_prefix(tensors.size());

    for (int step = 0; step < static_cast<int>(s.order.size()); ++step) {
        const auto& node = g.nodes()[s.order[step]];
        auto emit = [&](const TensorState& t, TraceEventKind kind, std::int64_t bytes) {
            trace.events.push_back({step, node.id, t.spec->id, kind, bytes});
        };

        std::vector<std::size_t> inputs;
        std::vector<std::size_t> outputs;
        for (const auto& tid : node.inputs) {
            const auto k = index.at(tid);
            if (!tensors[k].spec->tile_local && std::find(inputs.begin(), inputs.end(), k) == inputs.end())
                inputs.push_back(k);
        }
        for (const auto& tid : node.outputs) {
            const auto k = index.at(tid);
            if (!tensors[k].spec->tile_local && std::find(outputs.begin(), outputs.end(), k) == outputs.end())
                outputs.push_back(k);
        }

        // Rank live tensors by next use; the current operands come first.
        ranked.clear();
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            const auto& t = tensors[k];
            if (t.spec->tile_local || t.birth > step || t.death < step) continue;
            const bool operand = std::find(inputs.begin(), inputs.end(), k) != inputs.end() ||
                                 std::find(outputs.begin(), outputs.end(), k) != outputs.end();
            key[k] = operand ? step : next_use_after(t, step);
            ranked.push_back(k);
        }
        std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            if (key[a] != key[b]) return key[a] < key[b];
            if (tensors[a].bytes != tensors[b].bytes) return tensors[a].bytes < tensors[b].bytes;
            return a > b;
        });
        std::fill(in_prefix.begin(), in_prefix.end(), 0);
        std::int64_t budget = llc_capacity;
        for (auto k : ranked) {
            if (tensors[k].bytes > budget) break;
            budget -= tensors[k].bytes;
            in_prefix[k] = 1;
        }

        for (auto k : inputs) {
            auto& t = tensors[k];
            if (t.held) {
                emit(t, TraceEventKind::HitLlc, t.bytes);
                continue;
            }
            trace.dram_read += t.bytes;
            emit(t, TraceEventKind::FetchDram, t.bytes);
            if (in_prefix[k]) {
                t.held = true;
                t.dirty = false;
                trace.llc_write += t.bytes;
                emit(t, TraceEventKind::Install, t.bytes);
            } else if (t.bytes > llc_capacity) {
                streamed.insert(t.spec->id);
            }
        }

        for (auto k : outputs) {
            auto& t = tensors[k];
            if (in_prefix[k]) {
                t.held = true;
                t.dirty = true;
                emit(t, TraceEventKind::Install, t.bytes);
                continue;
            }
            if (t.bytes > llc_capacity) streamed.insert(t.spec->id);
            if (t.graph_output || t.death > step) {
                trace.dram_write += t.bytes;
                emit(t, t.graph_output ? TraceEventKind::WritebackOutput : TraceEventKind::EvictSpill, t.bytes);
            }
        }

        // Evict everything held outside the prefix, furthest next use first.
        for (auto it = ranked.rbegin(); it != ranked.rend(); ++it) {
            auto& t = tensors[*it];
            if (!t.held || in_prefix[*it]) continue;
            t.held = false;
            std::int64_t written = 0;
            if (t.dirty && (t.graph_output || has_use_after(t, step))) {
                written = t.bytes;
                trace.dram_write += t.bytes;
                trace.llc_read += t.bytes;
            }
            t.dirty = false;
            emit(t, TraceEventKind::EvictSpill, written);
        }

        // Release tensors whose last use was this step.
        for (auto k : ranked) {
            auto& t = tensors[k];
            if (t.death != step || !t.held) continue;
            t.held = false;
            if (t.graph_output && t.dirty) {
                trace.dram_write += t.bytes;
                trace.llc_read += t.bytes;
                emit(t, TraceEventKind::WritebackOutput, t.bytes);
            } else {
                emit(t, TraceEventKind::EvictDead, 0);
            }
            t.dirty = false;
        }

        StepResidency sr;
        for (const auto& t : tensors) {
            if (!t.held) continue;
            sr.resident.push_back(t.spec->id);
            sr.resident_bytes += t.bytes;
        }
        if (sr.resident_bytes > llc_capacity) throw ModelError("residency invariant violated: LLC over capacity");
        trace.steps.push_back(std::move(sr));
    }

    trace.streamed.assign(streamed.begin(), streamed.end());
    return trace;
}

std::int64_t peak_live_bytes(const WorkloadGraph& g, const std::vector<LiveInterval>& intervals) {
    int last = -1;
    for (const auto& iv : intervals) last = std::max(last, iv.death);
    std::int64_t peak = 0;
    for (int step = 0; step <= last; ++step) {
        std::int64_t live = 0;
        for (const auto& iv : intervals) {
            const auto& t = g.tensor(iv.tensor_id);
            if (!t.tile_local && iv.birth <= step && step <= iv.death) live += t.footprint_bytes();
        }
        peak = std::max(peak, live);
    }
    return peak;
}

CompulsoryTraffic compulsory_traffic(const WorkloadGraph& g) {
    CompulsoryTraffic c;
    for (const auto& [id, t] : g.tensors()) {
        if ((t.kind == TensorKind::Weight || t.kind == TensorKind::Input) && !g.consumers(id).empty())
            c.read += t.footprint_bytes();
        if (t.kind == TensorKind::Output) c.write += t.footprint_bytes();
    }
    return c;
}

void write_trace_csv(const ResidencyTrace& trace, std::ostream& out) {
    out << "step,node_id,tensor_id,event,bytes\n";
    for (const auto& e : trace.events)
        out << e.step << ',' << e.node_id << ',' << e.tensor_id << ',' << to_string(e.kind) << ',' << e.bytes << '\n';
}

} // namespace memdse
