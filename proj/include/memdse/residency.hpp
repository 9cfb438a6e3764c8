#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memdse/graph_ir.hpp"

namespace memdse {

/// Schedule positions where a tensor is live. Weights and graph inputs are
/// born at -1 (preloaded in DRAM); graph outputs die at the last step.
/// A tensor nothing reads and that is not an output dies where it is born.
struct LiveInterval {
    std::string tensor_id;
    int birth = -1;
    int death = -1;

    bool operator==(const LiveInterval&) const = default;
};

/// One interval per tensor, in tensor-id order.
std::vector<LiveInterval> live_intervals(const WorkloadGraph& g, const Schedule& s);

enum class TraceEventKind { FetchDram, HitLlc, Install, EvictSpill, EvictDead, WritebackOutput };

std::string_view to_string(TraceEventKind kind);

struct TraceEvent {
    int step = 0;
    std::string node_id;
    std::string tensor_id;
    TraceEventKind kind = TraceEventKind::FetchDram;
    std::int64_t bytes = 0;

    bool operator==(const TraceEvent&) const = default;
};

struct StepResidency {
    std::vector<std::string> resident;   ///< sorted
    std::int64_t resident_bytes = 0;

    bool operator==(const StepResidency&) const = default;
};

struct ResidencyTrace {
    std::int64_t llc_capacity = 0;
    std::vector<StepResidency> steps;
    std::vector<TraceEvent> events;
    /// Tensors larger than the whole LLC; every access goes to DRAM.
    std::vector<std::string> streamed;

    // Totals at the LLC<->DRAM boundary.
    std::int64_t llc_read = 0;    ///< read out of the LLC towards DRAM (spills, output writebacks)
    std::int64_t llc_write = 0;   ///< DRAM fills installed in the LLC
    std::int64_t dram_read = 0;
    std::int64_t dram_write = 0;

    bool operator==(const ResidencyTrace&) const = default;
};

/// Walks the schedule with a capacity-bounded, software-managed LLC.
///
/// At every step the live tensors are ranked by next use (the tensors the
/// current node touches first), ties by smaller footprint and then by
/// descending id. The LLC may hold only tensors in the longest ranked prefix
/// that fits the capacity; everything else is evicted in furthest-next-use
/// order. Because the ranking does not depend on the capacity, a larger LLC
/// always retains a superset and DRAM traffic cannot increase with capacity.
///
/// Accounting: a non-resident operand is read from DRAM; an evicted live
/// tensor is written back the first time it leaves the LLC dirty and read
/// again on its next use; dead intermediates are dropped for free; graph
/// outputs are written to DRAM exactly once. Tile-local tensors are skipped.
ResidencyTrace simulate_residency(const WorkloadGraph& g, const Schedule& s, const std::vector<LiveInterval>& intervals,
                                  std::int64_t llc_capacity);

/// Largest total footprint of simultaneously live, non-tile-local tensors.
std::int64_t peak_live_bytes(const WorkloadGraph& g, const std::vector<LiveInterval>& intervals);

/// Sum of consumed weights and inputs plus graph outputs: the traffic floor.
struct CompulsoryTraffic {
    std::int64_t read = 0;
    std::int64_t write = 0;
};
CompulsoryTraffic compulsory_traffic(const WorkloadGraph& g);

/// CSV: step,node_id,tensor_id,event,bytes
void write_trace_csv(const ResidencyTrace& trace, std::ostream& out);

} // namespace memdse
