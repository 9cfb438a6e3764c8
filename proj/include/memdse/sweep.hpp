#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "memdse/costmodel.hpp"
#include "memdse/graph_ir.hpp"
#include "memdse/mapper.hpp"
#include "memdse/residency.hpp"

namespace memdse {

struct SweepGrid {
    std::vector<std::int64_t> l1_points;    ///< bytes, strictly increasing
    std::vector<std::int64_t> llc_points;   ///< bytes, strictly increasing
    std::int64_t baseline_l1 = 32 << 10;
    std::int64_t baseline_llc = std::int64_t{16} << 20;

    /// {16..256} KB x {16, 32, 64} MB, baseline (32 KB, 16 MB).
    static SweepGrid defaults();
    /// Keeps the first `n_l1` and `n_llc` points. If the baseline falls
    /// outside, it moves to the smallest remaining cell.
    SweepGrid truncated(std::size_t n_l1, std::size_t n_llc) const;
    void validate() const;
    std::size_t size() const { return l1_points.size() * llc_points.size(); }
};

struct SweepOptions {
    MapperPolicy policy;
    AnnealingParams annealing;
    TileCostWeights weights;
    std::uint64_t seed = 0;
    unsigned workers = 1;   ///< 0 picks the hardware concurrency
};

struct SweepPoint {
    std::int64_t l1 = 0;
    std::int64_t llc = 0;
    EnergyBreakdown energy;
    TrafficBreakdown traffic;
    LatencyProxy latency;
    double t_compute = 0.0;
    double roofline_total = 0.0;   ///< max(t_compute, t_mem)
    std::string mapping_digest;    ///< hash of the per-layer decisions
};

/// Hex FNV-1a over a canonical rendering of the decisions.
std::string mapping_digest(const std::vector<MappingDecision>& decisions);

/// Costs one (L1, LLC) configuration from its mapping and residency trace.
SweepPoint evaluate_point(const PreparedWorkload& prepared, const std::vector<MappingDecision>& decisions,
                          const ResidencyTrace& trace, const TechParams& tech, std::int64_t l1_capacity,
                          std::int64_t llc_capacity);

/// Single configuration, end to end.
SweepPoint evaluate_config(const WorkloadGraph& g, std::int64_t l1_capacity, std::int64_t llc_capacity,
                           const SweepOptions& options, const TechParams& tech);

/// One point per grid cell, L1-major order. Results do not depend on the
/// worker count.
std::vector<SweepPoint> run_sweep(const WorkloadGraph& g, const SweepGrid& grid, const SweepOptions& options,
                                  const TechParams& tech);

struct Objective {
    double energy = 0.0;
    double latency = 0.0;
};

/// Indices of the non-dominated objectives (<= in both, < in one), ordered by
/// ascending energy, then latency, then index.
std::vector<std::size_t> pareto_indices(std::span<const Objective> objectives);

std::vector<SweepPoint> pareto_front(std::span<const SweepPoint> points);

/// Lowest total energy; ties go to the smaller LLC, then the smaller L1.
const SweepPoint& best_point(std::span<const SweepPoint> points);
const SweepPoint& find_point(std::span<const SweepPoint> points, std::int64_t l1, std::int64_t llc);

enum class RegimeLabel { EarlySaturating, CapacityGated, PersistentDram };

std::string_view to_string(RegimeLabel label);

struct RegimeThresholds {
    double saturation_tolerance = 0.05;   ///< "within 5% of the minimum"
    double drop_threshold = 0.4;          ///< relative DRAM-energy drop between adjacent LLC points
    double dram_fraction_threshold = 0.5;
};

struct RegimeEvidence {
    double dram_fraction_at_max = 0.0;
    double max_adjacent_drop = 0.0;
    int drop_step = -1;          ///< k such that the drop is between llc[k] and llc[k+1]
    int saturation_index = 0;
};

struct Regime {
    RegimeLabel label = RegimeLabel::EarlySaturating;
    RegimeEvidence evidence;
    std::int64_t l1 = 0;         ///< row the evidence was read from
};

/// Classifies the LLC response along one L1 row. The DRAM fraction is read at
/// the largest (L1, LLC) cell.
Regime classify_regime_at(std::span<const SweepPoint> points, std::int64_t l1, const RegimeThresholds& thresholds);

/// Uses the baseline L1 row.
Regime classify_regime(std::span<const SweepPoint> points, const SweepGrid& grid, const RegimeThresholds& thresholds);

} // namespace memdse
