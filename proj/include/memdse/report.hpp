#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memdse/sweep.hpp"

namespace memdse {

/// Fixed-format number rendering shared by every CSV writer.
std::string format_number(double value);

/// l1,llc,total_energy,normalized_energy,t_mem,normalized_latency
/// Normalisation is against the baseline cell.
void write_heatmap_csv(std::span<const SweepPoint> points, const SweepGrid& grid, std::ostream& out);
/// l1,llc,e_l1,e_llc,e_dram,e_core,e_leakage
void write_breakdown_csv(std::span<const SweepPoint> points, std::ostream& out);
/// Pareto members with the heatmap columns.
void write_pareto_csv(std::span<const SweepPoint> points, const SweepGrid& grid, std::ostream& out);
/// l1,llc,t_l1,t_llc,t_dram,t_mem,t_compute,roofline_total
void write_roofline_csv(std::span<const SweepPoint> points, std::ostream& out);
void write_regime_txt(std::span<const SweepPoint> points, const SweepGrid& grid, const RegimeThresholds& thresholds,
                      const std::string& workload, std::ostream& out);
/// Baseline versus best configuration with energy breakdowns.
void write_summary(std::span<const SweepPoint> points, const SweepGrid& grid, const std::string& workload,
                   std::ostream& out);

struct HeatmapRow {
    std::int64_t l1 = 0;
    std::int64_t llc = 0;
    double total_energy = 0.0;
    double normalized_energy = 0.0;
    double t_mem = 0.0;
    double normalized_latency = 0.0;
};

std::vector<HeatmapRow> read_heatmap_csv(std::istream& in);

} // namespace memdse
