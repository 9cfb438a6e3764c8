#include "memdse/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "memdse/config.hpp"

namespace memdse {

namespace {

const SweepPoint& baseline_of(std::span<const SweepPoint> points, const SweepGrid& grid) {
    return find_point(points, grid.baseline_l1, grid.baseline_llc);
}

double ratio(double a, double b) { return b > 0 ? a / b : 0.0; }

void heatmap_row(const SweepPoint& p, const SweepPoint& base, std::ostream& out) {
    out << p.l1 << ',' << p.llc << ',' << format_number(p.energy.total) << ','
        << format_number(ratio(p.energy.total, base.energy.total)) << ',' << format_number(p.latency.t_mem) << ','
        << format_number(ratio(p.latency.t_mem, base.latency.t_mem)) << '\n';
}

constexpr const char* kHeatmapHeader = "l1,llc,total_energy,normalized_energy,t_mem,normalized_latency\n";

std::string cell(const SweepPoint& p) { return format_capacity(p.l1) + "/" + format_capacity(p.llc); }

void breakdown_lines(const char* label, const SweepPoint& p, std::ostream& out) {
    out << label << " (" << cell(p) << ")\n";
    out << "  total      " << format_number(p.energy.total) << " J\n";
    out << "  e_l1       " << format_number(p.energy.e_l1) << " J\n";
    out << "  e_llc      " << format_number(p.energy.e_llc) << " J\n";
    out << "  e_dram     " << format_number(p.energy.e_dram) << " J\n";
    out << "  e_core     " << format_number(p.energy.e_core) << " J\n";
    out << "  e_leakage  " << format_number(p.energy.e_leakage) << " J\n";
    out << "  dram_bytes " << p.traffic.dram_read + p.traffic.dram_write << '\n';
    out << "  t_mem      " << format_number(p.latency.t_mem) << " s\n";
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

void write_heatmap_csv(std::span<const SweepPoint> points, const SweepGrid& grid, std::ostream& out) {
    const auto& base = baseline_of(points, grid);
    out << kHeatmapHeader;
    for (const auto& p : points) heatmap_row(p, base, out);
}

void write_breakdown_csv(std::span<const SweepPoint> points, std::ostream& out) {
    out << "l1,llc,e_l1,e_llc,e_dram,e_core,e_leakage\n";
    for (const auto& p : points)
        out << p.l1 << ',' << p.llc << ',' << format_number(p.energy.e_l1) << ',' << format_number(p.energy.e_llc)
            << ',' << format_number(p.energy.e_dram) << ',' << format_number(p.energy.e_core) << ','
            << format_number(p.energy.e_leakage) << '\n';
}

void write_pareto_csv(std::span<const SweepPoint> points, const SweepGrid& grid, std::ostream& out) {
    const auto& base = baseline_of(points, grid);
    out << kHeatmapHeader;
    for (const auto& p : pareto_front(points)) heatmap_row(p, base, out);
}

void write_roofline_csv(std::span<const SweepPoint> points, std::ostream& out) {
    out << "l1,llc,t_l1,t_llc,t_dram,t_mem,t_compute,roofline_total\n";
    for (const auto& p : points)
        out << p.l1 << ',' << p.llc << ',' << format_number(p.latency.t_l1) << ',' << format_number(p.latency.t_llc)
            << ',' << format_number(p.latency.t_dram) << ',' << format_number(p.latency.t_mem) << ','
            << format_number(p.t_compute) << ',' << format_number(p.roofline_total) << '\n';
}

void write_regime_txt(std::span<const SweepPoint> points, const SweepGrid& grid, const RegimeThresholds& thr,
                      const std::string& workload, std::ostream& out) {
    auto step_name = [&](int k) {
        if (k < 0) return std::string("none");
        return format_capacity(grid.llc_points[k]) + "->" + format_capacity(grid.llc_points[k + 1]);
    };
    const auto r = classify_regime(points, grid, thr);
    out << "workload: " << workload << '\n';
    out << "regime: " << to_string(r.label) << '\n';
    out << "l1: " << format_capacity(r.l1) << '\n';
    out << "dram_fraction_at_max: " << format_number(r.evidence.dram_fraction_at_max) << '\n';
    out << "max_adjacent_drop: " << format_number(r.evidence.max_adjacent_drop) << '\n';
    out << "drop_step: " << step_name(r.evidence.drop_step) << '\n';
    out << "saturation_llc: " << format_capacity(grid.llc_points[r.evidence.saturation_index]) << '\n';
    out << "thresholds: saturation_tolerance=" << format_number(thr.saturation_tolerance)
        << " drop_threshold=" << format_number(thr.drop_threshold)
        << " dram_fraction_threshold=" << format_number(thr.dram_fraction_threshold) << '\n';
    out << "per_l1:\n";
    for (auto l1 : grid.l1_points) {
        const auto row = classify_regime_at(points, l1, thr);
        out << "  " << format_capacity(l1) << ' ' << to_string(row.label)
            << " drop=" << format_number(row.evidence.max_adjacent_drop) << " step=" << step_name(row.evidence.drop_step)
            << " saturation_llc=" << format_capacity(grid.llc_points[row.evidence.saturation_index]) << '\n';
    }
}

void write_summary(std::span<const SweepPoint> points, const SweepGrid& grid, const std::string& workload,
                   std::ostream& out) {
    const auto& base = baseline_of(points, grid);
    const auto& best = best_point(points);
    out << "workload: " << workload << '\n';
    breakdown_lines("baseline", base, out);
    breakdown_lines("best", best, out);
    out << "energy_reduction: " << format_number(1.0 - ratio(best.energy.total, base.energy.total)) << '\n';
}

std::vector<HeatmapRow> read_heatmap_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("heatmap: empty input", 1, 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    const std::vector<std::string> expected = split(std::string(kHeatmapHeader, std::string(kHeatmapHeader).size() - 1));
    if (header != expected) throw ParseError("heatmap: unexpected header '" + line + "'", 1, 1);

    std::vector<HeatmapRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != expected.size())
            throw ParseError("heatmap: expected " + std::to_string(expected.size()) + " fields", line_no, 1);
        HeatmapRow r;
        try {
            std::size_t used = 0;
            auto whole = [&](const std::string& s, auto parsed) {
                if (used != s.size()) throw std::invalid_argument(s);
                return parsed;
            };
            r.l1 = whole(f[0], std::stoll(f[0], &used));
            r.llc = whole(f[1], std::stoll(f[1], &used));
            r.total_energy = whole(f[2], std::stod(f[2], &used));
            r.normalized_energy = whole(f[3], std::stod(f[3], &used));
            r.t_mem = whole(f[4], std::stod(f[4], &used));
            r.normalized_latency = whole(f[5], std::stod(f[5], &used));
        } catch (const std::exception&) {
            throw ParseError("heatmap: malformed number", line_no, 1);
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace memdse
