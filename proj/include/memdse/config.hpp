#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "memdse/costmodel.hpp"
#include "memdse/mapper.hpp"
#include "memdse/sweep.hpp"

namespace memdse {

/// "32KB", "16 MB", "1GiB", "4096". Suffixes are powers of two and
/// case-insensitive.
std::int64_t parse_capacity(std::string_view text);
/// Largest exact unit: 32768 -> "32KB", 1000 -> "1000B".
std::string format_capacity(std::int64_t bytes);

/// Strict: every field is required and unknown keys are rejected.
TechParams parse_tech_params(std::string_view text);
TechParams load_tech_params(const std::string& path);
std::string serialize_tech_params(const TechParams& tech);

struct EngineConfig {
    std::string tech_path;   ///< resolved against the config file's directory
    TechParams tech;
    SweepGrid grid = SweepGrid::defaults();
    MapperPolicy policy;
    AnnealingParams annealing;
    TileCostWeights weights;
    RegimeThresholds regime;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool emit_trace = false;
    bool emit_roofline_total = false;
    unsigned workers = 0;

    SweepOptions sweep_options() const;
};

/// Parses a config document. `base_dir` resolves a relative tech path.
EngineConfig parse_engine_config(std::string_view text, const std::string& base_dir);
EngineConfig load_engine_config(const std::string& path);

} // namespace memdse
