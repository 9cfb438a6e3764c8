#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "memdse/graph_ir.hpp"

namespace memdse {

/// Parameters for one of the synthetic workload families:
///
///   encoder_decoder_cnn  depth, width, resolution, blocks
///   cost_volume          levels, width, resolution, radius
///   attention_matcher    tokens, dim, layers
///   mlp_ray              rays, samples, hidden, depth, chunks
///   probe_reuse          live_mb   (skip-connected chain with a chosen live set)
///   probe_stream         tensor_mb, stages   (no reuse, every tensor read once)
///
/// Unset parameters take the family defaults.
struct SyntheticFamilySpec {
    std::string family;
    std::map<std::string, std::int64_t> params;
    std::uint64_t seed = 0;
};

std::vector<std::string> synthetic_families();
/// Default parameters of a family; throws ConfigError for unknown families.
std::map<std::string, std::int64_t> family_defaults(const std::string& family);

/// Deterministic for a given spec. Throws ConfigError on invalid parameters.
WorkloadGraph generate_workload(const SyntheticFamilySpec& spec);

} // namespace memdse
