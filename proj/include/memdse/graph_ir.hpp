#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memdse/errors.hpp"

namespace memdse {

enum class TensorKind { Weight, Activation, Input, Output };

enum class OpClass {
    Conv,
    Gemm,
    Elementwise,
    Activation,
    Transform,   ///< transform / resample / warp / correlation
    Reduce,
    Softmax,
    Concat,      ///< concat / reshape
    DataMovement,
};

std::string_view to_string(TensorKind kind);
std::string_view to_string(OpClass op);
TensorKind parse_tensor_kind(std::string_view text);
/// Accepts the canonical names plus the aliases Resample, Reshape and MatMul.
OpClass parse_op_class(std::string_view text);

struct TensorSpec {
    std::string id;
    std::vector<std::int64_t> dims;
    int element_bytes = 4;
    TensorKind kind = TensorKind::Activation;
    /// Set by fusion: the tensor never leaves L1 and costs no LLC/DRAM traffic.
    bool tile_local = false;

    std::int64_t numel() const;
    std::int64_t footprint_bytes() const { return numel() * element_bytes; }

    bool operator==(const TensorSpec&) const = default;
};

struct OperatorNode {
    std::string id;
    OpClass op_class = OpClass::Elementwise;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, std::int64_t> attrs;
    /// Derived during graph validation.
    std::int64_t flops = 0;

    std::int64_t attr(const std::string& key) const;
    bool operator==(const OperatorNode&) const = default;
};

struct ConvAttrs {
    std::int64_t k_h = 1;
    std::int64_t k_w = 1;
    std::int64_t stride = 1;
    std::int64_t pad = 0;
    std::int64_t c_in = 1;
    std::int64_t c_out = 1;
    std::int64_t h_in = 1;
    std::int64_t w_in = 1;

    bool operator==(const ConvAttrs&) const = default;
};

struct GemmAttrs {
    std::int64_t m = 1;
    std::int64_t n = 1;
    std::int64_t k = 1;

    bool operator==(const GemmAttrs&) const = default;
};

struct OutputDims {
    std::int64_t h = 0;
    std::int64_t w = 0;

    bool operator==(const OutputDims&) const = default;
};

ConvAttrs conv_attrs(const OperatorNode& node);
GemmAttrs gemm_attrs(const OperatorNode& node);

/// floor((in - k + 2*pad) / stride) + 1 per axis. Throws GraphError when the
/// geometry is invalid or yields a non-positive extent.
OutputDims conv_output_dims(const ConvAttrs& attrs);

/// Validated, immutable operator DAG.
class WorkloadGraph {
public:
    /// Validates every structural invariant and derives per-node flops.
    WorkloadGraph(std::string name, std::vector<TensorSpec> tensors, std::vector<OperatorNode> nodes);

    const std::string& name() const { return name_; }
    const std::map<std::string, TensorSpec>& tensors() const { return tensors_; }
    const std::vector<OperatorNode>& nodes() const { return nodes_; }

    const TensorSpec& tensor(const std::string& id) const;
    std::size_t node_index(const std::string& id) const;
    /// Index of the producing node, if any.
    std::optional<std::size_t> producer(const std::string& tensor_id) const;
    /// Indices of consuming nodes, ascending, without duplicates.
    std::span<const std::size_t> consumers(const std::string& tensor_id) const;

    bool is_graph_output(const TensorSpec& t) const { return t.kind == TensorKind::Output; }

    /// Returns a copy with the given tensors marked tile-local.
    WorkloadGraph with_tile_local(std::span<const std::string> tensor_ids) const;

    bool operator==(const WorkloadGraph& other) const;

private:
    void validate();

    std::string name_;
    std::map<std::string, TensorSpec> tensors_;
    std::vector<OperatorNode> nodes_;
    std::map<std::string, std::size_t> node_index_;
    std::map<std::string, std::size_t> producer_;
    std::map<std::string, std::vector<std::size_t>> consumers_;
};

struct Schedule {
    /// Node indices into WorkloadGraph::nodes(), in execution order.
    std::vector<std::size_t> order;

    std::vector<std::string> ids(const WorkloadGraph& g) const;
    std::size_t size() const { return order.size(); }
};

struct StatsReport {
    double weight_mb = 0.0;
    double act_mb = 0.0;
    double gflops = 0.0;
};

WorkloadGraph parse_workload(std::string_view text);
/// Reads and parses a file; errors carry the path.
WorkloadGraph load_workload(const std::string& path);
std::string serialize_workload(const WorkloadGraph& g);

/// Kahn's algorithm; ready nodes are released in ascending node-id order.
Schedule topological_order(const WorkloadGraph& g);

StatsReport tensor_stats(const WorkloadGraph& g);

} // namespace memdse
