#include "memdse/graph_ir.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace memdse {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kMiB = 1024.0 * 1024.0;

struct OpName {
    std::string_view name;
    OpClass op;
};

constexpr OpName kOpNames[] = {
    {"Conv", OpClass::Conv},
    {"GEMM", OpClass::Gemm},
    {"Elementwise", OpClass::Elementwise},
    {"Activation", OpClass::Activation},
    {"Transform", OpClass::Transform},
    {"Reduce", OpClass::Reduce},
    {"Softmax", OpClass::Softmax},
    {"Concat", OpClass::Concat},
    {"DataMovement", OpClass::DataMovement},
    // aliases, never emitted
    {"Resample", OpClass::Transform},
    {"Reshape", OpClass::Concat},
    {"MatMul", OpClass::Gemm},
};

std::int64_t sum_numel(const WorkloadGraph& g, const std::vector<std::string>& ids) {
    std::int64_t total = 0;
    for (const auto& id : ids) total += g.tensor(id).numel();
    return total;
}

std::int64_t derive_flops(const WorkloadGraph& g, const OperatorNode& node) {
    switch (node.op_class) {
    case OpClass::Conv: {
        const auto a = conv_attrs(node);
        const auto out = conv_output_dims(a);
        return 2 * a.c_in * a.c_out * a.k_h * a.k_w * out.h * out.w;
    }
    case OpClass::Gemm: {
        const auto a = gemm_attrs(node);
        return 2 * a.m * a.n * a.k;
    }
    case OpClass::Elementwise:
    case OpClass::Activation:
        return sum_numel(g, node.outputs);
    case OpClass::Reduce:
    case OpClass::Softmax:
        return 2 * sum_numel(g, node.inputs);
    case OpClass::Transform:
        return 4 * sum_numel(g, node.outputs);
    case OpClass::Concat:
    case OpClass::DataMovement:
        return 0;
    }
    return 0;
}

void check_numel(const WorkloadGraph& g, const OperatorNode& node, const std::string& tensor_id,
                 std::int64_t expected, std::string_view role) {
    const auto actual = g.tensor(tensor_id).numel();
    if (actual != expected) {
        std::ostringstream os;
        os << "node '" << node.id << "': " << role << " tensor '" << tensor_id << "' has " << actual
           << " elements, attrs imply " << expected;
        throw GraphError(os.str());
    }
}

void check_shapes(const WorkloadGraph& g, const OperatorNode& node) {
    if (node.op_class == OpClass::Conv) {
        if (node.inputs.size() < 2 || node.outputs.empty())
            throw GraphError("node '" + node.id + "': Conv needs inputs [activation, weight, ...] and an output");
        const auto a = conv_attrs(node);
        const auto out = conv_output_dims(a);
        check_numel(g, node, node.inputs[0], a.c_in * a.h_in * a.w_in, "input");
        check_numel(g, node, node.inputs[1], a.c_out * a.c_in * a.k_h * a.k_w, "weight");
        check_numel(g, node, node.outputs[0], a.c_out * out.h * out.w, "output");
    } else if (node.op_class == OpClass::Gemm) {
        if (node.inputs.size() < 2 || node.outputs.empty())
            throw GraphError("node '" + node.id + "': GEMM needs inputs [A, B, ...] and an output");
        const auto a = gemm_attrs(node);
        check_numel(g, node, node.inputs[0], a.m * a.k, "A");
        check_numel(g, node, node.inputs[1], a.k * a.n, "B");
        check_numel(g, node, node.outputs[0], a.m * a.n, "output");
    }
}

// ---------------------------------------------------------------------------
// JSON schema helpers

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ParseError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing key '") + key + "'");
    return *it;
}

std::string get_string(const json& v, const std::string& where) {
    if (!v.is_string()) schema_error(where, "expected a string");
    return v.get<std::string>();
}

std::int64_t get_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) schema_error(where, "expected an integer");
    return v.get<std::int64_t>();
}

std::vector<std::string> get_string_list(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected a list of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_string(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            schema_error(where, "unknown key '" + it.key() + "'");
    }
}

std::pair<int, int> line_col(std::string_view text, std::size_t byte) {
    int line = 1;
    int col = 1;
    const auto end = std::min(byte > 0 ? byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(TensorKind kind) {
    switch (kind) {
    case TensorKind::Weight: return "weight";
    case TensorKind::Activation: return "activation";
    case TensorKind::Input: return "input";
    case TensorKind::Output: return "output";
    }
    return "activation";
}

std::string_view to_string(OpClass op) {
    for (const auto& e : kOpNames)
        if (e.op == op) return e.name;
    return "Elementwise";
}

TensorKind parse_tensor_kind(std::string_view text) {
    if (text == "weight") return TensorKind::Weight;
    if (text == "activation") return TensorKind::Activation;
    if (text == "input") return TensorKind::Input;
    if (text == "output") return TensorKind::Output;
    throw ParseError("unknown tensor kind '" + std::string(text) + "'");
}

OpClass parse_op_class(std::string_view text) {
    for (const auto& e : kOpNames)
        if (e.name == text) return e.op;
    throw ParseError("unknown op_class '" + std::string(text) + "'");
}

std::int64_t TensorSpec::numel() const {
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::int64_t OperatorNode::attr(const std::string& key) const {
    auto it = attrs.find(key);
    if (it == attrs.end()) throw GraphError("node '" + id + "': missing attribute '" + key + "'");
    return it->second;
}

ConvAttrs conv_attrs(const OperatorNode& node) {
    ConvAttrs a;
    a.k_h = node.attr("K_h");
    a.k_w = node.attr("K_w");
    a.stride = node.attr("stride");
    a.pad = node.attr("pad");
    a.c_in = node.attr("C_in");
    a.c_out = node.attr("C_out");
    a.h_in = node.attr("H_in");
    a.w_in = node.attr("W_in");
    return a;
}

GemmAttrs gemm_attrs(const OperatorNode& node) {
    return {node.attr("M"), node.attr("N"), node.attr("K")};
}

OutputDims conv_output_dims(const ConvAttrs& a) {
    if (a.k_h < 1 || a.k_w < 1 || a.stride < 1 || a.pad < 0 || a.c_in < 1 || a.c_out < 1 || a.h_in < 1 || a.w_in < 1)
        throw GraphError("invalid conv geometry: extents and stride must be >= 1, pad >= 0");
    const auto h_span = a.h_in - a.k_h + 2 * a.pad;
    const auto w_span = a.w_in - a.k_w + 2 * a.pad;
    if (h_span < 0 || w_span < 0)
        throw GraphError("invalid conv geometry: kernel exceeds padded input");
    return {h_span / a.stride + 1, w_span / a.stride + 1};
}

// ---------------------------------------------------------------------------

WorkloadGraph::WorkloadGraph(std::string name, std::vector<TensorSpec> tensors, std::vector<OperatorNode> nodes)
    : name_(std::move(name)), nodes_(std::move(nodes)) {
    for (auto& t : tensors) {
        const auto id = t.id;
        if (!tensors_.emplace(id, std::move(t)).second)
            throw GraphError("duplicate tensor id '" + id + "'");
    }
    validate();
}

void WorkloadGraph::validate() {
    for (const auto& [id, t] : tensors_) {
        if (id.empty()) throw GraphError("empty tensor id");
        if (t.dims.empty()) throw GraphError("tensor '" + id + "' has no dims");
        for (auto d : t.dims)
            if (d < 1) throw GraphError("tensor '" + id + "' has a non-positive extent");
        if (t.element_bytes != 1 && t.element_bytes != 2 && t.element_bytes != 4)
            throw GraphError("tensor '" + id + "': element_bytes must be 1, 2 or 4");
    }

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.id.empty()) throw GraphError("empty node id");
        if (!node_index_.emplace(n.id, i).second) throw GraphError("duplicate node id '" + n.id + "'");
        if (n.outputs.empty()) throw GraphError("node '" + n.id + "' has no outputs");
        for (const auto& list : {&n.inputs, &n.outputs})
            for (const auto& tid : *list)
                if (!tensors_.count(tid))
                    throw GraphError("node '" + n.id + "' references undeclared tensor '" + tid + "'");
        for (const auto& tid : n.outputs) {
            auto [it, inserted] = producer_.emplace(tid, i);
            if (!inserted)
                throw GraphError("tensor '" + tid + "' has multiple producers ('" + nodes_[it->second].id +
                                 "', '" + n.id + "')");
        }
        for (const auto& tid : n.inputs) {
            auto& c = consumers_[tid];
            if (c.empty() || c.back() != i) c.push_back(i);
        }
    }

    for (const auto& [id, t] : tensors_) {
        const bool produced = producer_.count(id) > 0;
        if ((t.kind == TensorKind::Weight || t.kind == TensorKind::Input) && produced)
            throw GraphError(std::string(to_string(t.kind)) + " tensor '" + id + "' must not have a producer");
        if ((t.kind == TensorKind::Activation || t.kind == TensorKind::Output) && !produced)
            throw GraphError("tensor '" + id + "' has no producer");
    }

    // Cycle check (Kahn); the ordering itself is topological_order's job.
    std::vector<int> indegree(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        for (const auto& tid : nodes_[i].inputs)
            if (producer_.count(tid)) ++indegree[i];
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto i = ready.back();
        ready.pop_back();
        ++visited;
        for (const auto& tid : nodes_[i].outputs) {
            auto it = consumers_.find(tid);
            if (it == consumers_.end()) continue;
            for (auto c : it->second) {
                // a node consuming the same tensor twice was counted twice
                const auto uses = std::count(nodes_[c].inputs.begin(), nodes_[c].inputs.end(), tid);
                indegree[c] -= static_cast<int>(uses);
                if (indegree[c] == 0) ready.push_back(c);
            }
        }
    }
    if (visited != nodes_.size()) throw GraphError("cycle detected in operator graph '" + name_ + "'");

    for (auto& n : nodes_) {
        check_shapes(*this, n);
        n.flops = derive_flops(*this, n);
    }
}

const TensorSpec& WorkloadGraph::tensor(const std::string& id) const {
    auto it = tensors_.find(id);
    if (it == tensors_.end()) throw GraphError("unknown tensor '" + id + "'");
    return it->second;
}

std::size_t WorkloadGraph::node_index(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw GraphError("unknown node '" + id + "'");
    return it->second;
}

std::optional<std::size_t> WorkloadGraph::producer(const std::string& tensor_id) const {
    auto it = producer_.find(tensor_id);
    if (it == producer_.end()) return std::nullopt;
    return it->second;
}

std::span<const std::size_t> WorkloadGraph::consumers(const std::string& tensor_id) const {
    auto it = consumers_.find(tensor_id);
    if (it == consumers_.end()) return {};
    return it->second;
}

WorkloadGraph WorkloadGraph::with_tile_local(std::span<const std::string> tensor_ids) const {
    WorkloadGraph copy = *this;
    for (const auto& id : tensor_ids) {
        auto it = copy.tensors_.find(id);
        if (it == copy.tensors_.end()) throw GraphError("unknown tensor '" + id + "'");
        it->second.tile_local = true;
    }
    return copy;
}

bool WorkloadGraph::operator==(const WorkloadGraph& other) const {
    return name_ == other.name_ && tensors_ == other.tensors_ && nodes_ == other.nodes_;
}

std::vector<std::string> Schedule::ids(const WorkloadGraph& g) const {
    std::vector<std::string> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(g.nodes()[i].id);
    return out;
}

// ---------------------------------------------------------------------------

WorkloadGraph parse_workload(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::ostringstream os;
        os << "syntax error at line " << line << ", column " << col << ": " << e.what();
        throw ParseError(os.str(), line, col);
    }
    if (!doc.is_object()) schema_error("$", "expected an object at top level");
    reject_unknown(doc, {"name", "tensors", "nodes"}, "$");

    const auto name = get_string(require(doc, "name", "$"), "$.name");

    std::vector<TensorSpec> tensors;
    const auto& jt = require(doc, "tensors", "$");
    if (!jt.is_array()) schema_error("$.tensors", "expected a list");
    for (std::size_t i = 0; i < jt.size(); ++i) {
        const std::string where = "$.tensors[" + std::to_string(i) + "]";
        const auto& e = jt[i];
        if (!e.is_object()) schema_error(where, "expected an object");
        reject_unknown(e, {"id", "dims", "element_bytes", "kind", "tile_local"}, where);
        TensorSpec t;
        t.id = get_string(require(e, "id", where), where + ".id");
        const auto& dims = require(e, "dims", where);
        if (!dims.is_array()) schema_error(where + ".dims", "expected a list of integers");
        for (std::size_t d = 0; d < dims.size(); ++d)
            t.dims.push_back(get_int(dims[d], where + ".dims[" + std::to_string(d) + "]"));
        if (e.contains("element_bytes"))
            t.element_bytes = static_cast<int>(get_int(e["element_bytes"], where + ".element_bytes"));
        try {
            t.kind = parse_tensor_kind(get_string(require(e, "kind", where), where + ".kind"));
        } catch (const ParseError& err) {
            schema_error(where + ".kind", err.what());
        }
        if (e.contains("tile_local")) {
            if (!e["tile_local"].is_boolean()) schema_error(where + ".tile_local", "expected a boolean");
            t.tile_local = e["tile_local"].get<bool>();
        }
        tensors.push_back(std::move(t));
    }

    std::vector<OperatorNode> nodes;
    const auto& jn = require(doc, "nodes", "$");
    if (!jn.is_array()) schema_error("$.nodes", "expected a list");
    for (std::size_t i = 0; i < jn.size(); ++i) {
        const std::string where = "$.nodes[" + std::to_string(i) + "]";
        const auto& e = jn[i];
        if (!e.is_object()) schema_error(where, "expected an object");
        reject_unknown(e, {"id", "op_class", "inputs", "outputs", "attrs"}, where);
        OperatorNode n;
        n.id = get_string(require(e, "id", where), where + ".id");
        try {
            n.op_class = parse_op_class(get_string(require(e, "op_class", where), where + ".op_class"));
        } catch (const ParseError& err) {
            schema_error(where + ".op_class", err.what());
        }
        n.inputs = get_string_list(require(e, "inputs", where), where + ".inputs");
        n.outputs = get_string_list(require(e, "outputs", where), where + ".outputs");
        if (e.contains("attrs")) {
            const auto& a = e["attrs"];
            if (!a.is_object()) schema_error(where + ".attrs", "expected an object");
            for (auto it = a.begin(); it != a.end(); ++it)
                n.attrs[it.key()] = get_int(it.value(), where + ".attrs." + it.key());
        }
        nodes.push_back(std::move(n));
    }

    return WorkloadGraph(name, std::move(tensors), std::move(nodes));
}

WorkloadGraph load_workload(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_workload(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line(), e.column());
    } catch (const GraphError& e) {
        throw GraphError(path + ": " + e.what());
    }
}

std::string serialize_workload(const WorkloadGraph& g) {
    ordered_json doc;
    doc["name"] = g.name();
    auto tensors = ordered_json::array();
    for (const auto& [id, t] : g.tensors()) {
        ordered_json e;
        e["id"] = t.id;
        e["dims"] = t.dims;
        e["element_bytes"] = t.element_bytes;
        e["kind"] = std::string(to_string(t.kind));
        if (t.tile_local) e["tile_local"] = true;
        tensors.push_back(std::move(e));
    }
    doc["tensors"] = std::move(tensors);
    auto nodes = ordered_json::array();
    for (const auto& n : g.nodes()) {
        ordered_json e;
        e["id"] = n.id;
        e["op_class"] = std::string(to_string(n.op_class));
        e["inputs"] = n.inputs;
        e["outputs"] = n.outputs;
        auto attrs = ordered_json::object();
        for (const auto& [k, v] : n.attrs) attrs[k] = v;
        e["attrs"] = std::move(attrs);
        nodes.push_back(std::move(e));
    }
    doc["nodes"] = std::move(nodes);
    return doc.dump(2) + "\n";
}

Schedule topological_order(const WorkloadGraph& g) {
    const auto& nodes = g.nodes();
    std::vector<int> indegree(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (const auto& tid : nodes[i].inputs)
            if (g.producer(tid)) ++indegree[i];

    auto by_id = [&](std::size_t a, std::size_t b) { return nodes[a].id > nodes[b].id; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_id)> ready(by_id);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (indegree[i] == 0) ready.push(i);

    Schedule s;
    s.order.reserve(nodes.size());
    while (!ready.empty()) {
        const auto i = ready.top();
        ready.pop();
        s.order.push_back(i);
        for (const auto& tid : nodes[i].outputs) {
            for (auto c : g.consumers(tid)) {
                const auto uses = std::count(nodes[c].inputs.begin(), nodes[c].inputs.end(), tid);
                indegree[c] -= static_cast<int>(uses);
                if (indegree[c] == 0) ready.push(c);
            }
        }
    }
    return s;
}

StatsReport tensor_stats(const WorkloadGraph& g) {
    std::int64_t weight_bytes = 0;
    std::int64_t act_bytes = 0;
    for (const auto& [id, t] : g.tensors()) {
        if (t.kind == TensorKind::Weight)
            weight_bytes += t.footprint_bytes();
        else
            act_bytes += t.footprint_bytes();
    }
    std::int64_t flops = 0;
    for (const auto& n : g.nodes()) flops += n.flops;
    return {weight_bytes / kMiB, act_bytes / kMiB, static_cast<double>(flops) / 1e9};
}

} // namespace memdse
