#include "memdse/synth.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "memdse/mapper.hpp"
#include "memdse/residency.hpp"
#include "memdse/rng.hpp"

namespace memdse {

namespace {

using Params = std::map<std::string, std::int64_t>;

const std::map<std::string, Params>& all_defaults() {
    static const std::map<std::string, Params> d = {
        {"encoder_decoder_cnn", {{"depth", 4}, {"width", 16}, {"resolution", 64}, {"blocks", 2}, {"in_channels", 3}}},
        {"cost_volume", {{"levels", 3}, {"width", 16}, {"resolution", 128}, {"radius", 3}}},
        {"attention_matcher", {{"tokens", 256}, {"dim", 128}, {"layers", 4}}},
        {"mlp_ray", {{"rays", 1024}, {"samples", 32}, {"hidden", 128}, {"depth", 6}, {"chunks", 4}}},
        {"probe_reuse", {{"live_mb", 24}, {"channels", 64}, {"skips", 5}}},
        {"probe_stream", {{"tensor_mb", 96}, {"stages", 4}}},
    };
    return d;
}

// Accumulates tensors and nodes with zero-padded ids so that the id order of
// nodes follows creation order.
class Builder {
public:
    explicit Builder(std::string name) : name_(std::move(name)) {}

    std::string tensor(std::vector<std::int64_t> dims, TensorKind kind) {
        char id[16];
        std::snprintf(id, sizeof id, "t%05d", static_cast<int>(tensors_.size()));
        tensors_.push_back({id, std::move(dims), 4, kind, false});
        return id;
    }

    const std::vector<std::int64_t>& dims(const std::string& id) const {
        for (const auto& t : tensors_)
            if (t.id == id) return t.dims;
        throw GraphError("builder: unknown tensor " + id);
    }

    void node(OpClass op, const char* tag, std::vector<std::string> inputs, std::vector<std::string> outputs,
              std::map<std::string, std::int64_t> attrs = {}) {
        char id[48];
        std::snprintf(id, sizeof id, "n%05d_%s", static_cast<int>(nodes_.size()), tag);
        OperatorNode n;
        n.id = id;
        n.op_class = op;
        n.inputs = std::move(inputs);
        n.outputs = std::move(outputs);
        n.attrs = std::move(attrs);
        nodes_.push_back(std::move(n));
    }

    std::string conv_weight(std::int64_t cin, std::int64_t cout, std::int64_t k) {
        return tensor({cout, cin, k, k}, TensorKind::Weight);
    }

    // x is [1, cin, h, w]; returns [1, cout, h_out, w_out].
    std::string conv(const std::string& x, std::int64_t cout, std::int64_t k, std::int64_t stride,
                     const std::string& weight = {}) {
        const auto& d = dims(x);
        const auto cin = d[1], h = d[2], w = d[3];
        const auto pad = k / 2;
        ConvAttrs a{k, k, stride, pad, cin, cout, h, w};
        const auto out = conv_output_dims(a);
        const auto wt = weight.empty() ? conv_weight(cin, cout, k) : weight;
        const auto y = tensor({1, cout, out.h, out.w}, TensorKind::Activation);
        node(OpClass::Conv, "conv", {x, wt}, {y},
             {{"K_h", k}, {"K_w", k}, {"stride", stride}, {"pad", pad}, {"C_in", cin}, {"C_out", cout}, {"H_in", h},
              {"W_in", w}});
        return y;
    }

    std::string unary(OpClass op, const char* tag, const std::string& x, std::vector<std::int64_t> out_dims = {}) {
        const auto y = tensor(out_dims.empty() ? dims(x) : std::move(out_dims), TensorKind::Activation);
        node(op, tag, {x}, {y});
        return y;
    }

    std::string relu(const std::string& x) { return unary(OpClass::Activation, "relu", x); }

    std::string binary(OpClass op, const char* tag, const std::string& a, const std::string& b,
                       std::vector<std::int64_t> out_dims) {
        const auto y = tensor(std::move(out_dims), TensorKind::Activation);
        node(op, tag, {a, b}, {y});
        return y;
    }

    std::string add(const std::string& a, const std::string& b) {
        return binary(OpClass::Elementwise, "add", a, b, dims(a));
    }

    std::string concat(const std::vector<std::string>& xs, std::vector<std::int64_t> out_dims) {
        const auto y = tensor(std::move(out_dims), TensorKind::Activation);
        node(OpClass::Concat, "concat", xs, {y});
        return y;
    }

    // a is [m, k], b is [k, n].
    std::string gemm(const std::string& a, const std::string& b) {
        const auto m = dims(a)[0], k = dims(a)[1], n = dims(b)[1];
        const auto y = tensor({m, n}, TensorKind::Activation);
        node(OpClass::Gemm, "gemm", {a, b}, {y}, {{"M", m}, {"N", n}, {"K", k}});
        return y;
    }

    std::string linear(const std::string& a, std::int64_t n) {
        return gemm(a, tensor({dims(a)[1], n}, TensorKind::Weight));
    }

    WorkloadGraph finish(const std::vector<std::string>& outputs) {
        for (auto& t : tensors_)
            for (const auto& o : outputs)
                if (t.id == o) t.kind = TensorKind::Output;
        return WorkloadGraph(name_, tensors_, nodes_);
    }

private:
    std::string name_;
    std::vector<TensorSpec> tensors_;
    std::vector<OperatorNode> nodes_;
};

std::int64_t param(const Params& p, const char* key) { return p.at(key); }

WorkloadGraph encoder_decoder_cnn(const Params& p, Rng& rng) {
    const auto depth = param(p, "depth"), width = param(p, "width"), res = param(p, "resolution");
    const auto blocks = param(p, "blocks");
    if (res % (std::int64_t{1} << (depth - 1)) != 0)
        throw ConfigError("encoder_decoder_cnn: resolution must be divisible by 2^(depth-1)");

    Builder b("encoder_decoder_cnn");
    auto x = b.tensor({1, param(p, "in_channels"), res, res}, TensorKind::Input);
    x = b.relu(b.conv(x, width, 3, 1));

    // Residual blocks are drawn from the seed.
    auto block = [&](std::string in, std::int64_t c) {
        auto y = b.conv(in, c, 3, 1);
        if (rng.coin() && b.dims(in) == b.dims(y)) y = b.add(y, in);
        return b.relu(y);
    };

    std::vector<std::string> skips;
    for (std::int64_t l = 0; l < depth; ++l) {
        const auto c = width << l;
        for (std::int64_t i = 0; i < blocks; ++i) x = block(x, c);
        skips.push_back(x);
        if (l + 1 < depth) x = b.relu(b.conv(x, c * 2, 3, 2));
    }
    for (std::int64_t l = depth - 2; l >= 0; --l) {
        const auto c = width << l;
        const auto r = res >> l;
        const auto c_deep = b.dims(x)[1];
        const auto up = b.unary(OpClass::Transform, "upsample", x, {1, c_deep, r, r});
        x = b.concat({up, skips[l]}, {1, c_deep + c, r, r});
        x = b.relu(b.conv(x, c, 3, 1));
        for (std::int64_t i = 1; i < blocks; ++i) x = block(x, c);
    }
    const auto logits = b.conv(x, 1, 3, 1);
    const auto out = b.unary(OpClass::Activation, "sigmoid", logits);
    return b.finish({out});
}

WorkloadGraph cost_volume(const Params& p, Rng& rng) {
    const auto levels = param(p, "levels"), width = param(p, "width"), res = param(p, "resolution");
    const auto radius = param(p, "radius");
    if (res % (std::int64_t{1} << levels) != 0) throw ConfigError("cost_volume: resolution must be divisible by 2^levels");
    const auto disp = (2 * radius + 1) * (2 * radius + 1);

    Builder b("cost_volume");
    auto f1 = b.tensor({1, 3, res, res}, TensorKind::Input);
    auto f2 = b.tensor({1, 3, res, res}, TensorKind::Input);
    std::vector<std::string> p1, p2;
    for (std::int64_t l = 0; l < levels; ++l) {
        // Both images share the pyramid weights.
        const auto w = b.conv_weight(b.dims(f1)[1], width << l, 3);
        f1 = b.relu(b.conv(f1, width << l, 3, 2, w));
        f2 = b.relu(b.conv(f2, width << l, 3, 2, w));
        p1.push_back(f1);
        p2.push_back(f2);
    }

    std::string flow;
    for (std::int64_t l = levels - 1; l >= 0; --l) {
        const auto r = res >> (l + 1);
        const auto c = width << l;
        std::string cat;
        if (flow.empty()) {
            const auto corr = b.binary(OpClass::Transform, "correlate", p1[l], p2[l], {1, disp, r, r});
            cat = b.concat({corr, p1[l]}, {1, disp + c, r, r});
        } else {
            const auto up = b.unary(OpClass::Transform, "upsample", flow, {1, 2, r, r});
            const auto warped = b.binary(OpClass::Transform, "warp", p2[l], up, {1, c, r, r});
            const auto corr = b.binary(OpClass::Transform, "correlate", p1[l], warped, {1, disp, r, r});
            cat = b.concat({corr, p1[l], up}, {1, disp + c + 2, r, r});
        }
        const std::int64_t est = 32 + 16 * static_cast<std::int64_t>(rng.below(3));
        auto h = b.relu(b.conv(cat, est, 3, 1));
        h = b.relu(b.conv(h, est / 2, 3, 1));
        flow = b.conv(h, 2, 3, 1);
    }
    const auto out = b.unary(OpClass::Transform, "upsample", flow, {1, 2, res, res});
    return b.finish({out});
}

WorkloadGraph attention_matcher(const Params& p, Rng& rng) {
    const auto n = param(p, "tokens"), d = param(p, "dim"), layers = param(p, "layers");
    Builder b("attention_matcher");
    std::string x[2] = {b.tensor({n, d}, TensorKind::Input), b.tensor({n, d}, TensorKind::Input)};

    auto attend = [&](const std::string& q_in, const std::string& kv_in, std::int64_t ffn) {
        const auto q = b.linear(q_in, d);
        const auto k = b.linear(kv_in, d);
        const auto v = b.linear(kv_in, d);
        const auto kt = b.unary(OpClass::DataMovement, "transpose", k, {d, n});
        const auto s = b.gemm(q, kt);
        const auto a = b.unary(OpClass::Softmax, "softmax", s);
        const auto o = b.linear(b.gemm(a, v), d);
        const auto r = b.add(q_in, o);
        const auto h = b.relu(b.linear(r, ffn * d));
        return b.add(r, b.linear(h, d));
    };

    for (std::int64_t l = 0; l < layers; ++l) {
        const bool cross = l % 2 == 1;
        const std::int64_t ffn = rng.coin() ? 4 : 2;
        const auto y0 = attend(x[0], cross ? x[1] : x[0], ffn);
        const auto y1 = attend(x[1], cross ? x[0] : x[1], ffn);
        x[0] = y0;
        x[1] = y1;
    }
    const auto t = b.unary(OpClass::DataMovement, "transpose", x[1], {d, n});
    const auto scores = b.gemm(x[0], t);
    const auto out = b.unary(OpClass::Softmax, "softmax", scores);
    return b.finish({out});
}

WorkloadGraph mlp_ray(const Params& p, Rng& rng) {
    const auto rays = param(p, "rays"), samples = param(p, "samples"), hidden = param(p, "hidden");
    const auto depth = param(p, "depth"), chunks = param(p, "chunks");
    if (rays % chunks != 0) throw ConfigError("mlp_ray: rays must be divisible by chunks");
    if (depth < 2) throw ConfigError("mlp_ray: depth must be >= 2");
    constexpr std::int64_t enc = 63;   // positional encoding width
    const auto m = rays / chunks * samples;

    Builder b("mlp_ray");
    // The position is re-injected at one hidden layer chosen by the seed.
    const auto skip_at = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(depth - 1)));
    std::vector<std::string> weights;
    weights.push_back(b.tensor({enc, hidden}, TensorKind::Weight));
    for (std::int64_t i = 1; i < depth; ++i)
        weights.push_back(b.tensor({i == skip_at ? hidden + enc : hidden, hidden}, TensorKind::Weight));
    const auto w_out = b.tensor({hidden, 4}, TensorKind::Weight);

    std::vector<std::string> colors;
    for (std::int64_t c = 0; c < chunks; ++c) {
        const auto pos = b.tensor({m, enc}, TensorKind::Input);
        auto h = b.relu(b.gemm(pos, weights[0]));
        for (std::int64_t i = 1; i < depth; ++i) {
            if (i == skip_at) h = b.concat({h, pos}, {m, hidden + enc});
            h = b.relu(b.gemm(h, weights[i]));
        }
        const auto rgba = b.gemm(h, w_out);
        colors.push_back(b.unary(OpClass::Reduce, "render", rgba, {rays / chunks, 3}));
    }
    const auto out = b.concat(colors, {rays, 3});
    return b.finish({out});
}

WorkloadGraph probe_reuse_at(std::int64_t channels, std::int64_t skips, std::int64_t res) {
    Builder b("probe_reuse");
    auto x = b.tensor({1, channels, res, res}, TensorKind::Input);
    std::vector<std::string> saved;
    for (std::int64_t i = 0; i < skips; ++i) {
        x = b.relu(b.conv(x, channels, 3, 1));
        saved.push_back(x);
    }
    for (std::int64_t i = skips - 2; i >= 0; --i) x = b.relu(b.conv(b.add(x, saved[i]), channels, 3, 1));
    const auto out = b.conv(x, channels, 3, 1);
    return b.finish({out});
}

std::int64_t fused_peak(const WorkloadGraph& g) {
    const auto prepared = prepare_workload(g, MapperPolicy{});
    return peak_live_bytes(prepared.graph, live_intervals(prepared.graph, prepared.schedule));
}

// Picks the resolution (a multiple of 8) whose peak live set is closest to the target.
WorkloadGraph probe_reuse(const Params& p, Rng&) {
    const auto channels = param(p, "channels"), skips = param(p, "skips");
    if (skips < 2) throw ConfigError("probe_reuse: skips must be >= 2");
    const double target = static_cast<double>(param(p, "live_mb")) * (1 << 20);
    std::int64_t best_res = 8;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::int64_t res = 8; res <= 1024; res += 8) {
        const double err = std::abs(static_cast<double>(fused_peak(probe_reuse_at(channels, skips, res))) - target);
        if (err < best_err) {
            best_err = err;
            best_res = res;
        }
        if (static_cast<double>(channels * res * res * 4) > target) break;
    }
    return probe_reuse_at(channels, skips, best_res);
}

// A chain of transforms over tensors that never fit on chip.
WorkloadGraph probe_stream(const Params& p, Rng&) {
    const auto mb = param(p, "tensor_mb"), stages = param(p, "stages");
    if (mb % 4 != 0) throw ConfigError("probe_stream: tensor_mb must be a multiple of 4");
    Builder b("probe_stream");
    auto x = b.tensor({1, mb / 4, 1024, 1024}, TensorKind::Input);
    for (std::int64_t i = 0; i < stages; ++i) x = b.unary(OpClass::Transform, "transform", x);
    return b.finish({x});
}

} // namespace

std::vector<std::string> synthetic_families() {
    std::vector<std::string> out;
    for (const auto& [name, params] : all_defaults()) out.push_back(name);
    return out;
}

std::map<std::string, std::int64_t> family_defaults(const std::string& family) {
    auto it = all_defaults().find(family);
    if (it == all_defaults().end()) throw ConfigError("unknown workload family '" + family + "'");
    return it->second;
}

WorkloadGraph generate_workload(const SyntheticFamilySpec& spec) {
    auto params = family_defaults(spec.family);
    for (const auto& [key, value] : spec.params) {
        auto it = params.find(key);
        if (it == params.end()) throw ConfigError(spec.family + ": unknown parameter '" + key + "'");
        if (value < 1) throw ConfigError(spec.family + ": parameter '" + key + "' must be >= 1");
        if (value > (std::int64_t{1} << 20)) throw ConfigError(spec.family + ": parameter '" + key + "' is too large");
        it->second = value;
    }
    Rng rng(derive_seed(spec.seed, spec.family, 0));
    try {
        if (spec.family == "encoder_decoder_cnn") return encoder_decoder_cnn(params, rng);
        if (spec.family == "cost_volume") return cost_volume(params, rng);
        if (spec.family == "attention_matcher") return attention_matcher(params, rng);
        if (spec.family == "mlp_ray") return mlp_ray(params, rng);
        if (spec.family == "probe_reuse") return probe_reuse(params, rng);
        return probe_stream(params, rng);
    } catch (const GraphError& e) {
        throw ConfigError(spec.family + ": parameters give an invalid graph: " + e.what());
    }
}

} // namespace memdse
