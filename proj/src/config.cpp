#include "memdse/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace memdse {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

// Rejects keys outside `allowed`; when `required` is set every key must be present.
void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed, bool required) {
    require_object(j, path);
    for (const auto& [key, value] : j.items()) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError(path + ": unknown key '" + key + "'");
    }
    if (required)
        for (const char* a : allowed)
            if (!j.contains(a)) throw ConfigError(path + ": missing key '" + a + "'");
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

std::int64_t get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return j.get<std::int64_t>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

// Capacities may be written as "32KB" or as a byte count.
std::int64_t get_capacity(const json& j, const std::string& path) {
    if (j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        if (v <= 0) throw ConfigError(path + ": capacity must be positive");
        return v;
    }
    if (j.is_string()) {
        try {
            return parse_capacity(j.get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    throw ConfigError(path + ": expected a capacity such as \"32KB\"");
}

std::vector<std::int64_t> get_capacity_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path + ": expected an array");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_capacity(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

LevelParams parse_level(const json& j, const std::string& path) {
    check_keys(j, path, {"read_pj_per_byte", "write_pj_per_byte", "bandwidth_bytes_per_s", "leakage_pw_per_byte"},
               true);
    LevelParams p;
    p.read_pj_per_byte = get_number(j["read_pj_per_byte"], path + ".read_pj_per_byte");
    p.write_pj_per_byte = get_number(j["write_pj_per_byte"], path + ".write_pj_per_byte");
    p.bandwidth_bytes_per_s = get_number(j["bandwidth_bytes_per_s"], path + ".bandwidth_bytes_per_s");
    p.leakage_pw_per_byte = get_number(j["leakage_pw_per_byte"], path + ".leakage_pw_per_byte");
    return p;
}

constexpr OpClass kAllOps[] = {OpClass::Conv,      OpClass::Gemm,   OpClass::Elementwise,
                               OpClass::Activation, OpClass::Transform, OpClass::Reduce,
                               OpClass::Softmax,   OpClass::Concat, OpClass::DataMovement};

ordered_json level_json(const LevelParams& p) {
    ordered_json j;
    j["read_pj_per_byte"] = p.read_pj_per_byte;
    j["write_pj_per_byte"] = p.write_pj_per_byte;
    j["bandwidth_bytes_per_s"] = p.bandwidth_bytes_per_s;
    j["leakage_pw_per_byte"] = p.leakage_pw_per_byte;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::int64_t parse_capacity(std::string_view text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    std::size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
    if (digits == 0 || digits > 15) throw ConfigError("invalid capacity '" + std::string(text) + "'");
    const auto value = std::stoll(s.substr(0, digits));
    const auto unit = s.substr(digits);
    int shift;
    if (unit.empty() || unit == "B")
        shift = 0;
    else if (unit == "K" || unit == "KB" || unit == "KIB")
        shift = 10;
    else if (unit == "M" || unit == "MB" || unit == "MIB")
        shift = 20;
    else if (unit == "G" || unit == "GB" || unit == "GIB")
        shift = 30;
    else
        throw ConfigError("invalid capacity unit in '" + std::string(text) + "'");
    if (value <= 0) throw ConfigError("capacity must be positive: '" + std::string(text) + "'");
    if (value > (std::numeric_limits<std::int64_t>::max() >> shift))
        throw ConfigError("capacity too large: '" + std::string(text) + "'");
    return value << shift;
}

std::string format_capacity(std::int64_t bytes) {
    static constexpr std::pair<int, const char*> units[] = {{30, "GB"}, {20, "MB"}, {10, "KB"}};
    for (const auto& [shift, name] : units) {
        const std::int64_t unit = std::int64_t{1} << shift;
        if (bytes >= unit && bytes % unit == 0) return std::to_string(bytes / unit) + name;
    }
    return std::to_string(bytes) + "B";
}

TechParams parse_tech_params(std::string_view text) {
    const auto j = parse_json(text, "tech");
    check_keys(j, "tech", {"version", "l1", "llc", "dram", "compute", "dram_capacity_bytes"}, true);
    if (get_integer(j["version"], "tech.version") != 1) throw ConfigError("tech.version: unsupported version");

    TechParams t;
    t.l1 = parse_level(j["l1"], "tech.l1");
    t.llc = parse_level(j["llc"], "tech.llc");
    t.dram = parse_level(j["dram"], "tech.dram");

    const auto& c = j["compute"];
    check_keys(c, "tech.compute", {"lanes", "clock_hz", "ops_per_lane_per_cycle", "pj_per_op"}, true);
    const auto lanes = get_integer(c["lanes"], "tech.compute.lanes");
    if (lanes < 1 || lanes > std::numeric_limits<int>::max()) throw ConfigError("tech.compute.lanes: out of range");
    t.compute.lanes = static_cast<int>(lanes);
    t.compute.clock_hz = get_number(c["clock_hz"], "tech.compute.clock_hz");
    t.compute.ops_per_lane_per_cycle = get_number(c["ops_per_lane_per_cycle"], "tech.compute.ops_per_lane_per_cycle");
    const auto& ops = c["pj_per_op"];
    require_object(ops, "tech.compute.pj_per_op");
    t.compute.pj_per_op.clear();
    for (const auto& [key, value] : ops.items()) {
        OpClass op;
        try {
            op = parse_op_class(key);
        } catch (const Error&) {
            throw ConfigError("tech.compute.pj_per_op: unknown op class '" + key + "'");
        }
        if (std::string_view(key) != to_string(op))
            throw ConfigError("tech.compute.pj_per_op: use the canonical name '" + std::string(to_string(op)) + "'");
        t.compute.pj_per_op[op] = get_number(value, "tech.compute.pj_per_op." + key);
    }
    for (auto op : kAllOps)
        if (!t.compute.pj_per_op.count(op))
            throw ConfigError("tech.compute.pj_per_op: missing '" + std::string(to_string(op)) + "'");

    t.dram_capacity_bytes = get_capacity(j["dram_capacity_bytes"], "tech.dram_capacity_bytes");
    t.validate();
    return t;
}

TechParams load_tech_params(const std::string& path) {
    try {
        return parse_tech_params(read_file(path));
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ConfigError(path + ": " + msg);
    }
}

std::string serialize_tech_params(const TechParams& t) {
    ordered_json j;
    j["version"] = 1;
    j["l1"] = level_json(t.l1);
    j["llc"] = level_json(t.llc);
    j["dram"] = level_json(t.dram);
    ordered_json c;
    c["lanes"] = t.compute.lanes;
    c["clock_hz"] = t.compute.clock_hz;
    c["ops_per_lane_per_cycle"] = t.compute.ops_per_lane_per_cycle;
    ordered_json ops = ordered_json::object();
    for (auto op : kAllOps) {
        auto it = t.compute.pj_per_op.find(op);
        ops[std::string(to_string(op))] = it == t.compute.pj_per_op.end() ? 0.0 : it->second;
    }
    c["pj_per_op"] = ops;
    j["compute"] = c;
    j["dram_capacity_bytes"] = t.dram_capacity_bytes;
    return j.dump(2) + "\n";
}

SweepOptions EngineConfig::sweep_options() const {
    SweepOptions o;
    o.policy = policy;
    o.annealing = annealing;
    o.weights = weights;
    o.seed = seed;
    o.workers = workers;
    return o;
}

EngineConfig parse_engine_config(std::string_view text, const std::string& base_dir) {
    const auto j = parse_json(text, "config");
    check_keys(j,
               "config",
               {"version", "tech", "grid", "mapper", "annealing", "tile_cost", "regime", "seed", "out", "emit_trace",
                "emit_roofline_total", "workers"},
               false);
    if (!j.contains("version") || get_integer(j["version"], "config.version") != 1)
        throw ConfigError("config.version: expected 1");
    if (!j.contains("tech")) throw ConfigError("config: missing key 'tech'");

    EngineConfig cfg;
    std::filesystem::path tech = get_string(j["tech"], "config.tech");
    if (tech.is_relative() && !base_dir.empty()) tech = std::filesystem::path(base_dir) / tech;
    cfg.tech_path = tech.lexically_normal().string();
    cfg.tech = load_tech_params(cfg.tech_path);

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g, "config.grid", {"l1", "llc", "baseline"}, false);
        if (g.contains("l1")) cfg.grid.l1_points = get_capacity_list(g["l1"], "config.grid.l1");
        if (g.contains("llc")) cfg.grid.llc_points = get_capacity_list(g["llc"], "config.grid.llc");
        if (g.contains("baseline")) {
            const auto& b = g["baseline"];
            check_keys(b, "config.grid.baseline", {"l1", "llc"}, true);
            cfg.grid.baseline_l1 = get_capacity(b["l1"], "config.grid.baseline.l1");
            cfg.grid.baseline_llc = get_capacity(b["llc"], "config.grid.baseline.llc");
        }
        cfg.grid.validate();
    }
    if (j.contains("mapper")) {
        const auto& m = j["mapper"];
        check_keys(m, "config.mapper", {"rho", "l1_bookkeeping_bytes", "fusion"}, false);
        if (m.contains("rho")) cfg.policy.rho = get_number(m["rho"], "config.mapper.rho");
        if (m.contains("l1_bookkeeping_bytes"))
            cfg.policy.l1_bookkeeping_bytes = get_integer(m["l1_bookkeeping_bytes"], "config.mapper.l1_bookkeeping_bytes");
        if (m.contains("fusion")) cfg.policy.fusion_enabled = get_bool(m["fusion"], "config.mapper.fusion");
        for (auto l1 : cfg.grid.l1_points) cfg.policy.validate(l1);
    }
    if (j.contains("annealing")) {
        const auto& a = j["annealing"];
        check_keys(a, "config.annealing", {"t0_factor", "t_min_factor", "alpha_t", "l_iters", "delta"}, false);
        auto& s = cfg.annealing;
        if (a.contains("t0_factor")) s.t0_factor = get_number(a["t0_factor"], "config.annealing.t0_factor");
        if (a.contains("t_min_factor")) s.t_min_factor = get_number(a["t_min_factor"], "config.annealing.t_min_factor");
        if (a.contains("alpha_t")) s.alpha_t = get_number(a["alpha_t"], "config.annealing.alpha_t");
        if (a.contains("l_iters")) {
            const auto v = get_integer(a["l_iters"], "config.annealing.l_iters");
            if (v < 1 || v > 1'000'000) throw ConfigError("config.annealing.l_iters: out of range");
            s.l_iters = static_cast<int>(v);
        }
        if (a.contains("delta")) s.delta = get_integer(a["delta"], "config.annealing.delta");
        s.validate();
    }
    if (j.contains("tile_cost")) {
        const auto& w = j["tile_cost"];
        check_keys(w, "config.tile_cost", {"alpha", "beta", "gamma", "normalize"}, false);
        auto& t = cfg.weights;
        if (w.contains("alpha")) t.alpha = get_number(w["alpha"], "config.tile_cost.alpha");
        if (w.contains("beta")) t.beta = get_number(w["beta"], "config.tile_cost.beta");
        if (w.contains("gamma")) t.gamma = get_number(w["gamma"], "config.tile_cost.gamma");
        if (w.contains("normalize")) t.normalize = get_bool(w["normalize"], "config.tile_cost.normalize");
        if (t.alpha < 0 || t.beta < 0 || t.gamma < 0) throw ConfigError("config.tile_cost: weights must be >= 0");
    }
    if (j.contains("regime")) {
        const auto& r = j["regime"];
        check_keys(r, "config.regime", {"saturation_tolerance", "drop_threshold", "dram_fraction_threshold"}, false);
        auto& t = cfg.regime;
        if (r.contains("saturation_tolerance"))
            t.saturation_tolerance = get_number(r["saturation_tolerance"], "config.regime.saturation_tolerance");
        if (r.contains("drop_threshold")) t.drop_threshold = get_number(r["drop_threshold"], "config.regime.drop_threshold");
        if (r.contains("dram_fraction_threshold"))
            t.dram_fraction_threshold =
                get_number(r["dram_fraction_threshold"], "config.regime.dram_fraction_threshold");
    }
    if (j.contains("seed")) {
        const auto& s = j["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
            throw ConfigError("config.seed: expected a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    if (j.contains("out")) cfg.out_dir = get_string(j["out"], "config.out");
    if (j.contains("emit_trace")) cfg.emit_trace = get_bool(j["emit_trace"], "config.emit_trace");
    if (j.contains("emit_roofline_total"))
        cfg.emit_roofline_total = get_bool(j["emit_roofline_total"], "config.emit_roofline_total");
    if (j.contains("workers")) {
        const auto v = get_integer(j["workers"], "config.workers");
        if (v < 0 || v > 1024) throw ConfigError("config.workers: out of range");
        cfg.workers = static_cast<unsigned>(v);
    }
    return cfg;
}

EngineConfig load_engine_config(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path().string();
    try {
        return parse_engine_config(read_file(path), dir);
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ConfigError(path + ": " + msg);
    }
}

} // namespace memdse
