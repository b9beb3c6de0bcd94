#pragma once

// Declarative run configuration (YAML). See configs/ for complete examples.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "qrlbench/aa_agent.hpp"
#include "qrlbench/ansatz.hpp"
#include "qrlbench/envs.hpp"
#include "qrlbench/errors.hpp"
#include "qrlbench/fe_agents.hpp"
#include "qrlbench/pqc_agents.hpp"
#include "qrlbench/qsim.hpp"

namespace qrlbench::harness {

enum class Family { Qpg, Qdqn, Fe, Aa };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::Qpg: return "qpg";
        case Family::Qdqn: return "qdqn";
        case Family::Fe: return "fe";
        case Family::Aa: return "aa";
    }
    return "?";
}

inline Family parse_family(const std::string& s) {
    if (s == "qpg") return Family::Qpg;
    if (s == "qdqn") return Family::Qdqn;
    if (s == "fe") return Family::Fe;
    if (s == "aa") return Family::Aa;
    throw ConfigError("unknown agent family '" + s + "' (expected qpg, qdqn, fe or aa)");
}

inline constexpr const char* kOutputRootEnv = "QRLBENCH_OUTPUT_ROOT";

struct RunConfig {
    std::string name = "experiment";
    std::string environment_id;  // built-in layout id, or empty when a file is used
    std::string layout_path;
    envs::GridworldSpec env;

    Family family = Family::Qpg;
    ansatz::Encoding encoding = ansatz::Encoding::Binary;
    bool encoding_set = false;
    int n_qubits = 0;  // 0: smallest count that fits encoding and actions
    int n_layers = 5;
    ansatz::Variant variant = ansatz::Variant::Full;

    pqc::QpgConfig qpg;
    pqc::QdqnConfig qdqn;
    fe::FeConfig fe;
    aa::AaConfig aa;

    std::vector<std::uint64_t> seeds;
    std::int64_t max_env_steps = 0;
    bool stop_at_threshold = false;
    double threshold_fraction = 0.9;
    std::optional<double> threshold_absolute;
    int rolling_window = 20;
    qsim::TimingModel timing;
    std::filesystem::path output_dir;
    int workers = 1;

    std::map<std::string, std::vector<std::string>> sweep;

    ansatz::AnsatzSpec ansatz_spec() const {
        ansatz::AnsatzSpec s;
        s.n_layers = n_layers;
        s.variant = variant;
        s.encoding = encoding;
        s.n_actions = envs::kNumActions;
        s.n_states = env.n_states();
        s.n_qubits = n_qubits > 0 ? n_qubits : ansatz::count_qubits(encoding, s.n_states, s.n_actions);
        return s;
    }

    fe::FeConfig fe_config() const {
        fe::FeConfig c = fe;
        c.encoding = encoding;
        return c;
    }
};

inline std::int64_t default_budget(const std::string& environment_id) {
    if (environment_id == "gridworld_3x3") return 20000;
    if (environment_id == "gridworld_3x5") return 30000;
    if (environment_id == "frozenlake_4x4") return 50000;
    if (environment_id == "frozenlake_8x8") return 150000;
    return 20000;
}

inline const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes{"ansatz_variant", "replica_count", "encoding"};
    return axes;
}

/// Rejects combinations that cannot run. Called before any run starts.
inline void validate(const RunConfig& c) {
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("name must be non-empty and must not contain path separators");
    }
    c.env.validate();
    if (c.env.is_terminal(c.env.start())) throw ConfigError("start cell is terminal; episodes would be empty");
    if (c.seeds.empty()) throw ConfigError("at least one seed is required");
    if (c.max_env_steps <= 0) throw ConfigError("budget.max_env_steps must be positive");
    if (c.rolling_window < 1) throw ConfigError("metrics.rolling_window must be >= 1");
    if (!(c.threshold_fraction > 0.0 && c.threshold_fraction <= 1.0)) {
        throw ConfigError("metrics.threshold_fraction must lie in (0, 1]");
    }
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    c.timing.validate();
    switch (c.family) {
        case Family::Qpg:
        case Family::Qdqn: {
            const auto s = c.ansatz_spec();
            try {
                s.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(std::string("ansatz: ") + e.what());
            }
            if (c.family == Family::Qpg) c.qpg.validate(); else c.qdqn.validate();
            break;
        }
        case Family::Fe: c.fe_config().validate(); break;
        case Family::Aa:
            c.aa.validate();
            if (c.encoding_set) throw ConfigError("agent.encoding has no effect for the aa family; remove it");
            break;
    }
    for (const auto& [axis, values] : c.sweep) {
        if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end()) {
            throw ConfigError("unknown sweep axis '" + axis + "'");
        }
        if (values.empty()) throw ConfigError("sweep axis '" + axis + "' has no values");
        if (axis == "ansatz_variant" && c.family != Family::Qpg && c.family != Family::Qdqn) {
            throw ConfigError("sweep axis ansatz_variant needs a qpg or qdqn agent");
        }
        if (axis == "replica_count" && c.family != Family::Fe) {
            throw ConfigError("sweep axis replica_count needs an fe agent");
        }
        if (axis == "encoding" && c.family == Family::Aa) {
            throw ConfigError("sweep axis encoding is meaningless for the aa family");
        }
    }
}

namespace detail {

inline void check_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!n) return;
    if (!n.IsMap()) throw ConfigError(where + " must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& where) {
    if (!n || !n[key]) return;
    try {
        out = n[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

inline void read_ms(const YAML::Node& n, const char* key, qsim::Duration& out, const std::string& where) {
    if (!n || !n[key]) return;
    double ms = 0.0;
    read(n, key, ms, where);
    if (!(ms >= 0.0)) throw ConfigError(where + "." + key + " must be >= 0");
    out = qsim::Duration(static_cast<std::int64_t>(std::llround(ms * 1e6)));
}

inline void read_ns(const YAML::Node& n, const char* key, qsim::Duration& out, const std::string& where) {
    if (!n || !n[key]) return;
    std::int64_t ns = 0;
    read(n, key, ns, where);
    out = qsim::Duration(ns);
}

inline std::vector<std::string> string_list(const YAML::Node& n, const std::string& where) {
    if (!n.IsSequence()) throw ConfigError(where + " must be a list");
    std::vector<std::string> out;
    for (const auto& v : n) out.push_back(v.as<std::string>());
    return out;
}

}  // namespace detail

inline ansatz::Encoding require_encoding(const std::string& s) {
    const auto e = ansatz::parse_encoding(s);
    if (!e) throw ConfigError("unknown encoding '" + s + "' (expected one_hot or binary)");
    return *e;
}

inline ansatz::Variant require_variant(const std::string& s) {
    const auto v = ansatz::parse_variant(s);
    if (!v) throw ConfigError("unknown ansatz variant '" + s + "' (expected full, a or b)");
    return *v;
}

/// Parses a config document. Relative layout paths resolve against `base_dir`.
inline RunConfig parse_config(const YAML::Node& root, const std::filesystem::path& base_dir = {}) {
    using detail::read;
    if (!root || !root.IsMap()) throw ConfigError("config must be a mapping");
    detail::check_keys(root, "config",
                       {"name", "environment", "agent", "ansatz", "seeds", "budget", "metrics", "timing", "output",
                        "workers", "sweep"});
    RunConfig c;
    read(root, "name", c.name, "config");

    const auto env = root["environment"];
    if (!env) throw ConfigError("missing 'environment' section");
    detail::check_keys(env, "environment", {"id", "layout"});
    read(env, "id", c.environment_id, "environment");
    read(env, "layout", c.layout_path, "environment");
    if (c.environment_id.empty() == c.layout_path.empty()) {
        throw ConfigError("environment needs exactly one of 'id' or 'layout'");
    }
    if (!c.layout_path.empty()) {
        std::filesystem::path p(c.layout_path);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        c.layout_path = p.lexically_normal().string();
        c.env = envs::load_layout(c.layout_path);
    } else {
        c.env = envs::builtin_layout(c.environment_id);
    }

    const auto agent = root["agent"];
    if (!agent) throw ConfigError("missing 'agent' section");
    detail::check_keys(agent, "agent", {"family", "encoding", "qpg", "qdqn", "fe", "aa"});
    std::string family;
    read(agent, "family", family, "agent");
    if (family.empty()) throw ConfigError("agent.family is required");
    c.family = parse_family(family);
    if (agent["encoding"]) {
        c.encoding = require_encoding(agent["encoding"].as<std::string>());
        c.encoding_set = true;
    }

    if (const auto q = agent["qpg"]) {
        detail::check_keys(q, "agent.qpg", {"lr_circuit", "lr_w", "gamma", "mode", "baseline"});
        read(q, "lr_circuit", c.qpg.lr_circuit, "agent.qpg");
        read(q, "lr_w", c.qpg.lr_w, "agent.qpg");
        read(q, "gamma", c.qpg.gamma, "agent.qpg");
        read(q, "baseline", c.qpg.baseline, "agent.qpg");
        if (q["mode"]) {
            const auto m = pqc::parse_policy_mode(q["mode"].as<std::string>());
            if (!m) throw ConfigError("agent.qpg.mode must be ratio or softmax");
            c.qpg.mode = *m;
        }
    }
    if (const auto q = agent["qdqn"]) {
        detail::check_keys(q, "agent.qdqn",
                           {"lr_circuit", "lr_w", "gamma", "buffer_capacity", "batch_size", "target_update_interval",
                            "eps_start", "eps_end", "eps_decay_fraction"});
        read(q, "lr_circuit", c.qdqn.lr_circuit, "agent.qdqn");
        read(q, "lr_w", c.qdqn.lr_w, "agent.qdqn");
        read(q, "gamma", c.qdqn.gamma, "agent.qdqn");
        read(q, "buffer_capacity", c.qdqn.buffer_capacity, "agent.qdqn");
        read(q, "batch_size", c.qdqn.batch_size, "agent.qdqn");
        read(q, "target_update_interval", c.qdqn.target_update_interval, "agent.qdqn");
        read(q, "eps_start", c.qdqn.eps_start, "agent.qdqn");
        read(q, "eps_end", c.qdqn.eps_end, "agent.qdqn");
        read(q, "eps_decay_fraction", c.qdqn.eps_decay_fraction, "agent.qdqn");
    }
    if (const auto f = agent["fe"]) {
        detail::check_keys(f, "agent.fe",
                           {"hidden_layers", "transverse_field", "beta", "replicas", "estimator", "reads", "sweeps",
                            "beta_start", "beta_end", "include_chain_energy", "anneal_time_ms", "lr", "lr_decay",
                            "gamma", "eps_start", "eps_end", "eps_decay_fraction", "init_scale"});
        auto& e = c.fe;
        read(f, "hidden_layers", e.hidden_layers, "agent.fe");
        read(f, "transverse_field", e.transverse_field, "agent.fe");
        read(f, "beta", e.beta, "agent.fe");
        read(f, "replicas", e.estimator.replicas, "agent.fe");
        read(f, "reads", e.estimator.schedule.reads, "agent.fe");
        read(f, "sweeps", e.estimator.schedule.sweeps, "agent.fe");
        read(f, "beta_start", e.estimator.schedule.beta_start, "agent.fe");
        read(f, "beta_end", e.estimator.schedule.beta_end, "agent.fe");
        read(f, "include_chain_energy", e.estimator.include_chain_energy, "agent.fe");
        detail::read_ms(f, "anneal_time_ms", e.estimator.anneal_charge, "agent.fe");
        read(f, "lr", e.lr, "agent.fe");
        read(f, "lr_decay", e.lr_decay, "agent.fe");
        read(f, "gamma", e.gamma, "agent.fe");
        read(f, "eps_start", e.eps_start, "agent.fe");
        read(f, "eps_end", e.eps_end, "agent.fe");
        read(f, "eps_decay_fraction", e.eps_decay_fraction, "agent.fe");
        read(f, "init_scale", e.init_scale, "agent.fe");
        if (f["estimator"]) {
            const auto k = fe::parse_estimator(f["estimator"].as<std::string>());
            if (!k) throw ConfigError("agent.fe.estimator must be sa or exact");
            e.estimator.kind = *k;
        }
    }
    if (const auto a = agent["aa"]) {
        detail::check_keys(a, "agent.aa", {"k", "alpha", "gamma", "cap_overshoot"});
        read(a, "k", c.aa.k, "agent.aa");
        read(a, "alpha", c.aa.alpha, "agent.aa");
        read(a, "gamma", c.aa.gamma, "agent.aa");
        read(a, "cap_overshoot", c.aa.cap_overshoot, "agent.aa");
    }

    if (const auto a = root["ansatz"]) {
        detail::check_keys(a, "ansatz", {"n_qubits", "n_layers", "variant"});
        if (a["n_qubits"] && a["n_qubits"].as<std::string>() != "auto") read(a, "n_qubits", c.n_qubits, "ansatz");
        read(a, "n_layers", c.n_layers, "ansatz");
        if (a["variant"]) c.variant = require_variant(a["variant"].as<std::string>());
    }

    if (const auto s = root["seeds"]) {
        if (s.IsSequence()) {
            for (const auto& v : s) c.seeds.push_back(v.as<std::uint64_t>());
        } else {
            const auto n = s.as<std::int64_t>();
            if (n < 0) throw ConfigError("seeds must be a count or a list");
            for (std::int64_t i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
        }
    } else {
        for (std::uint64_t i = 0; i < 10; ++i) c.seeds.push_back(i);
    }

    c.max_env_steps = default_budget(c.environment_id);
    if (const auto b = root["budget"]) {
        detail::check_keys(b, "budget", {"max_env_steps", "stop_at_threshold"});
        read(b, "max_env_steps", c.max_env_steps, "budget");
        read(b, "stop_at_threshold", c.stop_at_threshold, "budget");
    }
    if (const auto m = root["metrics"]) {
        detail::check_keys(m, "metrics", {"threshold_fraction", "threshold", "rolling_window"});
        read(m, "threshold_fraction", c.threshold_fraction, "metrics");
        read(m, "rolling_window", c.rolling_window, "metrics");
        if (m["threshold"]) c.threshold_absolute = m["threshold"].as<double>();
    }
    if (const auto t = root["timing"]) {
        detail::check_keys(t, "timing", {"t_1q_ns", "t_2q_ns", "t_meas_ns", "shots"});
        detail::read_ns(t, "t_1q_ns", c.timing.t_1q, "timing");
        detail::read_ns(t, "t_2q_ns", c.timing.t_2q, "timing");
        detail::read_ns(t, "t_meas_ns", c.timing.t_meas, "timing");
        read(t, "shots", c.timing.shots, "timing");
    }

    std::string out = "runs/" + c.name;
    if (const auto o = root["output"]) {
        detail::check_keys(o, "output", {"dir"});
        read(o, "dir", out, "output");
    }
    c.output_dir = out;
    if (c.output_dir.is_relative()) {
        if (const char* env_root = std::getenv(kOutputRootEnv); env_root && *env_root) {
            c.output_dir = std::filesystem::path(env_root) / c.output_dir;
        }
    }

    read(root, "workers", c.workers, "config");

    if (const auto s = root["sweep"]) {
        if (!s.IsMap()) throw ConfigError("sweep must be a mapping of axis -> values");
        for (const auto& kv : s) {
            const auto axis = kv.first.as<std::string>();
            c.sweep[axis] = detail::string_list(kv.second, "sweep." + axis);
        }
    }

    validate(c);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path.string());
    } catch (const YAML::BadFile&) {
        throw ConfigError("cannot open config file " + path.string());
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return parse_config(root, path.parent_path());
    } catch (const YAML::Exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline RunConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir = {}) {
    try {
        return parse_config(YAML::Load(text), base_dir);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace qrlbench::harness
