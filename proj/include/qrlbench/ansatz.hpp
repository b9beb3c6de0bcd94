#pragma once

// Hardware-efficient data re-uploading ansatz. Each layer is an encoding
// block (RX(lambda * x) per qubit), a variational block (RY(theta), RZ(theta)
// per qubit) and, for the FULL variant, a ring of CZ gates. Two ablations
// drop the entangling block: NO_ENT keeps the per-qubit encoding, and
// NO_ENT_FULL_ENCODING uploads every feature on every qubit.

#include <bit>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrlbench/errors.hpp"
#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench::ansatz {

enum class Variant { Full, NoEntanglement, NoEntanglementFullEncoding };
enum class Encoding { OneHot, Binary };

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::NoEntanglement: return "a";
        case Variant::NoEntanglementFullEncoding: return "b";
    }
    return "?";
}

inline std::string_view to_string(Encoding e) { return e == Encoding::OneHot ? "one_hot" : "binary"; }

inline std::optional<Variant> parse_variant(std::string_view s) {
    if (s == "full" || s == "FULL") return Variant::Full;
    if (s == "a" || s == "A" || s == "A_NO_ENT" || s == "no_ent") return Variant::NoEntanglement;
    if (s == "b" || s == "B" || s == "B_NO_ENT_FULL_ENCODING" || s == "no_ent_full_encoding") {
        return Variant::NoEntanglementFullEncoding;
    }
    return std::nullopt;
}

inline std::optional<Encoding> parse_encoding(std::string_view s) {
    if (s == "one_hot" || s == "onehot" || s == "ONE_HOT") return Encoding::OneHot;
    if (s == "binary" || s == "BINARY") return Encoding::Binary;
    return std::nullopt;
}

inline int ceil_log2(int n) { return n <= 1 ? 0 : std::bit_width(static_cast<unsigned>(n - 1)); }

/// Feature length produced by encode_state for this encoding.
inline int feature_dim(Encoding e, int n_states) { return e == Encoding::OneHot ? n_states : ceil_log2(n_states); }

/// Encodes a discrete state as a +-1 vector. BINARY lists bits most significant first.
inline std::vector<double> encode_state(Encoding e, int state, int n_states) {
    if (n_states < 2) throw ArgumentError("need at least two states to encode");
    if (state < 0 || state >= n_states) {
        throw IndexError("state " + std::to_string(state) + " out of range [0, " + std::to_string(n_states) + ")");
    }
    const int d = feature_dim(e, n_states);
    std::vector<double> x(static_cast<std::size_t>(d), -1.0);
    if (e == Encoding::OneHot) {
        x[static_cast<std::size_t>(state)] = 1.0;
    } else {
        for (int j = 0; j < d; ++j) {
            if ((state >> (d - 1 - j)) & 1) x[static_cast<std::size_t>(j)] = 1.0;
        }
    }
    return x;
}

inline int count_qubits(Encoding e, int n_states, int n_actions) {
    if (n_states < 2) throw ArgumentError("need at least two states");
    return std::max(feature_dim(e, n_states), n_actions);
}

struct AnsatzSpec {
    int n_qubits = 4;
    int n_layers = 5;
    Variant variant = Variant::Full;
    Encoding encoding = Encoding::Binary;
    int n_actions = 4;
    int n_states = 9;

    int features() const { return feature_dim(encoding, n_states); }

    std::size_t theta_count() const { return static_cast<std::size_t>(2 * n_layers * n_qubits); }
    std::size_t lambda_count() const {
        const auto per_layer = static_cast<std::size_t>(n_qubits) *
                               (variant == Variant::NoEntanglementFullEncoding ? static_cast<std::size_t>(features()) : 1);
        return per_layer * static_cast<std::size_t>(n_layers);
    }
    std::size_t circuit_param_count() const { return theta_count() + lambda_count(); }

    void validate() const {
        if (n_layers < 1) throw ConfigError("ansatz needs at least one layer");
        if (n_qubits < 1 || n_qubits > qsim::kMaxQubits) throw ConfigError("ansatz qubit count out of range");
        if (n_actions < 1) throw ConfigError("ansatz needs at least one action");
        if (n_states < 2) throw ConfigError("ansatz needs at least two states");
        if (n_qubits < n_actions) {
            throw ConfigError("ansatz has " + std::to_string(n_qubits) + " qubits but " + std::to_string(n_actions) +
                              " actions need distinct readout qubits");
        }
        if (variant != Variant::NoEntanglementFullEncoding && n_qubits < features()) {
            throw ConfigError("ansatz has " + std::to_string(n_qubits) + " qubits for " + std::to_string(features()) +
                              " features; per-qubit encoding needs one qubit per feature");
        }
    }
};

/// Trainable parameters. `circuit` holds theta then lambda, matching the ids
/// referenced by build_circuit; `w` is the classical output scaling.
struct ParamSet {
    std::vector<double> circuit;
    std::vector<double> w;
    std::size_t n_theta = 0;

    std::span<double> theta() { return std::span(circuit).first(n_theta); }
    std::span<const double> theta() const { return std::span(circuit).first(n_theta); }
    std::span<double> lambda() { return std::span(circuit).subspan(n_theta); }
    std::span<const double> lambda() const { return std::span(circuit).subspan(n_theta); }

    bool operator==(const ParamSet&) const = default;
};

inline std::size_t theta_id(const AnsatzSpec& s, int layer, int qubit, int slot) {
    return static_cast<std::size_t>((layer * s.n_qubits + qubit) * 2 + slot);
}

inline std::size_t lambda_id(const AnsatzSpec& s, int layer, int qubit, int feature = 0) {
    std::size_t local;
    if (s.variant == Variant::NoEntanglementFullEncoding) {
        local = static_cast<std::size_t>((layer * s.n_qubits + qubit) * s.features() + feature);
    } else {
        local = static_cast<std::size_t>(layer * s.n_qubits + qubit);
    }
    return s.theta_count() + local;
}

/// theta ~ U[-pi, pi], lambda = 1, w = 1.
inline ParamSet init_params(const AnsatzSpec& s, Rng& rng) {
    s.validate();
    ParamSet p;
    p.n_theta = s.theta_count();
    p.circuit.assign(s.circuit_param_count(), 1.0);
    for (auto& t : p.theta()) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
    p.w.assign(static_cast<std::size_t>(s.n_actions), 1.0);
    return p;
}

inline ParamSet zero_params(const AnsatzSpec& s) {
    ParamSet p;
    p.n_theta = s.theta_count();
    p.circuit.assign(s.circuit_param_count(), 0.0);
    p.w.assign(static_cast<std::size_t>(s.n_actions), 1.0);
    return p;
}

inline qsim::Circuit build_circuit(const AnsatzSpec& s, std::span<const double> features) {
    using qsim::Gate;
    using qsim::GateKind;
    using qsim::ParamRef;
    s.validate();
    const int d = s.features();
    if (static_cast<int>(features.size()) != d) {
        throw ConfigError("feature vector has length " + std::to_string(features.size()) + ", ansatz expects " +
                          std::to_string(d));
    }
    qsim::Circuit c(s.n_qubits);
    const int n = s.n_qubits;
    for (int layer = 0; layer < s.n_layers; ++layer) {
        for (int q = 0; q < n; ++q) {
            if (s.variant == Variant::NoEntanglementFullEncoding) {
                for (int j = 0; j < d; ++j) {
                    c.add(Gate::rotation(GateKind::RX, q, ParamRef{lambda_id(s, layer, q, j), features[j]}));
                }
            } else {
                // qubits beyond the feature count re-read features cyclically
                c.add(Gate::rotation(GateKind::RX, q, ParamRef{lambda_id(s, layer, q), features[q % d]}));
            }
        }
        for (int q = 0; q < n; ++q) {
            c.add(Gate::rotation(GateKind::RY, q, ParamRef{theta_id(s, layer, q, 0), 1.0}));
            c.add(Gate::rotation(GateKind::RZ, q, ParamRef{theta_id(s, layer, q, 1), 1.0}));
        }
        if (s.variant == Variant::Full) {
            if (n == 2) {
                c.add(Gate::cz(0, 1));
            } else if (n > 2) {
                for (int q = 0; q < n; ++q) c.add(Gate::cz(q, (q + 1) % n));
            }
        }
    }
    for (int a = 0; a < s.n_actions; ++a) c.observe(qsim::PauliZ{{a}});
    return c;
}

inline qsim::Circuit build_circuit(const AnsatzSpec& s, int state) {
    const auto x = encode_state(s.encoding, state, s.n_states);
    return build_circuit(s, x);
}

}  // namespace qrlbench::ansatz
