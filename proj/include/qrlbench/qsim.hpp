#pragma once

// Dense statevector simulator for small registers.
//
// Qubit q corresponds to bit q of the computational basis index, so basis
// state |b_{n-1} ... b_1 b_0> has index sum_q b_q 2^q. Observables are
// products of Pauli-Z operators, all diagonal in this basis, which lets a
// single execution return every observable of a circuit.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qrlbench/errors.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench::qsim {

using Amplitude = std::complex<double>;
using Duration = std::chrono::nanoseconds;

inline constexpr int kMaxQubits = 14;
inline constexpr double kShift = std::numbers::pi / 2.0;

class Statevector {
public:
    /// |0...0> on n qubits.
    explicit Statevector(int n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw ArgumentError("qubit count " + std::to_string(n_qubits) + " outside [1, " +
                                std::to_string(kMaxQubits) + "]");
        }
        amps_.assign(std::size_t{1} << n_qubits, Amplitude{0.0, 0.0});
        amps_[0] = 1.0;
    }

    /// Takes ownership of explicit amplitudes; the length must be a power of two
    /// and the vector must be normalized within 1e-10.
    static Statevector from_amplitudes(std::vector<Amplitude> amps) {
        if (amps.size() < 2 || !std::has_single_bit(amps.size())) {
            throw ArgumentError("amplitude vector length must be a power of two >= 2");
        }
        Statevector s(std::countr_zero(amps.size()));
        s.amps_ = std::move(amps);
        if (std::abs(s.norm_squared() - 1.0) > 1e-10) {
            throw ArgumentError("amplitude vector is not normalized");
        }
        return s;
    }

    static Statevector uniform(int n_qubits) {
        Statevector s(n_qubits);
        const double a = 1.0 / std::sqrt(static_cast<double>(s.dim()));
        std::fill(s.amps_.begin(), s.amps_.end(), Amplitude{a, 0.0});
        return s;
    }

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }

    std::span<const Amplitude> amplitudes() const { return amps_; }
    std::span<Amplitude> amplitudes() { return amps_; }

    double probability(std::size_t basis) const { return std::norm(amps_.at(basis)); }

    std::vector<double> probabilities() const {
        std::vector<double> p(amps_.size());
        for (std::size_t i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_[i]);
        return p;
    }

    double norm_squared() const {
        double acc = 0.0;
        for (const auto& a : amps_) acc += std::norm(a);
        return acc;
    }

private:
    int n_qubits_;
    std::vector<Amplitude> amps_;
};

enum class GateKind { RX, RY, RZ, CZ, CNOT };

inline bool is_rotation(GateKind k) { return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ; }
inline int arity(GateKind k) { return is_rotation(k) ? 1 : 2; }

inline const char* to_string(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CZ: return "CZ";
        case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

/// Angle = multiplier * params[id]. The multiplier carries classical data
/// (an encoded feature) so that input scaling stays a trainable parameter.
struct ParamRef {
    std::size_t id = 0;
    double multiplier = 1.0;

    bool operator==(const ParamRef&) const = default;
};

struct Gate {
    GateKind kind = GateKind::RX;
    std::array<int, 2> targets{0, -1};
    std::variant<double, ParamRef> angle{0.0};

    static Gate rotation(GateKind kind, int qubit, double fixed) { return {kind, {qubit, -1}, fixed}; }
    static Gate rotation(GateKind kind, int qubit, ParamRef ref) { return {kind, {qubit, -1}, ref}; }
    static Gate cz(int a, int b) { return {GateKind::CZ, {a, b}, 0.0}; }
    static Gate cnot(int control, int target) { return {GateKind::CNOT, {control, target}, 0.0}; }

    bool is_bound() const { return std::holds_alternative<ParamRef>(angle); }
    const ParamRef* binding() const { return std::get_if<ParamRef>(&angle); }

    bool operator==(const Gate&) const = default;
};

/// Product of Pauli-Z operators on the listed qubits.
struct PauliZ {
    std::vector<int> qubits;

    std::uint64_t mask() const {
        std::uint64_t m = 0;
        for (int q : qubits) m ^= std::uint64_t{1} << q;
        return m;
    }

    bool operator==(const PauliZ&) const = default;
};

class Circuit {
public:
    explicit Circuit(int n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw ArgumentError("circuit qubit count " + std::to_string(n_qubits) + " out of range");
        }
    }

    Circuit& add(const Gate& g) {
        check_qubit(g.targets[0]);
        if (arity(g.kind) == 2) {
            check_qubit(g.targets[1]);
            if (g.targets[0] == g.targets[1]) {
                throw ArgumentError(std::string(to_string(g.kind)) + " needs two distinct qubits");
            }
            ++two_qubit_;
        } else {
            if (g.targets[1] != -1) throw ArgumentError("single-qubit gate with a second target");
            if (const double* a = std::get_if<double>(&g.angle); a && !std::isfinite(*a)) {
                throw ArgumentError("non-finite gate angle");
            }
            ++one_qubit_;
        }
        if (const ParamRef* r = g.binding()) {
            param_extent_ = std::max(param_extent_, r->id + 1);
        }
        gates_.push_back(g);
        return *this;
    }

    Circuit& observe(PauliZ obs) {
        for (int q : obs.qubits) check_qubit(q);
        observables_.push_back(std::move(obs));
        return *this;
    }

    int n_qubits() const { return n_qubits_; }
    const std::vector<Gate>& gates() const { return gates_; }
    const std::vector<PauliZ>& observables() const { return observables_; }
    std::size_t one_qubit_gates() const { return one_qubit_; }
    std::size_t two_qubit_gates() const { return two_qubit_; }
    /// One past the largest parameter id referenced by any gate.
    std::size_t param_extent() const { return param_extent_; }

    bool operator==(const Circuit& o) const {
        return n_qubits_ == o.n_qubits_ && gates_ == o.gates_ && observables_ == o.observables_;
    }

private:
    void check_qubit(int q) const {
        if (q < 0 || q >= n_qubits_) {
            throw IndexError("qubit " + std::to_string(q) + " out of range for " + std::to_string(n_qubits_) +
                             "-qubit circuit");
        }
    }

    int n_qubits_;
    std::vector<Gate> gates_;
    std::vector<PauliZ> observables_;
    std::size_t one_qubit_ = 0;
    std::size_t two_qubit_ = 0;
    std::size_t param_extent_ = 0;
};

struct TimingModel {
    Duration t_1q{30};
    Duration t_2q{300};
    Duration t_meas{300};
    std::int64_t shots = 1000;

    void validate() const {
        if (t_1q.count() <= 0 || t_2q.count() <= 0 || t_meas.count() <= 0) {
            throw ConfigError("timing model durations must be positive");
        }
        if (shots < 1) throw ConfigError("timing model needs at least one shot");
    }
};

/// Serial gate-sum model: every shot runs every gate back to back, then measures.
inline Duration estimate_time(std::size_t one_qubit, std::size_t two_qubit, const TimingModel& t) {
    const auto per_shot = static_cast<std::int64_t>(one_qubit) * t.t_1q + static_cast<std::int64_t>(two_qubit) * t.t_2q +
                          t.t_meas;
    return per_shot * t.shots;
}

inline Duration estimate_circuit_time(const Circuit& c, const TimingModel& t) {
    return estimate_time(c.one_qubit_gates(), c.two_qubit_gates(), t);
}

/// Quantum-resource counters for one run. Counters only grow; ledgers from
/// independent workers are combined with merge().
class CostLedger {
public:
    explicit CostLedger(TimingModel timing = {}) : timing_(timing) { timing_.validate(); }

    void record_execution(std::size_t one_qubit, std::size_t two_qubit) {
        ++circuit_executions_;
        clock_time_ += estimate_time(one_qubit, two_qubit, timing_);
    }

    void record_circuit(const Circuit& c) { record_execution(c.one_qubit_gates(), c.two_qubit_gates()); }

    void record_anneal(Duration access_time) {
        ++anneal_jobs_;
        clock_time_ += access_time;
    }

    void merge(const CostLedger& other) {
        circuit_executions_ += other.circuit_executions_;
        anneal_jobs_ += other.anneal_jobs_;
        clock_time_ += other.clock_time_;
    }

    const TimingModel& timing() const { return timing_; }
    std::uint64_t circuit_executions() const { return circuit_executions_; }
    std::uint64_t anneal_jobs() const { return anneal_jobs_; }
    Duration modeled_clock_time() const { return clock_time_; }

private:
    TimingModel timing_;
    std::uint64_t circuit_executions_ = 0;
    std::uint64_t anneal_jobs_ = 0;
    Duration clock_time_{0};
};

// ---------------------------------------------------------------------------
// Gate kernels. Written with explicit real arithmetic; std::complex multiply
// goes through the NaN-recovering slow path on most compilers.

namespace detail {

template <typename Kernel>
inline void for_each_pair(std::span<Amplitude> a, int q, Kernel&& k) {
    const std::size_t mask = std::size_t{1} << q;
    const std::size_t n = a.size();
    for (std::size_t base = 0; base < n; base += 2 * mask) {
        for (std::size_t i = base; i < base + mask; ++i) k(a[i], a[i | mask]);
    }
}

inline void apply_rx(std::span<Amplitude> a, int q, double angle) {
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    // [[c, -is], [-is, c]]
    for_each_pair(a, q, [c, s](Amplitude& x, Amplitude& y) {
        const double xr = x.real(), xi = x.imag(), yr = y.real(), yi = y.imag();
        x = {c * xr + s * yi, c * xi - s * yr};
        y = {c * yr + s * xi, c * yi - s * xr};
    });
}

inline void apply_ry(std::span<Amplitude> a, int q, double angle) {
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    // [[c, -s], [s, c]]
    for_each_pair(a, q, [c, s](Amplitude& x, Amplitude& y) {
        const double xr = x.real(), xi = x.imag(), yr = y.real(), yi = y.imag();
        x = {c * xr - s * yr, c * xi - s * yi};
        y = {s * xr + c * yr, s * xi + c * yi};
    });
}

inline void apply_rz(std::span<Amplitude> a, int q, double angle) {
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    // diag(e^{-i angle/2}, e^{+i angle/2})
    for_each_pair(a, q, [c, s](Amplitude& x, Amplitude& y) {
        const double xr = x.real(), xi = x.imag(), yr = y.real(), yi = y.imag();
        x = {c * xr + s * xi, c * xi - s * xr};
        y = {c * yr - s * yi, c * yi + s * yr};
    });
}

inline void apply_cz(std::span<Amplitude> a, int q0, int q1) {
    const std::size_t both = (std::size_t{1} << q0) | (std::size_t{1} << q1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((i & both) == both) a[i] = -a[i];
    }
}

inline void apply_cnot(std::span<Amplitude> a, int control, int target) {
    const std::size_t cm = std::size_t{1} << control, tm = std::size_t{1} << target;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((i & cm) && !(i & tm)) std::swap(a[i], a[i | tm]);
    }
}

}  // namespace detail

inline void apply_gate(Statevector& state, const Gate& gate, double angle) {
    const int n = state.n_qubits();
    for (int k = 0; k < arity(gate.kind); ++k) {
        if (gate.targets[k] < 0 || gate.targets[k] >= n) {
            throw IndexError("gate target " + std::to_string(gate.targets[k]) + " out of range");
        }
    }
    auto amps = state.amplitudes();
    switch (gate.kind) {
        case GateKind::RX:
            if (!std::isfinite(angle)) throw ArgumentError("non-finite angle");
            detail::apply_rx(amps, gate.targets[0], angle);
            break;
        case GateKind::RY:
            if (!std::isfinite(angle)) throw ArgumentError("non-finite angle");
            detail::apply_ry(amps, gate.targets[0], angle);
            break;
        case GateKind::RZ:
            if (!std::isfinite(angle)) throw ArgumentError("non-finite angle");
            detail::apply_rz(amps, gate.targets[0], angle);
            break;
        case GateKind::CZ:
            detail::apply_cz(amps, gate.targets[0], gate.targets[1]);
            break;
        case GateKind::CNOT:
            detail::apply_cnot(amps, gate.targets[0], gate.targets[1]);
            break;
    }
}

inline double resolve_angle(const Gate& g, std::span<const double> params) {
    if (const double* a = std::get_if<double>(&g.angle)) return *a;
    const ParamRef& r = std::get<ParamRef>(g.angle);
    if (r.id >= params.size()) {
        throw ConfigError("parameter id " + std::to_string(r.id) + " is not bound (" + std::to_string(params.size()) +
                          " parameters supplied)");
    }
    return r.multiplier * params[r.id];
}

inline double expectation(const Statevector& state, const PauliZ& obs) {
    for (int q : obs.qubits) {
        if (q < 0 || q >= state.n_qubits()) throw IndexError("observable qubit out of range");
    }
    const std::uint64_t m = obs.mask();
    const auto amps = state.amplitudes();
    double acc = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        acc += (std::popcount(i & m) & 1) ? -p : p;
    }
    return acc;
}

/// One pass over the probabilities for all observables.
inline std::vector<double> expectations(const Statevector& state, std::span<const PauliZ> observables) {
    std::vector<std::uint64_t> masks;
    masks.reserve(observables.size());
    for (const auto& o : observables) masks.push_back(o.mask());
    std::vector<double> out(observables.size(), 0.0);
    const auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        for (std::size_t k = 0; k < masks.size(); ++k) out[k] += (std::popcount(i & masks[k]) & 1) ? -p : p;
    }
    return out;
}

/// Multinomial sample of `shots` computational-basis measurements.
inline std::vector<std::uint64_t> sample_measurements(const Statevector& state, std::int64_t shots, Rng& rng) {
    if (shots <= 0) throw ArgumentError("shots must be positive");
    const auto amps = state.amplitudes();
    std::vector<double> cdf(amps.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        acc += std::norm(amps[i]);
        cdf[i] = acc;
    }
    std::vector<std::uint64_t> counts(amps.size(), 0);
    for (std::int64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        ++counts[static_cast<std::size_t>(it - cdf.begin())];
    }
    return counts;
}

/// Draws a single basis outcome.
inline std::size_t sample_outcome(const Statevector& state, Rng& rng) {
    const auto amps = state.amplitudes();
    double total = 0.0;
    for (const auto& a : amps) total += std::norm(a);
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        acc += std::norm(amps[i]);
        if (u < acc) return i;
    }
    return amps.size() - 1;
}

/// Applies gates [first, last) of the circuit to `state`.
inline void apply_range(Statevector& state, const Circuit& c, std::span<const double> params, std::size_t first,
                        std::size_t last) {
    const auto& gates = c.gates();
    for (std::size_t i = first; i < last; ++i) apply_gate(state, gates[i], resolve_angle(gates[i], params));
}

inline Statevector simulate(const Circuit& c, std::span<const double> params) {
    Statevector s(c.n_qubits());
    apply_range(s, c, params, 0, c.gates().size());
    return s;
}

struct Analytic {};
struct Shots {
    std::int64_t shots;
    std::reference_wrapper<Rng> rng;
};
using Mode = std::variant<Analytic, Shots>;

/// Executes the circuit once and returns every observable's expectation.
/// Records exactly one execution in the ledger.
inline std::vector<double> run_circuit(const Circuit& c, std::span<const double> params, const Mode& mode,
                                       CostLedger& ledger) {
    if (c.param_extent() > params.size()) {
        throw ConfigError("circuit references parameter id " + std::to_string(c.param_extent() - 1) + " but only " +
                          std::to_string(params.size()) + " parameters are bound");
    }
    const Statevector s = simulate(c, params);
    ledger.record_circuit(c);
    if (std::holds_alternative<Analytic>(mode)) return expectations(s, c.observables());

    const Shots& sh = std::get<Shots>(mode);
    const auto counts = sample_measurements(s, sh.shots, sh.rng.get());
    std::vector<double> out;
    out.reserve(c.observables().size());
    for (const auto& o : c.observables()) {
        const std::uint64_t m = o.mask();
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const auto n = static_cast<std::int64_t>(counts[i]);
            acc += (std::popcount(i & m) & 1) ? -n : n;
        }
        out.push_back(static_cast<double>(acc) / static_cast<double>(sh.shots));
    }
    return out;
}

inline std::vector<double> run_circuit(const Circuit& c, std::span<const double> params, CostLedger& ledger) {
    return run_circuit(c, params, Analytic{}, ledger);
}

/// Gradient of sum_a weights[a] * <O_a> with respect to every circuit parameter,
/// by the two-term shift rule on each bound rotation gate. Each bound gate costs
/// two executions (analytic mode). A gate bound as angle = m * p contributes
/// m * (E(+pi/2) - E(-pi/2)) / 2 to d/dp.
inline std::vector<double> parameter_shift_grad(const Circuit& c, std::span<const double> params,
                                                std::span<const double> loss_weights, CostLedger& ledger) {
    if (loss_weights.size() != c.observables().size()) {
        throw ConfigError("loss weight count does not match observable count");
    }
    if (c.param_extent() > params.size()) throw ConfigError("unbound parameter id in circuit");
    for (const auto& g : c.gates()) {
        if (g.is_bound() && !is_rotation(g.kind)) {
            throw UnsupportedGradientError(std::string("parameter bound to non-rotation gate ") + to_string(g.kind));
        }
    }

    std::vector<double> grad(params.size(), 0.0);
    const auto& gates = c.gates();
    const auto& obs = c.observables();
    auto weighted = [&](const Statevector& s) {
        const auto e = expectations(s, obs);
        double acc = 0.0;
        for (std::size_t k = 0; k < e.size(); ++k) acc += loss_weights[k] * e[k];
        return acc;
    };

    Statevector prefix(c.n_qubits());  // state before gate i
    for (std::size_t i = 0; i < gates.size(); ++i) {
        const Gate& g = gates[i];
        const double angle = resolve_angle(g, params);
        if (const ParamRef* r = g.binding()) {
            double terms[2];
            for (int side = 0; side < 2; ++side) {
                Statevector s = prefix;
                apply_gate(s, g, angle + (side == 0 ? kShift : -kShift));
                apply_range(s, c, params, i + 1, gates.size());
                ledger.record_circuit(c);
                terms[side] = weighted(s);
            }
            grad[r->id] += r->multiplier * 0.5 * (terms[0] - terms[1]);
        }
        apply_gate(prefix, g, angle);
    }
    return grad;
}

}  // namespace qrlbench::qsim
