#pragma once

// Amplitude-amplification agent: one m-qubit action register per state,
// updated by Grover iterations G = D O_a, where O_a flips the phase of the
// marked action and D = 2|u><u| - I reflects about the uniform state |u>.
// Registers are sampled without collapse and persist across episodes.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qrlbench/agent.hpp"
#include "qrlbench/ansatz.hpp"
#include "qrlbench/envs.hpp"
#include "qrlbench/errors.hpp"
#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench::aa {

// Gate-count equivalents charged per Grover iteration on a 2-qubit register:
// oracle (CZ with X conjugation) plus diffusion (H, X, CZ, X, H).
inline constexpr std::size_t kGroverOneQubitGates = 8;
inline constexpr std::size_t kGroverTwoQubitGates = 1;

class ActionRegister {
public:
    explicit ActionRegister(int n_qubits = 2) : state_(qsim::Statevector::uniform(n_qubits)) {}

    const qsim::Statevector& state() const { return state_; }
    qsim::Statevector& state() { return state_; }
    int n_actions() const { return static_cast<int>(state_.dim()); }
    double probability(int action) const { return state_.probability(static_cast<std::size_t>(action)); }
    std::vector<double> probabilities() const { return state_.probabilities(); }

    /// Grover iterations applied so far; drives the modeled gate count.
    std::int64_t iterations() const { return iterations_; }
    void add_iterations(std::int64_t l) { iterations_ += l; }

private:
    qsim::Statevector state_;
    std::int64_t iterations_ = 0;
};

/// One application of D O_a.
inline void grover_iteration(qsim::Statevector& reg, int action) {
    auto a = reg.amplitudes();
    if (action < 0 || static_cast<std::size_t>(action) >= a.size()) {
        throw IndexError("action " + std::to_string(action) + " out of range");
    }
    a[static_cast<std::size_t>(action)] = -a[static_cast<std::size_t>(action)];
    qsim::Amplitude mean = 0.0;
    for (const auto& x : a) mean += x;
    mean /= static_cast<double>(a.size());
    for (auto& x : a) x = 2.0 * mean - x;
}

/// Applies G exactly L times.
inline void grover_update(ActionRegister& reg, int action, int L) {
    if (L < 0) throw ArgumentError("Grover iteration count must be >= 0");
    if (action < 0 || action >= reg.n_actions()) throw IndexError("action " + std::to_string(action) + " out of range");
    for (int i = 0; i < L; ++i) grover_iteration(reg.state(), action);
    reg.add_iterations(L);
}

/// Applies up to L iterations, stopping before one that would lower the
/// marked action's probability. Returns the number applied.
inline int grover_update_capped(ActionRegister& reg, int action, int L) {
    if (L < 0) throw ArgumentError("Grover iteration count must be >= 0");
    int applied = 0;
    for (; applied < L; ++applied) {
        qsim::Statevector trial = reg.state();
        grover_iteration(trial, action);
        if (trial.probability(static_cast<std::size_t>(action)) < reg.probability(action)) break;
        reg.state() = std::move(trial);
    }
    reg.add_iterations(applied);
    return applied;
}

/// max(0, floor(k (R + V(s')))) before the overshoot cap.
inline int compute_L(double k, double reward, double v_next) {
    if (!std::isfinite(k) || !std::isfinite(reward) || !std::isfinite(v_next)) {
        throw ArgumentError("compute_L needs finite inputs");
    }
    const double x = std::floor(k * (reward + v_next));
    if (x <= 0.0) return 0;
    constexpr double kLimit = 1 << 20;
    return static_cast<int>(std::min(x, kLimit));
}

struct ValueTable {
    std::vector<double> v;
    double alpha = 0.1;
    double gamma = 0.95;
};

/// V(s) += alpha (R + gamma V(s') - V(s)), with V(s') = 0 for terminal s'.
inline void td0_update(ValueTable& t, const envs::Transition& tr) {
    auto& vs = t.v.at(static_cast<std::size_t>(tr.state));
    const double next = tr.terminal ? 0.0 : t.v.at(static_cast<std::size_t>(tr.next_state));
    vs += t.alpha * (tr.reward + t.gamma * next - vs);
}

struct AaConfig {
    double k = 2.0;
    double alpha = 0.1;
    double gamma = 0.95;
    bool cap_overshoot = true;

    void validate() const {
        if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigError("AA gain k must be finite and >= 0");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("AA alpha must lie in [0, 1]");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("AA gamma must lie in [0, 1]");
    }
};

class AaAgent : public Agent {
public:
    AaAgent(int n_states, int n_actions, AaConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        m_ = ansatz::ceil_log2(n_actions);
        if (m_ < 1 || (1 << m_) != n_actions) throw ConfigError("AA needs a power-of-two action count >= 2");
        registers_.assign(static_cast<std::size_t>(n_states), ActionRegister(m_));
        values_.v.assign(static_cast<std::size_t>(n_states), 0.0);
        values_.alpha = cfg_.alpha;
        values_.gamma = cfg_.gamma;
    }

    std::string family() const override { return "aa"; }
    int qubit_count() const override { return m_; }

    const ActionRegister& register_at(int state) const { return registers_.at(static_cast<std::size_t>(state)); }
    ActionRegister& register_at(int state) { return registers_.at(static_cast<std::size_t>(state)); }
    const ValueTable& values() const { return values_; }

    /// Samples an action from the register without collapsing it. One
    /// execution: m state-preparation gates plus the Grover history.
    int select_action(int state, Rng& rng, qsim::CostLedger& ledger) const {
        const auto& reg = register_at(state);
        const auto L = static_cast<std::size_t>(reg.iterations());
        ledger.record_execution(static_cast<std::size_t>(m_) + kGroverOneQubitGates * L, kGroverTwoQubitGates * L);
        return static_cast<int>(qsim::sample_outcome(reg.state(), rng));
    }

    int act(int state, std::int64_t, Rng& rng, qsim::CostLedger& ledger) override {
        return select_action(state, rng, ledger);
    }

    /// L from the pre-update V(s'), then the TD(0) step.
    void observe(const envs::Transition& t, std::int64_t, Rng&, qsim::CostLedger&) override {
        const double v_next = t.terminal ? 0.0 : values_.v.at(static_cast<std::size_t>(t.next_state));
        const int L = compute_L(cfg_.k, t.reward, v_next);
        if (L > 0) {
            auto& reg = register_at(t.state);
            if (cfg_.cap_overshoot) {
                grover_update_capped(reg, t.action, L);
            } else {
                grover_update(reg, t.action, L);
            }
        }
        td0_update(values_, t);
    }

private:
    AaConfig cfg_;
    int m_ = 2;
    std::vector<ActionRegister> registers_;
    ValueTable values_;
};

}  // namespace qrlbench::aa
