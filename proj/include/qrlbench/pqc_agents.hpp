#pragma once

// Policy-gradient (QPG) and deep-Q (QDQN) agents whose function approximator
// is the re-uploading ansatz. Q(s, a) = <Z_a>(s) * w_a, and the policy is
// built from the same scaled expectations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrlbench/agent.hpp"
#include "qrlbench/ansatz.hpp"
#include "qrlbench/envs.hpp"
#include "qrlbench/errors.hpp"
#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench::pqc {

using ansatz::AnsatzSpec;
using ansatz::ParamSet;

/// Ansatz plus parameters, with the per-state circuits built once.
class PqcModel {
public:
    PqcModel(AnsatzSpec spec, ParamSet params) : spec_(spec), params_(std::move(params)) {
        spec_.validate();
        if (params_.circuit.size() != spec_.circuit_param_count() ||
            params_.w.size() != static_cast<std::size_t>(spec_.n_actions)) {
            throw ConfigError("parameter set does not match ansatz spec");
        }
        circuits_.resize(static_cast<std::size_t>(spec_.n_states));
    }

    const AnsatzSpec& spec() const { return spec_; }
    const ParamSet& params() const { return params_; }
    ParamSet& params() { return params_; }

    const qsim::Circuit& circuit(int state) {
        if (state < 0 || state >= spec_.n_states) throw IndexError("state " + std::to_string(state) + " out of range");
        auto& slot = circuits_[static_cast<std::size_t>(state)];
        if (!slot) slot = ansatz::build_circuit(spec_, state);
        return *slot;
    }

    /// <Z_a> for every action from one circuit execution.
    std::vector<double> expectations(int state, qsim::CostLedger& ledger) {
        return expectations(state, params_, ledger);
    }

    std::vector<double> expectations(int state, const ParamSet& p, qsim::CostLedger& ledger) {
        return qsim::run_circuit(circuit(state), p.circuit, ledger);
    }

private:
    AnsatzSpec spec_;
    ParamSet params_;
    std::vector<std::optional<qsim::Circuit>> circuits_;
};

inline std::vector<double> scale(std::span<const double> expectations, std::span<const double> w) {
    std::vector<double> v(expectations.size());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = expectations[a] * w[a];
    return v;
}

enum class PolicyMode { Ratio, Softmax };

inline std::optional<PolicyMode> parse_policy_mode(std::string_view s) {
    if (s == "ratio" || s == "RATIO") return PolicyMode::Ratio;
    if (s == "softmax" || s == "SOFTMAX") return PolicyMode::Softmax;
    return std::nullopt;
}

inline constexpr double kRatioFloor = 1e-8;

/// Shift added to every scaled value in RATIO mode so the smallest becomes kRatioFloor.
inline double ratio_shift(std::span<const double> v) {
    const double lo = *std::min_element(v.begin(), v.end());
    return std::max(0.0, -lo) + kRatioFloor;
}

/// RATIO: pi_a = (v_a + c) / sum_b (v_b + c) with c = ratio_shift(v).
/// SOFTMAX: pi = softmax(v).
inline std::vector<double> policy_from_values(std::span<const double> v, PolicyMode mode) {
    if (v.empty()) throw ArgumentError("empty value vector");
    std::vector<double> p(v.size());
    double total = 0.0;
    if (mode == PolicyMode::Ratio) {
        const double c = ratio_shift(v);
        for (std::size_t a = 0; a < v.size(); ++a) total += (p[a] = v[a] + c);
    } else {
        const double hi = *std::max_element(v.begin(), v.end());
        for (std::size_t a = 0; a < v.size(); ++a) total += (p[a] = std::exp(v[a] - hi));
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("degenerate policy distribution");
    for (auto& x : p) x /= total;
    return p;
}

/// d log pi_a / d v_b for every b. In RATIO mode the shift depends on the
/// minimum value and is differentiated through (lowest index wins ties).
inline std::vector<double> log_policy_value_grad(std::span<const double> v, int action, PolicyMode mode) {
    const std::size_t n = v.size();
    const auto a = static_cast<std::size_t>(action);
    std::vector<double> g(n, 0.0);
    if (mode == PolicyMode::Softmax) {
        const auto p = policy_from_values(v, mode);
        for (std::size_t b = 0; b < n; ++b) g[b] = (b == a ? 1.0 : 0.0) - p[b];
        return g;
    }
    const double c = ratio_shift(v);
    const auto lo = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    const bool shifted = v[lo] < 0.0;
    double total = 0.0;
    for (std::size_t b = 0; b < n; ++b) total += v[b] + c;
    const double u = v[a] + c;
    for (std::size_t b = 0; b < n; ++b) {
        const double dc = (shifted && b == lo) ? -1.0 : 0.0;
        g[b] = ((b == a ? 1.0 : 0.0) + dc) / u - (1.0 + static_cast<double>(n) * dc) / total;
    }
    return g;
}

// ---------------------------------------------------------------------------

struct QpgConfig {
    double lr_circuit = 0.025;  // theta and lambda
    double lr_w = 0.1;
    double gamma = 0.99;
    PolicyMode mode = PolicyMode::Ratio;
    bool baseline = false;  // subtract the episode's mean return-to-go

    void validate() const {
        if (!(lr_circuit > 0.0) || !(lr_w > 0.0)) throw ConfigError("QPG learning rates must be positive");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("QPG gamma must lie in [0, 1]");
    }
};

struct ModelGradient {
    std::vector<double> circuit;
    std::vector<double> w;
};

/// Episodic REINFORCE with discounted returns-to-go.
class QpgAgent : public Agent {
public:
    QpgAgent(AnsatzSpec spec, QpgConfig cfg, Rng& rng) : QpgAgent(spec, ansatz::init_params(spec, rng), cfg) {}

    QpgAgent(AnsatzSpec spec, ParamSet params, QpgConfig cfg) : model_(spec, std::move(params)), cfg_(cfg) {
        cfg_.validate();
    }

    std::string family() const override { return "qpg"; }
    int qubit_count() const override { return model_.spec().n_qubits; }

    PqcModel& model() { return model_; }
    const QpgConfig& config() const { return cfg_; }

    /// Action distribution at `state`; one execution.
    std::vector<double> policy(int state, qsim::CostLedger& ledger) {
        const auto e = model_.expectations(state, ledger);
        cache_[state] = e;
        return policy_from_values(scale(e, model_.params().w), cfg_.mode);
    }

    void begin_episode() override {
        episode_.clear();
        cache_.clear();
    }

    int act(int state, std::int64_t, Rng& rng, qsim::CostLedger& ledger) override {
        const auto p = policy(state, ledger);
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) {
            acc += p[a];
            if (u < acc) return static_cast<int>(a);
        }
        return static_cast<int>(p.size()) - 1;
    }

    void observe(const envs::Transition& t, std::int64_t, Rng&, qsim::CostLedger&) override { episode_.push_back(t); }

    void end_episode(Rng&, qsim::CostLedger& ledger) override {
        if (!episode_.empty()) update(episode_, ledger);
        episode_.clear();
        cache_.clear();
    }

    /// Gradient of sum_t G_t log pi(a_t | s_t). Expectations recorded by
    /// policy() since the last parameter change are reused; one parameter-shift
    /// evaluation (2 executions per circuit parameter) runs per distinct state
    /// with a non-zero contribution.
    ModelGradient episode_gradient(std::span<const envs::Transition> episode, qsim::CostLedger& ledger) {
        if (episode.empty()) throw ArgumentError("empty episode");
        const std::size_t T = episode.size();
        std::vector<double> returns(T);
        double g = 0.0;
        for (std::size_t t = T; t-- > 0;) returns[t] = g = episode[t].reward + cfg_.gamma * g;
        if (cfg_.baseline) {
            double mean = 0.0;
            for (double r : returns) mean += r;
            mean /= static_cast<double>(T);
            for (double& r : returns) r -= mean;
        }

        const auto& w = model_.params().w;
        const std::size_t A = w.size();
        ModelGradient grad{std::vector<double>(model_.params().circuit.size(), 0.0), std::vector<double>(A, 0.0)};
        std::map<int, std::vector<double>> loss_weights;  // ordered: deterministic execution order

        for (std::size_t t = 0; t < T; ++t) {
            const int s = episode[t].state;
            auto it = cache_.find(s);
            if (it == cache_.end()) it = cache_.emplace(s, model_.expectations(s, ledger)).first;
            const auto& e = it->second;
            const auto v = scale(e, w);
            const auto p = policy_from_values(v, cfg_.mode);
            if (!(p[static_cast<std::size_t>(episode[t].action)] > 0.0)) {
                throw NumericalError("chosen action has zero probability");
            }
            if (returns[t] == 0.0) continue;
            const auto dv = log_policy_value_grad(v, episode[t].action, cfg_.mode);
            auto& lw = loss_weights.try_emplace(s, std::vector<double>(A, 0.0)).first->second;
            for (std::size_t b = 0; b < A; ++b) {
                lw[b] += returns[t] * dv[b] * w[b];
                grad.w[b] += returns[t] * dv[b] * e[b];
            }
        }
        for (const auto& [s, lw] : loss_weights) {
            if (std::all_of(lw.begin(), lw.end(), [](double x) { return x == 0.0; })) continue;
            const auto gs = qsim::parameter_shift_grad(model_.circuit(s), model_.params().circuit, lw, ledger);
            for (std::size_t k = 0; k < gs.size(); ++k) grad.circuit[k] += gs[k];
        }
        return grad;
    }

    /// Gradient ascent on the episode objective with constant learning rates.
    void update(std::span<const envs::Transition> episode, qsim::CostLedger& ledger) {
        const auto grad = episode_gradient(episode, ledger);
        auto& p = model_.params();
        for (std::size_t k = 0; k < grad.circuit.size(); ++k) p.circuit[k] += cfg_.lr_circuit * grad.circuit[k];
        for (std::size_t b = 0; b < grad.w.size(); ++b) p.w[b] += cfg_.lr_w * grad.w[b];
        cache_.clear();
    }

private:
    PqcModel model_;
    QpgConfig cfg_;
    std::vector<envs::Transition> episode_;
    std::map<int, std::vector<double>> cache_;
};

// ---------------------------------------------------------------------------

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("replay capacity must be positive");
        data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    void push(const envs::Transition& t) {
        if (data_.size() < capacity_) {
            data_.push_back(t);
        } else {
            data_[next_] = t;
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const envs::Transition& operator[](std::size_t i) const { return data_.at(i); }

    /// Uniform index in [0, size()).
    std::size_t sample_index(Rng& rng) const { return static_cast<std::size_t>(rng.uniform_index(data_.size())); }

    /// Uniform batch with replacement.
    std::vector<envs::Transition> sample(std::size_t batch, Rng& rng) const {
        if (data_.size() < batch) throw StateError("replay buffer holds fewer transitions than the batch size");
        std::vector<envs::Transition> out;
        out.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) out.push_back(data_[sample_index(rng)]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<envs::Transition> data_;
};

struct QdqnConfig {
    double lr_circuit = 0.01;
    double lr_w = 0.01;
    double gamma = 0.95;
    std::size_t buffer_capacity = 10000;
    std::size_t batch_size = 16;
    std::int64_t target_update_interval = 25;  // learner steps between target copies
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_fraction = 0.5;

    void validate() const {
        if (lr_circuit < 0.0 || lr_w < 0.0) throw ConfigError("QDQN learning rates must be non-negative");
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("QDQN gamma must lie in [0, 1]");
        if (batch_size == 0 || buffer_capacity < batch_size) {
            throw ConfigError("QDQN replay capacity must be at least the batch size");
        }
        if (target_update_interval < 1) throw ConfigError("QDQN target update interval must be >= 1");
        if (!(eps_end >= 0.0 && eps_end <= eps_start && eps_start <= 1.0)) {
            throw ConfigError("QDQN epsilon schedule must satisfy 0 <= end <= start <= 1");
        }
    }
};

/// y = r for terminal transitions, r + gamma * max_a Q_target(s', a) otherwise.
inline double td_target(double reward, bool terminal, double gamma, double max_next_q) {
    return terminal ? reward : reward + gamma * max_next_q;
}

class QdqnAgent : public Agent {
public:
    QdqnAgent(AnsatzSpec spec, QdqnConfig cfg, std::int64_t total_steps, Rng& rng)
        : QdqnAgent(spec, ansatz::init_params(spec, rng), cfg, total_steps) {}

    QdqnAgent(AnsatzSpec spec, ParamSet params, QdqnConfig cfg, std::int64_t total_steps)
        : model_(spec, params), target_(std::move(params)), cfg_(cfg), buffer_(cfg.buffer_capacity) {
        cfg_.validate();
        schedule_ = {cfg_.eps_start, cfg_.eps_end, cfg_.eps_decay_fraction, total_steps};
    }

    std::string family() const override { return "qdqn"; }
    int qubit_count() const override { return model_.spec().n_qubits; }

    PqcModel& model() { return model_; }
    const ParamSet& target_params() const { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    std::int64_t learner_steps() const { return learner_steps_; }
    const EpsilonSchedule& schedule() const { return schedule_; }

    /// Q(s, .) from one execution with the online or target parameters.
    std::vector<double> q_values(int state, bool use_target, qsim::CostLedger& ledger) {
        const ParamSet& p = use_target ? target_ : model_.params();
        return scale(model_.expectations(state, p, ledger), p.w);
    }

    int act(int state, std::int64_t env_step, Rng& rng, qsim::CostLedger& ledger) override {
        const double eps = schedule_.at(env_step);
        if (eps > 0.0 && rng.uniform() < eps) return static_cast<int>(rng.uniform_index(envs::kNumActions));
        const auto q = q_values(state, false, ledger);
        return argmax(q);
    }

    void observe(const envs::Transition& t, std::int64_t, Rng& rng, qsim::CostLedger& ledger) override {
        buffer_.push(t);
        update(rng, ledger);
    }

    void remember(const envs::Transition& t) { buffer_.push(t); }

    /// Gradient of the mean squared TD error over `batch` with targets from
    /// the target parameters. Distinct states share one forward pass and one
    /// parameter-shift evaluation.
    ModelGradient loss_gradient(std::span<const envs::Transition> batch, qsim::CostLedger& ledger) {
        const auto& w = model_.params().w;
        const std::size_t A = w.size();
        const double inv_b = 1.0 / static_cast<double>(batch.size());

        std::map<int, std::vector<double>> next_q, online;
        for (const auto& t : batch) {
            if (!t.terminal && !next_q.contains(t.next_state)) next_q[t.next_state] = q_values(t.next_state, true, ledger);
            if (!online.contains(t.state)) online[t.state] = model_.expectations(t.state, ledger);
        }

        std::map<int, std::vector<double>> loss_weights;
        ModelGradient grad{std::vector<double>(model_.params().circuit.size(), 0.0), std::vector<double>(A, 0.0)};
        for (const auto& t : batch) {
            const double max_next =
                t.terminal ? 0.0 : *std::max_element(next_q[t.next_state].begin(), next_q[t.next_state].end());
            const double y = td_target(t.reward, t.terminal, cfg_.gamma, max_next);
            const auto a = static_cast<std::size_t>(t.action);
            const double e = online[t.state][a];
            const double err = 2.0 * inv_b * (e * w[a] - y);  // d/dQ of the mean squared TD error
            auto& lw = loss_weights.try_emplace(t.state, std::vector<double>(A, 0.0)).first->second;
            lw[a] += err * w[a];
            grad.w[a] += err * e;
        }
        for (const auto& [s, lw] : loss_weights) {
            const auto gs = qsim::parameter_shift_grad(model_.circuit(s), model_.params().circuit, lw, ledger);
            for (std::size_t k = 0; k < gs.size(); ++k) grad.circuit[k] += gs[k];
        }
        return grad;
    }

    /// One learner step on a uniformly sampled batch. Returns false (no-op)
    /// while the buffer holds fewer than batch_size transitions.
    bool update(Rng& rng, qsim::CostLedger& ledger) {
        if (buffer_.size() < cfg_.batch_size) return false;
        const auto batch = buffer_.sample(cfg_.batch_size, rng);
        const auto grad = loss_gradient(batch, ledger);
        auto& p = model_.params();
        for (std::size_t k = 0; k < grad.circuit.size(); ++k) p.circuit[k] -= cfg_.lr_circuit * grad.circuit[k];
        for (std::size_t b = 0; b < grad.w.size(); ++b) p.w[b] -= cfg_.lr_w * grad.w[b];

        ++learner_steps_;
        if (learner_steps_ % cfg_.target_update_interval == 0) target_ = model_.params();
        return true;
    }

private:
    PqcModel model_;
    ParamSet target_;
    QdqnConfig cfg_;
    ReplayBuffer buffer_;
    EpsilonSchedule schedule_;
    std::int64_t learner_steps_ = 0;
};

}  // namespace qrlbench::pqc
