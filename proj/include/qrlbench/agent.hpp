#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>

#include "qrlbench/envs.hpp"
#include "qrlbench/errors.hpp"
#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench {

/// Interface the experiment loop drives. One instance per run; not shared
/// between threads.
class Agent {
public:
    virtual ~Agent() = default;

    virtual std::string family() const = 0;
    virtual int qubit_count() const = 0;

    virtual void begin_episode() {}
    /// `env_step` is the number of environment steps taken so far in the run.
    virtual int act(int state, std::int64_t env_step, Rng& rng, qsim::CostLedger& ledger) = 0;
    virtual void observe(const envs::Transition& t, std::int64_t env_step, Rng& rng, qsim::CostLedger& ledger) = 0;
    /// Called once per completed episode.
    virtual void end_episode(Rng& rng, qsim::CostLedger& ledger) {
        (void)rng;
        (void)ledger;
    }
};

/// Linear decay from `start` to `end` over the first `decay_fraction` of the
/// step budget, constant afterwards.
struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    double decay_fraction = 0.5;
    std::int64_t total_steps = 1;

    double at(std::int64_t step) const {
        const double horizon = decay_fraction * static_cast<double>(total_steps);
        if (horizon <= 0.0) return end;
        const double frac = static_cast<double>(step) / horizon;
        if (frac >= 1.0) return end;
        return start + (end - start) * std::max(frac, 0.0);
    }
};

/// Index of the largest value; ties go to the lowest index.
inline int argmax(std::span<const double> v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

/// Random action with probability eps, greedy otherwise.
inline int select_action_eps_greedy(std::span<const double> q, double eps, Rng& rng) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ArgumentError("epsilon must lie in [0, 1]");
    if (q.empty()) throw ArgumentError("no actions to choose from");
    if (eps > 0.0 && rng.uniform() < eps) return static_cast<int>(rng.uniform_index(q.size()));
    return argmax(q);
}

}  // namespace qrlbench
