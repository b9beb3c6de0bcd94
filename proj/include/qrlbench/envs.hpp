#pragma once

// Deterministic gridworlds.
//
// Layout file format (plain text):
//
//   # comment
//   step_reward = -0.075
//   goal_reward = 1.0
//   penalty_reward = -0.5
//   max_episode_steps = 20
//   SFF
//   FWF
//   FFG
//
// Header lines are `key = value`; every other non-empty, non-comment line is
// a grid row. Cell characters:
//   S start (exactly one)      F free
//   H hole (terminal, 0)       G goal (terminal, goal_reward)
//   W wall (never entered)     P penalty (non-terminal, penalty_reward)
//   R reward (same semantics as G)
//
// States are cell indices row * cols + col. Actions: 0 up, 1 down, 2 left,
// 3 right. Moving off-grid or into a wall leaves the agent in place. The
// reward of a step is step_reward plus the value of the resulting cell.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qrlbench/errors.hpp"

namespace qrlbench::envs {

enum class Cell : char {
    Start = 'S',
    Free = 'F',
    Hole = 'H',
    Goal = 'G',
    Wall = 'W',
    Penalty = 'P',
    Reward = 'R',
};

inline constexpr int kNumActions = 4;
enum Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };

struct GridworldSpec {
    int rows = 0;
    int cols = 0;
    std::vector<Cell> cells;
    double step_reward = 0.0;
    double goal_reward = 1.0;
    double penalty_reward = 0.0;
    int max_episode_steps = 100;
    // Position of the 'S' cell for parsed layouts. Programmatic specs may put
    // the start on any non-wall, non-hole cell.
    int start_cell = -1;

    int n_states() const { return rows * cols; }
    Cell at(int state) const { return cells.at(static_cast<std::size_t>(state)); }
    int start() const { return start_cell; }

    bool is_goal(int s) const { return at(s) == Cell::Goal || at(s) == Cell::Reward; }
    bool is_terminal(int s) const { return is_goal(s) || at(s) == Cell::Hole; }

    /// Value added to step_reward when landing on `s`.
    double cell_value(int s) const {
        if (is_goal(s)) return goal_reward;
        if (at(s) == Cell::Penalty) return penalty_reward;
        return 0.0;
    }

    void validate() const {
        if (rows < 1 || cols < 1) throw ConfigError("gridworld needs positive dimensions");
        if (static_cast<int>(cells.size()) != rows * cols) throw ConfigError("gridworld cell count mismatch");
        if (start_cell < 0 || start_cell >= rows * cols) throw ConfigError("gridworld start cell out of range");
        if (at(start_cell) == Cell::Wall || at(start_cell) == Cell::Hole) {
            throw ConfigError("gridworld start cell is a wall or hole");
        }
        if (std::count(cells.begin(), cells.end(), Cell::Start) > 1) {
            throw ConfigError("gridworld has more than one start cell");
        }
        if (std::none_of(cells.begin(), cells.end(), [](Cell c) { return c == Cell::Goal || c == Cell::Reward; })) {
            throw ConfigError("gridworld needs at least one goal cell");
        }
        if (max_episode_steps < 1) throw ConfigError("max_episode_steps must be positive");
        if (!std::isfinite(step_reward) || !std::isfinite(goal_reward) || !std::isfinite(penalty_reward)) {
            throw ConfigError("gridworld rewards must be finite");
        }
    }

    bool operator==(const GridworldSpec&) const = default;
};

/// Deterministic successor; blocked moves stay put.
inline int next_state(const GridworldSpec& g, int s, int action) {
    int r = s / g.cols, c = s % g.cols;
    switch (action) {
        case Up: --r; break;
        case Down: ++r; break;
        case Left: --c; break;
        case Right: ++c; break;
        default: throw IndexError("action " + std::to_string(action) + " out of range");
    }
    if (r < 0 || r >= g.rows || c < 0 || c >= g.cols) return s;
    const int t = r * g.cols + c;
    return g.at(t) == Cell::Wall ? s : t;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("layout header '" + key + "' is not a number: " + v);
    }
}

}  // namespace detail

inline GridworldSpec parse_layout(std::string_view text) {
    GridworldSpec g;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (const auto eq = line.find('='); eq != std::string::npos) {
            if (g.rows > 0) throw ConfigError("layout line " + std::to_string(line_no) + ": header after grid rows");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string val = detail::trim(line.substr(eq + 1));
            if (key == "step_reward") {
                g.step_reward = detail::parse_double(key, val);
            } else if (key == "goal_reward") {
                g.goal_reward = detail::parse_double(key, val);
            } else if (key == "penalty_reward") {
                g.penalty_reward = detail::parse_double(key, val);
            } else if (key == "max_episode_steps") {
                const double m = detail::parse_double(key, val);
                if (m != std::floor(m) || m < 1) throw ConfigError("max_episode_steps must be a positive integer");
                g.max_episode_steps = static_cast<int>(m);
            } else {
                throw ConfigError("layout line " + std::to_string(line_no) + ": unknown header key '" + key + "'");
            }
            continue;
        }
        if (g.cols == 0) g.cols = static_cast<int>(line.size());
        if (static_cast<int>(line.size()) != g.cols) {
            throw ConfigError("layout line " + std::to_string(line_no) + ": ragged grid row");
        }
        for (char ch : line) {
            switch (ch) {
                case 'S': case 'F': case 'H': case 'G': case 'W': case 'P': case 'R':
                    g.cells.push_back(static_cast<Cell>(ch));
                    break;
                default:
                    throw ConfigError("layout line " + std::to_string(line_no) + ": unknown cell '" +
                                      std::string(1, ch) + "'");
            }
        }
        ++g.rows;
    }
    const auto it = std::find(g.cells.begin(), g.cells.end(), Cell::Start);
    if (it == g.cells.end()) throw ConfigError("layout has no start cell 'S'");
    g.start_cell = static_cast<int>(it - g.cells.begin());
    g.validate();
    return g;
}

inline std::string to_layout_string(const GridworldSpec& g) {
    // shortest text that parses back to the same double
    auto num = [](double x) {
        char buf[32];
        return std::string(buf, std::to_chars(buf, buf + sizeof buf, x).ptr);
    };
    std::ostringstream out;
    out << "step_reward = " << num(g.step_reward) << '\n'
        << "goal_reward = " << num(g.goal_reward) << '\n'
        << "penalty_reward = " << num(g.penalty_reward) << '\n'
        << "max_episode_steps = " << g.max_episode_steps << '\n';
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) out << static_cast<char>(g.at(r * g.cols + c));
        out << '\n';
    }
    return out.str();
}

inline GridworldSpec load_layout(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open layout file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    try {
        return parse_layout(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Built-in layouts. The frozen lake maps are the standard 4x4 and 8x8 maps.
inline constexpr std::string_view kGridworld3x3 =
    "step_reward = -0.075\ngoal_reward = 1\npenalty_reward = 0\nmax_episode_steps = 20\n"
    "SFF\nFFF\nFFG\n";
inline constexpr std::string_view kGridworld3x5 =
    "step_reward = -0.075\ngoal_reward = 1\npenalty_reward = -0.5\nmax_episode_steps = 30\n"
    "SFFFF\nFWFPF\nFFFFR\n";
inline constexpr std::string_view kFrozenLake4x4 =
    "step_reward = 0\ngoal_reward = 1\npenalty_reward = 0\nmax_episode_steps = 50\n"
    "SFFF\nFHFH\nFFFH\nHFFG\n";
inline constexpr std::string_view kFrozenLake8x8 =
    "step_reward = 0\ngoal_reward = 1\npenalty_reward = 0\nmax_episode_steps = 200\n"
    "SFFFFFFF\nFFFFFFFF\nFFFHFFFF\nFFFFFHFF\nFFFHFFFF\nFHHFFFHF\nFHFFHFHF\nFFFHFFFG\n";
inline constexpr std::string_view kChain =
    "step_reward = 0\ngoal_reward = 1\npenalty_reward = 0\nmax_episode_steps = 10\n"
    "SFG\n";

inline std::vector<std::string> builtin_layout_ids() {
    return {"gridworld_3x3", "gridworld_3x5", "frozenlake_4x4", "frozenlake_8x8", "chain"};
}

inline GridworldSpec builtin_layout(std::string_view id) {
    if (id == "gridworld_3x3") return parse_layout(kGridworld3x3);
    if (id == "gridworld_3x5") return parse_layout(kGridworld3x5);
    if (id == "frozenlake_4x4") return parse_layout(kFrozenLake4x4);
    if (id == "frozenlake_8x8") return parse_layout(kFrozenLake8x8);
    if (id == "chain") return parse_layout(kChain);
    throw ConfigError("unknown environment id '" + std::string(id) + "'");
}

struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false;   // goal or hole reached
    bool truncated = false;  // step limit hit on a non-terminal cell

    bool done() const { return terminal || truncated; }
};

class GridworldEnv {
public:
    explicit GridworldEnv(GridworldSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        reset();
    }

    int reset() {
        state_ = spec_.start();
        steps_ = 0;
        done_ = spec_.is_terminal(state_);
        return state_;
    }

    Transition step(int action) {
        if (done_) throw StateError("step() called on a finished episode; call reset()");
        if (action < 0 || action >= kNumActions) throw IndexError("action " + std::to_string(action) + " out of range");
        Transition t;
        t.state = state_;
        t.action = action;
        t.next_state = next_state(spec_, state_, action);
        t.reward = spec_.step_reward + spec_.cell_value(t.next_state);
        t.terminal = spec_.is_terminal(t.next_state);
        ++steps_;
        t.truncated = !t.terminal && steps_ >= spec_.max_episode_steps;
        state_ = t.next_state;
        done_ = t.done();
        return t;
    }

    const GridworldSpec& spec() const { return spec_; }
    int state() const { return state_; }
    int steps() const { return steps_; }
    bool done() const { return done_; }
    int n_states() const { return spec_.n_states(); }
    static constexpr int n_actions() { return kNumActions; }

private:
    GridworldSpec spec_;
    int state_ = 0;
    int steps_ = 0;
    bool done_ = false;
};

struct ValueIterationResult {
    std::vector<double> values;
    std::vector<int> policy;  // greedy, ties to lowest action index
    int iterations = 0;
};

inline ValueIterationResult value_iteration(const GridworldSpec& g, double gamma, double tol = 1e-12,
                                            int max_iterations = 100000) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ArgumentError("value iteration needs gamma in [0, 1)");
    const int n = g.n_states();
    ValueIterationResult r;
    r.values.assign(static_cast<std::size_t>(n), 0.0);
    r.policy.assign(static_cast<std::size_t>(n), 0);
    auto q = [&](int s, int a) {
        const int t = next_state(g, s, a);
        const double reward = g.step_reward + g.cell_value(t);
        return reward + (g.is_terminal(t) ? 0.0 : gamma * r.values[static_cast<std::size_t>(t)]);
    };
    for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
        double delta = 0.0;
        for (int s = 0; s < n; ++s) {
            if (g.is_terminal(s) || g.at(s) == Cell::Wall) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < kNumActions; ++a) best = std::max(best, q(s, a));
            delta = std::max(delta, std::abs(best - r.values[static_cast<std::size_t>(s)]));
            r.values[static_cast<std::size_t>(s)] = best;
        }
        if (delta < tol) break;
    }
    if (r.iterations > max_iterations) throw NumericalError("value iteration did not converge");
    for (int s = 0; s < n; ++s) {
        if (g.is_terminal(s) || g.at(s) == Cell::Wall) continue;
        int best_a = 0;
        double best = q(s, 0);
        for (int a = 1; a < kNumActions; ++a) {
            if (const double v = q(s, a); v > best + 1e-12) {
                best = v;
                best_a = a;
            }
        }
        r.policy[static_cast<std::size_t>(s)] = best_a;
    }
    return r;
}

/// Undiscounted return of one episode under a fixed deterministic policy.
inline double rollout_return(const GridworldSpec& g, const std::vector<int>& policy) {
    GridworldEnv env(g);
    int s = env.reset();
    if (g.is_terminal(s)) return g.cell_value(s);
    double total = 0.0;
    while (!env.done()) {
        const auto t = env.step(policy.at(static_cast<std::size_t>(s)));
        total += t.reward;
        s = t.next_state;
    }
    return total;
}

/// Best undiscounted episode return: greedy policy of discounted value
/// iteration (the discount breaks ties toward shorter paths), rolled out
/// under the episode step limit.
inline double optimal_return(const GridworldSpec& g, double gamma = 0.95) {
    if (g.is_terminal(g.start())) return g.cell_value(g.start());
    const auto vi = value_iteration(g, gamma);
    return rollout_return(g, vi.policy);
}

}  // namespace qrlbench::envs
