#pragma once

// Seeded experiment runs, metrics files and ablation sweeps.
//
// Per-seed CSV columns, in this order:
//   env_step,episode,episode_return,rolling_return,circuit_executions,
//   clock_time_s,anneal_jobs,qubit_count
// One row per completed episode. clock_time_s is the modeled quantum clock
// time, printed exactly from integer nanoseconds. Wall time never enters
// these files; it goes to walltime.json.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrlbench/aa_agent.hpp"
#include "qrlbench/agent.hpp"
#include "qrlbench/envs.hpp"
#include "qrlbench/errors.hpp"
#include "qrlbench/fe_agents.hpp"
#include "qrlbench/harness/config.hpp"
#include "qrlbench/pqc_agents.hpp"
#include "qrlbench/qsim.hpp"
#include "qrlbench/rng.hpp"

namespace qrlbench::harness {

using Json = nlohmann::ordered_json;

inline constexpr const char* kMetricsHeader =
    "env_step,episode,episode_return,rolling_return,circuit_executions,clock_time_s,anneal_jobs,qubit_count";

inline constexpr int kCurvePoints = 100;

struct MetricsRecord {
    std::int64_t env_step = 0;
    std::int64_t episode = 0;
    double episode_return = 0.0;
    double rolling_return = 0.0;
    std::uint64_t circuit_executions = 0;
    qsim::Duration clock_time{0};
    std::uint64_t anneal_jobs = 0;
    int qubit_count = 0;
};

/// Shortest round-trip decimal form.
inline std::string format_double(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

/// Exact seconds from nanoseconds: "S.nnnnnnnnn".
inline std::string format_seconds(qsim::Duration d) {
    const auto ns = d.count();
    const auto sec = ns / 1000000000;
    const auto frac = ns % 1000000000;
    std::string f = std::to_string(frac);
    return std::to_string(sec) + "." + std::string(9 - f.size(), '0') + f;
}

inline double to_seconds(qsim::Duration d) { return static_cast<double>(d.count()) * 1e-9; }

inline std::string to_csv_row(const MetricsRecord& r) {
    std::ostringstream o;
    o << r.env_step << ',' << r.episode << ',' << format_double(r.episode_return) << ','
      << format_double(r.rolling_return) << ',' << r.circuit_executions << ',' << format_seconds(r.clock_time) << ','
      << r.anneal_jobs << ',' << r.qubit_count;
    return o.str();
}

struct SeedResult {
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;
    std::optional<std::size_t> threshold_index;  // first record at or above threshold with a full window
    std::int64_t env_steps = 0;
    std::uint64_t circuit_executions = 0;
    qsim::Duration clock_time{0};
    std::uint64_t anneal_jobs = 0;
    double wall_seconds = 0.0;
};

inline std::unique_ptr<Agent> make_agent(const RunConfig& c, Rng& rng) {
    switch (c.family) {
        case Family::Qpg: return std::make_unique<pqc::QpgAgent>(c.ansatz_spec(), c.qpg, rng);
        case Family::Qdqn: return std::make_unique<pqc::QdqnAgent>(c.ansatz_spec(), c.qdqn, c.max_env_steps, rng);
        case Family::Fe: return std::make_unique<fe::FeAgent>(c.env.n_states(), c.fe_config(), c.max_env_steps, rng);
        case Family::Aa: return std::make_unique<aa::AaAgent>(c.env.n_states(), envs::kNumActions, c.aa);
    }
    throw ConfigError("unknown agent family");
}

inline double optimal_return(const RunConfig& c) { return envs::optimal_return(c.env); }

/// Absolute threshold if configured, else a fraction of the optimal return.
inline double threshold(const RunConfig& c) {
    if (c.threshold_absolute) return *c.threshold_absolute;
    const double opt = optimal_return(c);
    return opt >= 0.0 ? c.threshold_fraction * opt : opt / c.threshold_fraction;
}

/// One seeded run. Episodes cut by the budget are not recorded.
inline SeedResult run_seed(const RunConfig& c, std::uint64_t seed) {
    const auto wall_start = std::chrono::steady_clock::now();
    Rng rng(seed);
    auto agent = make_agent(c, rng);
    envs::GridworldEnv env(c.env);
    qsim::CostLedger ledger(c.timing);
    const double thr = threshold(c);

    SeedResult out;
    out.seed = seed;
    std::deque<double> window;
    double window_sum = 0.0;
    std::int64_t step = 0, episode = 0;

    while (step < c.max_env_steps) {
        int s = env.reset();
        agent->begin_episode();
        double ret = 0.0;
        while (!env.done() && step < c.max_env_steps) {
            const int a = agent->act(s, step, rng, ledger);
            const auto t = env.step(a);
            ++step;
            ret += t.reward;
            agent->observe(t, step, rng, ledger);
            s = t.next_state;
        }
        if (!env.done()) break;
        agent->end_episode(rng, ledger);
        ++episode;

        window.push_back(ret);
        window_sum += ret;
        if (static_cast<int>(window.size()) > c.rolling_window) {
            window_sum -= window.front();
            window.pop_front();
        }
        // recompute occasionally so drift from the running sum never builds up
        if (episode % 1024 == 0) {
            window_sum = 0.0;
            for (double x : window) window_sum += x;
        }
        MetricsRecord r;
        r.env_step = step;
        r.episode = episode;
        r.episode_return = ret;
        r.rolling_return = window_sum / static_cast<double>(window.size());
        r.circuit_executions = ledger.circuit_executions();
        r.clock_time = ledger.modeled_clock_time();
        r.anneal_jobs = ledger.anneal_jobs();
        r.qubit_count = agent->qubit_count();
        out.records.push_back(r);

        const bool full = static_cast<int>(window.size()) == c.rolling_window;
        if (!out.threshold_index && full && r.rolling_return >= thr) {
            out.threshold_index = out.records.size() - 1;
            if (c.stop_at_threshold) break;
        }
    }
    out.env_steps = step;
    out.circuit_executions = ledger.circuit_executions();
    out.clock_time = ledger.modeled_clock_time();
    out.anneal_jobs = ledger.anneal_jobs();
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return out;
}

/// Runs every seed, `c.workers` at a time; results come back in seed order.
inline std::vector<SeedResult> run_seeds(const RunConfig& c) {
    std::vector<SeedResult> results(c.seeds.size());
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(c.workers), c.seeds.size());
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < c.seeds.size(); ++i) results[i] = run_seed(c, c.seeds[i]);
        return results;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= c.seeds.size() || failure) return;
                i = next++;
            }
            try {
                results[i] = run_seed(c, c.seeds[i]);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

namespace detail {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& x) {
    MeanStd m;
    if (x.empty()) return m;
    for (double v : x) m.mean += v;
    m.mean /= static_cast<double>(x.size());
    for (double v : x) m.std += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(m.std / static_cast<double>(x.size()));
    return m;
}

inline Json json_or_null(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

/// Rolling return of the last episode finished at or before `step`.
inline std::optional<double> value_at(const std::vector<MetricsRecord>& rs, std::int64_t step) {
    std::optional<double> v;
    for (const auto& r : rs) {
        if (r.env_step > step) break;
        v = r.rolling_return;
    }
    return v;
}

}  // namespace detail

inline double final_performance(const SeedResult& r) {
    return r.records.empty() ? 0.0 : r.records.back().rolling_return;
}

/// Summary document; deterministic for a given config and seed list.
inline Json make_summary(const RunConfig& c, const std::vector<SeedResult>& results) {
    const double thr = threshold(c);
    Json j;
    j["experiment"] = c.name;
    j["family"] = to_string(c.family);
    j["environment"] = c.environment_id.empty() ? c.layout_path : c.environment_id;
    if (c.family == Family::Qpg || c.family == Family::Qdqn) {
        const auto s = c.ansatz_spec();
        j["encoding"] = std::string(ansatz::to_string(s.encoding));
        j["ansatz_variant"] = std::string(ansatz::to_string(s.variant));
        j["n_layers"] = s.n_layers;
        const auto circuit = ansatz::build_circuit(s, 0);
        j["one_qubit_gates_per_execution"] = circuit.one_qubit_gates();
        j["two_qubit_gates_per_execution"] = circuit.two_qubit_gates();
    } else if (c.family == Family::Fe) {
        j["encoding"] = std::string(ansatz::to_string(c.encoding));
        j["replicas"] = c.fe.estimator.replicas;
        j["estimator"] = c.fe.estimator.kind == fe::EstimatorKind::Exact ? "exact" : "sa";
    }
    j["qubit_count"] = results.empty() || results[0].records.empty() ? 0 : results[0].records[0].qubit_count;
    j["max_env_steps"] = c.max_env_steps;
    j["stop_at_threshold"] = c.stop_at_threshold;
    j["optimal_return"] = optimal_return(c);
    j["threshold"] = thr;
    j["rolling_window"] = c.rolling_window;
    j["seeds"] = c.seeds;
    j["metrics_columns"] = kMetricsHeader;

    std::vector<double> finals, steps_reached, clock_at_thr_censored, exec_totals, clock_totals;
    Json per_seed = Json::array();
    for (const auto& r : results) {
        Json s;
        s["seed"] = r.seed;
        s["metrics_file"] = "seed_" + std::to_string(r.seed) + ".csv";
        s["episodes"] = r.records.size();
        s["env_steps"] = r.env_steps;
        s["final_performance"] = final_performance(r);
        if (r.threshold_index) {
            const auto& t = r.records[*r.threshold_index];
            s["steps_to_threshold"] = t.env_step;
            s["executions_at_threshold"] = t.circuit_executions;
            s["clock_time_at_threshold_s"] = to_seconds(t.clock_time);
            steps_reached.push_back(static_cast<double>(t.env_step));
            clock_at_thr_censored.push_back(to_seconds(t.clock_time));
        } else {
            s["steps_to_threshold"] = nullptr;
            s["executions_at_threshold"] = nullptr;
            s["clock_time_at_threshold_s"] = nullptr;
            clock_at_thr_censored.push_back(to_seconds(r.clock_time));
        }
        s["total_circuit_executions"] = r.circuit_executions;
        s["total_anneal_jobs"] = r.anneal_jobs;
        s["total_clock_time_ns"] = r.clock_time.count();
        s["total_clock_time_s"] = to_seconds(r.clock_time);
        finals.push_back(final_performance(r));
        exec_totals.push_back(static_cast<double>(r.circuit_executions));
        clock_totals.push_back(to_seconds(r.clock_time));
        per_seed.push_back(std::move(s));
    }

    Json agg;
    const auto fin = detail::mean_std(finals);
    agg["final_performance_mean"] = fin.mean;
    agg["final_performance_std"] = fin.std;
    agg["seeds_reaching_threshold"] = steps_reached.size();
    agg["steps_to_threshold_mean"] =
        detail::json_or_null(steps_reached.empty() ? std::nullopt : std::optional(detail::mean_std(steps_reached).mean));
    // seeds that never reach the threshold count with their whole budget
    agg["clock_time_at_threshold_s_mean"] = detail::mean_std(clock_at_thr_censored).mean;
    agg["total_circuit_executions_mean"] = detail::mean_std(exec_totals).mean;
    agg["total_clock_time_s_mean"] = detail::mean_std(clock_totals).mean;
    j["aggregate"] = agg;
    j["per_seed"] = per_seed;

    Json curve = Json::array();
    for (int k = 1; k <= kCurvePoints; ++k) {
        const std::int64_t step = c.max_env_steps * k / kCurvePoints;
        std::vector<double> ys;
        for (const auto& r : results) {
            if (auto v = detail::value_at(r.records, step)) ys.push_back(*v);
        }
        Json p;
        p["env_step"] = step;
        p["seeds"] = ys.size();
        const auto ms = detail::mean_std(ys);
        p["mean"] = ys.empty() ? Json(nullptr) : Json(ms.mean);
        p["std"] = ys.empty() ? Json(nullptr) : Json(ms.std);
        curve.push_back(std::move(p));
    }
    j["curve"] = curve;
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
}

inline std::string metrics_csv(const SeedResult& r) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const auto& rec : r.records) out += to_csv_row(rec) + "\n";
    return out;
}

struct ExperimentResult {
    RunConfig config;
    std::vector<SeedResult> seeds;
    Json summary;
};

/// Runs every seed and writes seed_<n>.csv, summary.json and walltime.json
/// into c.output_dir.
inline ExperimentResult run_experiment(const RunConfig& c) {
    validate(c);
    std::filesystem::create_directories(c.output_dir);
    ExperimentResult res{c, run_seeds(c), {}};
    res.summary = make_summary(c, res.seeds);
    Json wall;
    for (const auto& r : res.seeds) {
        write_text(c.output_dir / ("seed_" + std::to_string(r.seed) + ".csv"), metrics_csv(r));
        wall[std::to_string(r.seed)] = r.wall_seconds;
    }
    write_text(c.output_dir / "summary.json", res.summary.dump(2) + "\n");
    write_text(c.output_dir / "walltime.json", wall.dump(2) + "\n");
    return res;
}

// ---------------------------------------------------------------------------
// Sweeps

inline constexpr const char* kComparisonHeader =
    "axis,value,experiment,qubit_count,two_qubit_gates_per_execution,final_performance_mean,final_performance_std,"
    "seeds_reaching_threshold,steps_to_threshold_mean,total_circuit_executions_mean,total_clock_time_s_mean";

/// Copy of `base` with one axis set to `value`.
inline RunConfig apply_axis(const RunConfig& base, const std::string& axis, const std::string& value) {
    RunConfig c = base;
    c.sweep.clear();
    if (axis == "ansatz_variant") {
        c.variant = require_variant(value);
    } else if (axis == "replica_count") {
        try {
            std::size_t used = 0;
            c.fe.estimator.replicas = std::stoi(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ConfigError("replica_count value '" + value + "' is not an integer");
        }
    } else if (axis == "encoding") {
        c.encoding = require_encoding(value);
        c.encoding_set = true;
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "'");
    }
    c.name = base.name + "_" + axis + "-" + value;
    c.output_dir = base.output_dir / c.name;
    return c;
}

/// Checks the sweep config and every derived config before anything runs.
inline std::vector<RunConfig> plan_sweep(const RunConfig& base, const std::string& axis,
                                         std::optional<std::vector<std::string>> values = std::nullopt) {
    if (!values) {
        const auto it = base.sweep.find(axis);
        if (it == base.sweep.end()) throw ConfigError("config has no values for sweep axis '" + axis + "'");
        values = it->second;
    }
    RunConfig probe = base;
    probe.sweep = {{axis, *values}};
    validate(probe);
    std::vector<RunConfig> out;
    for (const auto& v : *values) {
        out.push_back(apply_axis(base, axis, v));
        validate(out.back());
    }
    return out;
}

inline std::string comparison_row(const std::string& axis, const std::string& value, const Json& s) {
    const auto& a = s["aggregate"];
    auto num = [](const Json& v) { return v.is_null() ? std::string() : format_double(v.get<double>()); };
    std::ostringstream o;
    o << axis << ',' << value << ',' << s["experiment"].get<std::string>() << ',' << s["qubit_count"].get<int>() << ','
      << (s.contains("two_qubit_gates_per_execution") ? std::to_string(s["two_qubit_gates_per_execution"].get<int>())
                                                      : std::string())
      << ',' << num(a["final_performance_mean"]) << ',' << num(a["final_performance_std"]) << ','
      << a["seeds_reaching_threshold"].get<int>() << ',' << num(a["steps_to_threshold_mean"]) << ','
      << num(a["total_circuit_executions_mean"]) << ',' << num(a["total_clock_time_s_mean"]);
    return o.str();
}

struct SweepResult {
    std::string axis;
    std::vector<std::string> values;
    std::vector<ExperimentResult> runs;
    std::filesystem::path table_csv;
    std::filesystem::path table_md;
};

/// One experiment per axis value, then comparison_<axis>.csv / .md in the
/// base output directory.
inline SweepResult run_sweep(const RunConfig& base, const std::string& axis,
                             std::optional<std::vector<std::string>> values = std::nullopt) {
    const auto plan = plan_sweep(base, axis, values);
    SweepResult res;
    res.axis = axis;
    res.values = values ? *values : base.sweep.at(axis);
    for (const auto& c : plan) res.runs.push_back(run_experiment(c));

    std::string csv = std::string(kComparisonHeader) + "\n";
    std::ostringstream md;
    md << "| " << axis << " | qubits | 2q gates/exec | final return (mean +- std) | seeds at threshold | "
       << "steps to threshold | executions | clock time (s) |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& s = res.runs[i].summary;
        const auto& a = s["aggregate"];
        csv += comparison_row(axis, res.values[i], s) + "\n";
        auto fmt = [](const Json& v, int prec) {
            if (v.is_null()) return std::string("-");
            std::ostringstream o;
            o.setf(std::ios::fixed);
            o.precision(prec);
            o << v.get<double>();
            return o.str();
        };
        md << "| " << res.values[i] << " | " << s["qubit_count"].get<int>() << " | "
           << (s.contains("two_qubit_gates_per_execution") ? std::to_string(s["two_qubit_gates_per_execution"].get<int>())
                                                           : "-")
           << " | " << fmt(a["final_performance_mean"], 3) << " +- " << fmt(a["final_performance_std"], 3) << " | "
           << a["seeds_reaching_threshold"].get<int>() << "/" << s["seeds"].size() << " | "
           << fmt(a["steps_to_threshold_mean"], 0) << " | " << fmt(a["total_circuit_executions_mean"], 0) << " | "
           << fmt(a["total_clock_time_s_mean"], 3) << " |\n";
    }
    std::filesystem::create_directories(base.output_dir);
    res.table_csv = base.output_dir / ("comparison_" + axis + ".csv");
    res.table_md = base.output_dir / ("comparison_" + axis + ".md");
    write_text(res.table_csv, csv);
    write_text(res.table_md, md.str());
    return res;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline bool is_number(const std::string& s) {
    if (s.empty()) return false;
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    return r.ec == std::errc() && r.ptr == s.data() + s.size() && std::isfinite(x);
}

}  // namespace detail

/// Problems found in a comparison table; empty when it is well formed.
inline std::vector<std::string> validate_comparison_table(const std::filesystem::path& p,
                                                          std::size_t expected_rows) {
    std::vector<std::string> problems;
    std::ifstream f(p);
    if (!f) return {"cannot open " + p.string()};
    std::string line;
    if (!std::getline(f, line) || line != kComparisonHeader) problems.push_back("header mismatch");
    const auto columns = detail::split_csv_line(kComparisonHeader).size();
    std::size_t rows = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ++rows;
        const auto cells = detail::split_csv_line(line);
        const std::string where = "row " + std::to_string(rows) + ": ";
        if (cells.size() != columns) {
            problems.push_back(where + "expected " + std::to_string(columns) + " cells");
            continue;
        }
        for (std::size_t k : {3u, 5u, 6u, 7u, 9u, 10u}) {
            if (!detail::is_number(cells[k])) problems.push_back(where + "column " + std::to_string(k) + " not numeric");
        }
        for (std::size_t k : {4u, 8u}) {
            if (!cells[k].empty() && !detail::is_number(cells[k])) {
                problems.push_back(where + "column " + std::to_string(k) + " not numeric");
            }
        }
    }
    if (rows != expected_rows) {
        problems.push_back("expected " + std::to_string(expected_rows) + " rows, found " + std::to_string(rows));
    }
    return problems;
}

}  // namespace qrlbench::harness
