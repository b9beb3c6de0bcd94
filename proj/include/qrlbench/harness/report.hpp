#pragma once

// Collects every summary.json under a directory into a plot-ready long CSV
// (experiment,seed,x_axis,x,y) and a markdown table ranked by final return.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qrlbench/errors.hpp"
#include "qrlbench/harness/runner.hpp"

namespace qrlbench::harness {

inline constexpr const char* kLongHeader = "experiment,seed,x_axis,x,y";

struct ReportResult {
    std::filesystem::path long_csv;
    std::filesystem::path table_md;
    std::vector<std::string> experiments;  // in table order
};

namespace detail {

inline Json read_json(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw Error("cannot open " + p.string());
    try {
        return Json::parse(f);
    } catch (const Json::exception& e) {
        throw Error(p.string() + ": " + e.what());
    }
}

}  // namespace detail

/// Writes report_long.csv and report.md into `dir`.
inline ReportResult report(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ArgumentError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> summaries;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() == "summary.json") summaries.push_back(e.path());
    }
    if (summaries.empty()) throw ArgumentError("no summary.json found under " + dir.string());
    std::sort(summaries.begin(), summaries.end());

    struct Row {
        std::string experiment;
        std::string family;
        int qubits;
        double final_mean;
        double final_std;
        Json agg;
        std::size_t seeds;
    };
    std::vector<Row> rows;
    std::string csv = std::string(kLongHeader) + "\n";

    for (const auto& path : summaries) {
        const Json s = detail::read_json(path);
        const auto name = s.at("experiment").get<std::string>();
        for (const auto& ps : s.at("per_seed")) {
            const auto seed = std::to_string(ps.at("seed").get<std::uint64_t>());
            const auto metrics = path.parent_path() / ps.at("metrics_file").get<std::string>();
            std::ifstream f(metrics);
            if (!f) throw Error("missing metrics file " + metrics.string());
            std::string line;
            std::getline(f, line);
            if (line != kMetricsHeader) throw Error(metrics.string() + ": unexpected header");
            std::string by_steps, by_exec, by_clock;
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                const auto cells = detail::split_csv_line(line);
                if (cells.size() != 8) throw Error(metrics.string() + ": malformed row");
                const std::string prefix = name + "," + seed + ",";
                by_steps += prefix + "env_steps," + cells[0] + "," + cells[3] + "\n";
                by_exec += prefix + "circuit_executions," + cells[4] + "," + cells[3] + "\n";
                by_clock += prefix + "clock_time_s," + cells[5] + "," + cells[3] + "\n";
            }
            csv += by_steps + by_exec + by_clock;
        }
        const auto& a = s.at("aggregate");
        rows.push_back({name, s.at("family").get<std::string>(), s.at("qubit_count").get<int>(),
                        a.at("final_performance_mean").get<double>(), a.at("final_performance_std").get<double>(), a,
                        s.at("seeds").size()});
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.final_mean > y.final_mean; });
    std::ostringstream md;
    md.setf(std::ios::fixed);
    md << "| experiment | family | qubits | final return (mean +- std) | seeds at threshold | steps to threshold | "
          "executions | clock time (s) | clock time at threshold (s) |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    ReportResult out;
    for (const auto& r : rows) {
        auto num = [](const Json& v, int prec) {
            if (v.is_null()) return std::string("-");
            std::ostringstream o;
            o.setf(std::ios::fixed);
            o.precision(prec);
            o << v.get<double>();
            return o.str();
        };
        md.precision(3);
        md << "| " << r.experiment << " | " << r.family << " | " << r.qubits << " | " << r.final_mean << " +- "
           << r.final_std << " | " << r.agg.at("seeds_reaching_threshold").get<int>() << "/" << r.seeds << " | "
           << num(r.agg.at("steps_to_threshold_mean"), 0) << " | " << num(r.agg.at("total_circuit_executions_mean"), 0)
           << " | " << num(r.agg.at("total_clock_time_s_mean"), 3) << " | "
           << num(r.agg.at("clock_time_at_threshold_s_mean"), 3) << " |\n";
        out.experiments.push_back(r.experiment);
    }
    out.long_csv = dir / "report_long.csv";
    out.table_md = dir / "report.md";
    write_text(out.long_csv, csv);
    write_text(out.table_md, md.str());
    return out;
}

}  // namespace qrlbench::harness
