// qrlbench: run, sweep, report and validate experiment configs.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrlbench/harness/config.hpp"
#include "qrlbench/harness/report.hpp"
#include "qrlbench/harness/runner.hpp"

namespace h = qrlbench::harness;

namespace {

void print_summary(const h::Json& s) {
    const auto& a = s["aggregate"];
    std::cout << s["experiment"].get<std::string>() << ": final return " << a["final_performance_mean"].get<double>()
              << " +- " << a["final_performance_std"].get<double>() << ", " << a["seeds_reaching_threshold"].get<int>()
              << "/" << s["seeds"].size() << " seeds at threshold " << s["threshold"].get<double>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum RL benchmark harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string axis;
    std::vector<std::string> values;
    std::string dir;
    int workers = 0;

    auto* run = app.add_subcommand("run", "run every seed of an experiment");
    run->add_option("config", config_path, "YAML config")->required();
    run->add_option("--workers", workers, "parallel seeds (overrides the config)");

    auto* sweep = app.add_subcommand("sweep", "run one experiment per value of an ablation axis");
    sweep->add_option("config", config_path, "YAML config")->required();
    sweep->add_option("--axis", axis, "ansatz_variant, replica_count or encoding")->required();
    sweep->add_option("--values", values, "axis values (default: the config's sweep list)");
    sweep->add_option("--workers", workers, "parallel seeds (overrides the config)");

    auto* rep = app.add_subcommand("report", "collect summaries under a directory");
    rep->add_option("dir", dir, "results directory")->required();

    auto* val = app.add_subcommand("validate", "check a config without running it");
    val->add_option("config", config_path, "YAML config")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run || *sweep || *val) {
            auto cfg = h::load_config(config_path);
            if (workers > 0) cfg.workers = workers;
            if (*val) {
                for (const auto& [ax, vs] : cfg.sweep) h::plan_sweep(cfg, ax, vs);
                std::cout << config_path << ": ok (" << h::to_string(cfg.family) << ", " << cfg.seeds.size()
                          << " seeds, " << cfg.max_env_steps << " steps)\n";
            } else if (*run) {
                const auto res = h::run_experiment(cfg);
                print_summary(res.summary);
                std::cout << "wrote " << cfg.output_dir.string() << "\n";
            } else {
                const auto res = h::run_sweep(cfg, axis, values.empty() ? std::nullopt : std::optional(values));
                for (const auto& r : res.runs) print_summary(r.summary);
                std::cout << "wrote " << res.table_csv.string() << "\n";
            }
        } else if (*rep) {
            const auto res = h::report(dir);
            std::cout << "wrote " << res.long_csv.string() << " and " << res.table_md.string() << "\n";
        }
    } catch (const qrlbench::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
