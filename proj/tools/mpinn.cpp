#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mpinn/harness/experiment.hpp"

namespace fs = std::filesystem;
using namespace mpinn::harness;

namespace {

enum Exit { ok = 0, config_error = 1, runtime_failure = 2, partial = 3 };

struct Common {
    std::string config;
    std::string out;
    std::string seeds;
    std::size_t threads = 0;
};

void add_common(CLI::App* app, Common& c, bool with_seeds) {
    app->add_option("--config", c.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    app->add_option("--out", c.out, "Output directory (overrides experiment.output)");
    if (with_seeds) {
        app->add_option("--seeds", c.seeds, "Comma-separated replication seeds");
        app->add_option("--threads", c.threads, "Worker threads for replication seeds");
    }
}

ExperimentConfig load(const Common& c) {
    auto cfg = load_config(c.config);
    if (!c.out.empty()) cfg.output = c.out;
    if (!c.seeds.empty()) cfg.seeds = parse_seed_list(c.seeds);
    if (c.threads > 0) cfg.threads = c.threads;
    cfg.validate();
    return cfg;
}

void print_summary(const ExperimentReport& r) {
    for (const auto& m : r.methods) {
        std::fprintf(stderr, "%s%s%s", r.axis.empty() ? "" : (r.axis + "=").c_str(),
                     r.axis_value ? std::to_string(static_cast<long long>(*r.axis_value)).c_str() : "",
                     r.axis.empty() ? "" : " ");
        std::fprintf(stderr, "%-12s", std::string(to_string(m.method)).c_str());
        const char* names[] = {"K", "h", "C"};
        for (std::size_t i = 0; i < 3; ++i) {
            if (m.eps[i].count) std::fprintf(stderr, "  eps_%s %.4e +- %.2e", names[i], m.eps[i].mean, m.eps[i].stddev);
        }
        std::size_t failed = 0;
        for (const auto& run : m.runs) failed += !run.ok;
        if (failed) std::fprintf(stderr, "  (%zu failed: %s)", failed, m.runs.front().error.c_str());
        std::fprintf(stderr, "\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed assimilation of conductivity, head and concentration"};
    app.require_subcommand(1);

    Common gen_opts, train_opts, sweep_opts, eval_opts;
    auto* gen = app.add_subcommand("generate", "Write reference K, h and C fields");
    add_common(gen, gen_opts, false);
    auto* train = app.add_subcommand("train", "Run one experiment");
    add_common(train, train_opts, true);
    auto* sw = app.add_subcommand("sweep", "Run an experiment per value of the configured sweep axis");
    add_common(sw, sweep_opts, true);
    std::string axis_text, values_text;
    sw->add_option("--axis", axis_text, "Sweep axis: N, N_K, N_C, width, N_f_h");
    sw->add_option("--values", values_text, "Comma-separated axis values");
    auto* ev = app.add_subcommand("eval", "Errors of saved networks against the reference fields");
    add_common(ev, eval_opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::config_error;
    }

    try {
        if (*gen) {
            const auto cfg = load(gen_opts);
            const fs::path dir = cfg.output / "reference";
            const auto ref = generate_reference(cfg);
            save_reference(dir, ref);
            std::fprintf(stderr, "reference fields written to %s\n", dir.string().c_str());
            return Exit::ok;
        }
        if (*train) {
            const auto cfg = load(train_opts);
            const auto report = run_experiment(cfg);
            std::cout << kCsvHeader << '\n' << report_csv(report);
            print_summary(report);
            return report.partial() ? Exit::partial : Exit::ok;
        }
        if (*sw) {
            auto cfg = load(sweep_opts);
            if (!axis_text.empty()) cfg.sweep_axis = parse_axis(axis_text);
            if (!values_text.empty()) {
                std::ostringstream ini;
                ini << "[sweep]\nvalues = " << values_text << '\n';
                std::istringstream is(ini.str());
                cfg.sweep_values = parse_config(is).sweep_values;
            }
            if (!cfg.sweep_axis || cfg.sweep_values.empty()) throw ConfigError("sweep needs an axis and values");
            cfg.validate();
            const auto result = sweep(cfg, *cfg.sweep_axis, cfg.sweep_values);
            std::cout << sweep_csv(result);
            for (const auto& r : result.reports) print_summary(r);
            return result.partial ? Exit::partial : Exit::ok;
        }
        if (*ev) {
            const auto cfg = load(eval_opts);
            const auto csv = evaluate_saved(cfg);
            std::ofstream(cfg.output / "eval.csv") << csv;
            std::cout << csv;
            return Exit::ok;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return Exit::config_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Exit::runtime_failure;
    }
    return Exit::ok;
}
