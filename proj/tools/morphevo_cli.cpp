// morphevo command line: run experiments, recompute metrics, compare runs.
//
//   morphevo run --variant AGW --replicates 15 --robots 500 --pop 25 --budget 200 \
//                --cores 8 --seed 42 --arena data/default.map --out runs/agw
//   morphevo metrics --run runs/agw
//   morphevo compare --runs runs/agw runs/sgo --test ranksum
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morphevo/morphevo.hpp"

namespace fs = std::filesystem;
using namespace morphevo;

namespace {

std::vector<fs::path> replicate_dirs(const fs::path &run) {
    std::vector<fs::path> dirs;
    if (fs::exists(run / "manifest.json")) return {run};
    if (!fs::is_directory(run)) throw ConfigError("no such run directory: " + run.string());
    for (const auto &e : fs::directory_iterator(run))
        if (e.is_directory() && e.path().filename().string().rfind("rep_", 0) == 0) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw CorruptRunError("no replicates under " + run.string());
    return dirs;
}

int cmd_run(const ExperimentConfig &config) {
    const auto tables = run_experiment(config);
    for (std::size_t r = 0; r < tables.size(); ++r)
        std::printf("replicate %zu: endpoint mean pool fitness %.4f (%.1f tiles)\n", r, endpoint_fitness(tables[r]),
                    endpoint_fitness(tables[r]) * 64.0);
    std::printf("wrote %s\n", config.out_dir.c_str());
    return 0;
}

int cmd_metrics(const std::string &run, bool check) {
    int mismatches = 0;
    for (const auto &dir : replicate_dirs(run)) {
        const auto tables = replay_metrics(dir);
        for (const auto &[name, content] : tables) {
            const auto path = dir / "metrics" / name;
            if (check) {
                std::ifstream in(path, std::ios::binary);
                std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
                if (stored != content) {
                    std::printf("%s: differs from replay\n", path.string().c_str());
                    ++mismatches;
                }
            } else {
                fs::create_directories(path.parent_path());
                std::ofstream(path, std::ios::binary) << content;
            }
        }
        std::printf("%s: endpoint mean pool fitness %.4f\n", dir.string().c_str(), endpoint_fitness(tables));
    }
    return mismatches == 0 ? 0 : 2;
}

int cmd_compare(const std::vector<std::string> &runs, const std::string &test) {
    if (runs.size() != 2) throw ConfigError("compare needs exactly two runs");
    if (test != "ranksum") throw ConfigError("unknown test '" + test + "'");
    std::vector<std::vector<double>> endpoints(2);
    for (std::size_t i = 0; i < 2; ++i) {
        for (const auto &dir : replicate_dirs(runs[i])) endpoints[i].push_back(endpoint_fitness(replay_metrics(dir)));
        double mean = 0.0;
        for (double v : endpoints[i]) mean += v;
        mean /= static_cast<double>(endpoints[i].size());
        std::printf("%s: %zu replicates, mean endpoint fitness %.4f\n", runs[i].c_str(), endpoints[i].size(), mean);
    }
    const auto r = rank_sum_test(endpoints[0], endpoints[1]);
    std::printf("Mann-Whitney U = %.1f, z = %.3f, p = %.4g\n", r.u, r.z, r.p_value);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Joint body and controller evolution experiments"};
    app.require_subcommand(1);

    ExperimentConfig config;
    auto *run = app.add_subcommand("run", "run replicates of one variant");
    run->add_option("--variant", config.variant, "three letters: S/A, G/N, O/W")->required();
    run->add_option("--replicates", config.replicates);
    run->add_option("--robots", config.robot_budget, "robots created per replicate");
    run->add_option("--pop", config.pool_size, "pool size P");
    run->add_option("--budget", config.learner_budget, "evaluations per learner");
    run->add_option("--lambda", config.initial_lambda, "initial learner population");
    run->add_option("--knn", config.knn);
    run->add_option("--cores", config.cores, "worker threads");
    run->add_option("--slots", config.slots, "logical evaluation slots");
    run->add_option("--seed", config.seed);
    run->add_option("--arena", config.arena_file, "arena mask file");
    run->add_option("--out", config.out_dir)->required();
    run->add_flag("--trace", config.scheduler_trace, "dump the scheduler trace");

    std::string metrics_run;
    bool check = false;
    auto *metrics = app.add_subcommand("metrics", "recompute metrics tables from a run directory");
    metrics->add_option("--run", metrics_run)->required();
    metrics->add_flag("--check", check, "compare against the stored tables instead of writing");

    std::vector<std::string> runs;
    std::string test = "ranksum";
    auto *compare = app.add_subcommand("compare", "compare endpoint fitness of two runs");
    compare->add_option("--runs", runs)->required()->expected(2);
    compare->add_option("--test", test);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(config);
        if (*metrics) return cmd_metrics(metrics_run, check);
        if (*compare) return cmd_compare(runs, test);
    } catch (const ConfigError &e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    return 0;
}
