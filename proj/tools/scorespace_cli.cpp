// Command-line harness: data generation, leave-one-out policy comparison,
// minimal-set experiments, regret-bound validation, and the worked
// four-direction scenario.
//
// Exit codes: 0 success, 2 config error, 3 assertion failure.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "scorespace/bench.hpp"
#include "scorespace/config.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    std::string policies;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int k = 0;
    bool k_set = false;
    double zeta = 0.0;
    bool zeta_set = false;
    int trials = 0;
    bool trials_set = false;
};

scorespace::BenchConfig load(const CliOverrides& cli) {
    nlohmann::json j;
    if (!cli.config_path.empty()) j = scorespace::load_config(cli.config_path);
    auto config = scorespace::BenchConfig::from_json(j);
    if (!cli.out_dir.empty()) config.out_dir = cli.out_dir;
    if (cli.seed_set) config.seed = cli.seed;
    if (cli.k_set) config.k = cli.k;
    if (cli.trials_set) config.trials = cli.trials;
    if (cli.zeta_set)
        for (auto& p : config.policies) p.zeta = cli.zeta;
    if (!cli.policies.empty()) {
        config.policies.clear();
        std::string cur;
        for (char c : cli.policies + ",") {
            if (c == ',') {
                if (!cur.empty()) config.policies.push_back({cur});
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (cli.zeta_set)
            for (auto& p : config.policies) p.zeta = cli.zeta;
    }
    return config;
}

void add_common_flags(CLI::App* cmd, CliOverrides& cli) {
    cmd->add_option("--config", cli.config_path, "config file (TOML or JSON)");
    cmd->add_option("--out", cli.out_dir, "output directory");
    cmd->add_option("--seed", cli.seed, "master seed")->each([&](const std::string&) {
        cli.seed_set = true;
    });
    cmd->add_option("--policies", cli.policies, "comma-separated policy list");
    cmd->add_option("--k", cli.k, "evaluation budget")->each([&](const std::string&) {
        cli.k_set = true;
    });
    cmd->add_option("--zeta", cli.zeta, "exploration constant")->each([&](const std::string&) {
        cli.zeta_set = true;
    });
    cmd->add_option("--trials", cli.trials, "validation trial count")->each([&](const std::string&) {
        cli.trials_set = true;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"experience-guided constraint selection bench"};
    app.require_subcommand(1);
    CliOverrides cli;

    auto* gen = app.add_subcommand("gen", "generate and persist an experience bundle");
    auto* loocv = app.add_subcommand("loocv", "leave-one-out policy comparison");
    auto* minset = app.add_subcommand("minset", "minimal constraint set experiment");
    auto* regret = app.add_subcommand("regret", "regret bound validation");
    auto* golden = app.add_subcommand("golden", "worked four-direction scenario checks");
    for (auto* cmd : {gen, loocv, minset, regret, golden}) add_common_flags(cmd, cli);

    CLI11_PARSE(app, argc, argv);

    try {
        if (golden->parsed()) {
            const auto report = scorespace::cmd_golden();
            const auto line = [](const char* name, bool ok) {
                std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
            };
            line("initial three-way tie", report.initial_three_way_tie);
            line("uncorrelated constraint unchanged", report.uncorrelated_unchanged);
            line("negative correlate rises", report.negative_correlate_rises);
            line("positive correlate falls", report.positive_correlate_falls);
            line("feasible constraint within two evaluations", report.feasible_within_two);
            line("flipped-correlation control detected", report.control_detects_flip);
            return report.pass() ? 0 : 3;
        }

        const auto config = load(cli);
        if (gen->parsed()) {
            scorespace::cmd_gen(config);
            return 0;
        }

        auto domain = scorespace::make_domain(config.domain);
        const auto bundle = scorespace::obtain_bundle(config, *domain);
        if (loocv->parsed()) {
            const auto result = scorespace::cmd_loocv(config, bundle, *domain);
            std::cout << "loocv: folds=" << result.folds << " k=" << result.k << '\n';
            for (const auto& stats : result.policies)
                std::cout << "  " << stats.policy
                          << ": evals_to_ff=" << stats.mean_evals_to_ff
                          << " cost_to_ff=" << stats.mean_cost_to_ff
                          << " success=" << stats.success_rate << '\n';
        } else if (minset->parsed()) {
            const auto report = scorespace::cmd_minset(config, bundle, *domain);
            std::cout << "minset: |L|=" << report.set.indices.size() << " of m=" << report.m
                      << " coverage=" << report.set.covered.size() << '/' << report.set.n_coverable
                      << " update_cost_ratio=" << report.update_cost_ratio << '\n';
        } else if (regret->parsed()) {
            const auto report = scorespace::cmd_regret(config, bundle);
            std::cout << "regret: delta=" << report.delta << " k=" << report.k
                      << " trials=" << report.trials
                      << " violation_rate=" << report.violation_rate
                      << " mean_bound=" << report.mean_bound << '\n';
            if (report.violation_rate > report.delta) return 3;
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
