// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier, end-to-end checks live here; fine-grained cases
// are in the unit suite.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "scorespace/bench.hpp"
#include "scorespace/belief.hpp"
#include "scorespace/minset.hpp"
#include "scorespace/regret.hpp"

using namespace scorespace;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool ok, double seconds) {
    std::printf("%s criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <typename Fn>
void criterion(int number, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = fn();
    } catch (const std::exception& e) {
        std::printf("  exception: %s\n", e.what());
        ok = false;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(number, name, ok, seconds);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperienceBundle bundle_from_pattern(
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& feasibility, std::uint64_t seed) {
    const Eigen::Index n = feasibility.rows();
    const Eigen::Index m = feasibility.cols();
    Rng rng(seed);
    ExperienceBundle bundle;
    bundle.scores.values.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            bundle.scores.values(i, j) = feasibility(i, j) ? -1.0 - 4.0 * rng.uniform01() : 0.0;
    bundle.feasibility = feasibility;
    bundle.sentinel = infeasibility_sentinel(bundle.scores.values, feasibility);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            if (!feasibility(i, j)) bundle.scores.values(i, j) = bundle.sentinel;
    bundle.constraints.params = Eigen::MatrixXd::Zero(m, 1);
    for (Eigen::Index j = 0; j < m; ++j) {
        bundle.constraints.params(j, 0) = static_cast<double>(j);
        bundle.constraints.ids.push_back("c" + std::to_string(j));
    }
    bundle.scores.constraint_ids = bundle.constraints.ids;
    for (Eigen::Index i = 0; i < n; ++i)
        bundle.scores.instance_ids.push_back("w" + std::to_string(i));
    bundle.validate();
    return bundle;
}

/// Independent sentinel recomputation + strict-relation check for a bundle.
bool sentinel_relation_holds(const ExperienceBundle& bundle) {
    double min = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < bundle.n_instances(); ++i)
        for (Eigen::Index j = 0; j < bundle.n_constraints(); ++j)
            if (bundle.feasibility(i, j)) {
                min = std::min(min, bundle.scores.values(i, j));
                sum += bundle.scores.values(i, j);
                ++count;
            }
    if (count == 0) return true;
    const double mean = sum / static_cast<double>(count);
    double spread = mean - min;
    if (spread <= 0.0) spread = 1.0;
    const double recomputed = min - spread;
    if (std::abs(recomputed - bundle.sentinel) > 1e-12 * std::max(1.0, std::abs(recomputed)))
        return false;
    for (Eigen::Index i = 0; i < bundle.n_instances(); ++i)
        for (Eigen::Index j = 0; j < bundle.n_constraints(); ++j)
            if (bundle.feasibility(i, j) != (bundle.scores.values(i, j) > bundle.sentinel))
                return false;
    return true;
}

BenchConfig ordering_benchmark_config() {
    nlohmann::json j;
    j["domain"] = {{"domain", "grid"},      {"width", 20},       {"height", 20},
                   {"density", 0.05},       {"n_directions", 8}, {"clustered", true},
                   {"cluster_min", 3},      {"cluster_max", 6},  {"margin", 2},
                   {"cubby", true},         {"open_width", 2},   {"wall_prob", 0.995},
                   {"direction_skew", 0.35}, {"flip_prob", 0.33}};
    j["n"] = 200;
    j["folds"] = 50;
    j["seed"] = 77;
    j["solutions_per_instance"] = 4;
    j["policies"] = {"box", "static", "rand"};
    BenchConfig config = BenchConfig::from_json(j);
    config.out_dir = std::filesystem::temp_directory_path() / "scorespace_acc_ordering";
    return config;
}

BenchConfig minset_benchmark_config() {
    nlohmann::json j;
    j["domain"] = {{"domain", "grid"}, {"width", 20},       {"height", 20},
                   {"density", 0.3},   {"n_directions", 64}, {"clustered", true},
                   {"cluster_min", 3}, {"cluster_max", 6}};
    j["n"] = 200;
    j["folds"] = 50;
    j["seed"] = 77;
    j["solutions_per_instance"] = 6;
    j["policies"] = {"box"};
    BenchConfig config = BenchConfig::from_json(j);
    config.out_dir = std::filesystem::temp_directory_path() / "scorespace_acc_minset";
    return config;
}

}  // namespace

int main() {
    criterion(1, "incremental conditioning equals block conditioning", [] {
        Rng rng(101);
        double max_error = 0.0;
        for (int trial = 0; trial < 500; ++trial) {
            const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(19));  // 2..20
            GaussianBelief belief;
            belief.covariance = oracle::random_psd(m, rng, 0.3);
            belief.mean.resize(m);
            for (Eigen::Index i = 0; i < m; ++i) belief.mean(i) = rng.normal();

            const int observations = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
            std::vector<std::pair<Eigen::Index, double>> observed;
            GaussianBelief current = belief;
            for (int t = 0; t < observations; ++t) {
                Eigen::Index pick;
                do {
                    pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
                } while (current.is_evaluated(pick));
                const double value = rng.normal();
                observed.emplace_back(pick, value);
                current = condition(current, pick, value);
            }

            const auto block = oracle::block_condition(belief.mean, belief.covariance, observed);
            for (std::size_t a = 0; a < block.untried.size(); ++a) {
                const Eigen::Index i = block.untried[a];
                max_error = std::max(max_error,
                                     std::abs(current.mean(i) -
                                              block.mean(static_cast<Eigen::Index>(a))));
                for (std::size_t b = 0; b < block.untried.size(); ++b) {
                    const Eigen::Index j = block.untried[b];
                    max_error = std::max(
                        max_error, std::abs(current.covariance(i, j) -
                                            block.cov(static_cast<Eigen::Index>(a),
                                                      static_cast<Eigen::Index>(b))));
                }
            }
        }
        std::printf("  max abs error %.3e over 500 matrices\n", max_error);
        return max_error < 1e-9;
    });

    // Criteria 2 and 3 share the same 200 selection traces.
    static std::vector<std::vector<double>> trace_pivots;
    static std::vector<double> trace_mi_direct;
    static double min_pivot_margin = 0.0;
    criterion(2, "sequential information gain equals the subset log-det", [] {
        Rng rng(202);
        const double sigma = 0.4;
        double max_error = 0.0;
        min_pivot_margin = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 200; ++trial) {
            const Eigen::Index m = 6 + static_cast<Eigen::Index>(rng.below(7));  // 6..12
            Eigen::MatrixXd g(m, 2);
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < 2; ++j) g(i, j) = rng.normal();
            GaussianBelief prior;
            prior.covariance = g * g.transpose();
            prior.covariance.diagonal().array() += sigma * sigma;
            prior.mean.resize(m);
            Eigen::VectorXd truth(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                prior.mean(i) = rng.normal();
                truth(i) = rng.normal();
            }
            const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
            const TableOracle oracle(truth);
            const EpisodeTrace trace =
                run_box(0, oracle, prior, k, bound_zeta(0.05), 7000 + trial);

            std::vector<int> chosen;
            for (const auto& s : trace.steps) chosen.push_back(s.index);
            Eigen::MatrixXd sub(chosen.size(), chosen.size());
            for (std::size_t a = 0; a < chosen.size(); ++a)
                for (std::size_t b = 0; b < chosen.size(); ++b)
                    sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                        prior.covariance(chosen[a], chosen[b]);
            const double direct =
                0.5 * (oracle::eig_log_det(sub) -
                       2.0 * static_cast<double>(chosen.size()) * std::log(sigma));
            const double sequential = mutual_info_sequential(trace.pivots(), sigma);
            max_error = std::max(max_error, std::abs(sequential - direct));

            trace_pivots.push_back(trace.pivots());
            trace_mi_direct.push_back(direct);
            for (double pivot : trace.pivots())
                min_pivot_margin = std::min(min_pivot_margin, pivot - sigma * sigma);
        }
        std::printf("  max abs error %.3e over 200 traces\n", max_error);
        return max_error < 1e-8;
    });

    criterion(3, "conditioning pivots stay above the noise floor", [] {
        std::printf("  min pivot margin above sigma^2: %.3e\n", min_pivot_margin);
        return !trace_pivots.empty() && min_pivot_margin >= -1e-9;
    });

    criterion(4, "regret bound coverage holds under resampled scores", [] {
        Rng rng(404);
        const double sigma = 0.3;
        const Eigen::Index m = 12;
        Eigen::MatrixXd g(m, 2);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < 2; ++j) g(i, j) = rng.normal();
        GaussianBelief prior;
        prior.covariance = g * g.transpose();
        prior.covariance.diagonal().array() += sigma * sigma;
        prior.mean.setZero(m);

        const double limit = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 2000.0);
        bool ok = true;
        for (int k : {3, 6, 9}) {
            RegretParams params;
            params.delta = 0.05;
            params.sigma = sigma;
            params.c_bound = 1.01 * prior.covariance.diagonal().maxCoeff();
            params.k = k;
            const ValidationReport report = monte_carlo_validate(prior, params, 2000, 4040 + k);
            std::printf("  k=%d violation_rate=%.4f bound=%.3f mean_regret=%.3f\n", k,
                        report.violation_rate, report.mean_bound, report.mean_regret);
            ok = ok && report.violation_rate <= limit;
        }
        return ok;
    });

    criterion(5, "diagonal covariance collapses the bound analytically", [] {
        const double sigma = 0.5, c = 1.0;
        const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(8, 8) * c;
        RegretParams params;
        params.delta = 0.05;
        params.sigma = sigma;
        params.c_bound = c;
        params.k = 7;
        const double bound = regret_bound(params, rho_k(cov, sigma, 7, RhoMode::exact));
        const double closed_form = 2.0 * std::sqrt(2.0 * std::log(1.0 / 0.05) * c);
        std::printf("  bound %.12f vs closed form %.12f\n", bound, closed_form);
        return std::abs(bound - closed_form) < 1e-9;
    });

    criterion(6, "worked scenario checks and negative control", [] {
        const GoldenReport report = cmd_golden();
        return report.pass();
    });

    criterion(7, "greedy minimal sets track the exhaustive reference", [] {
        Rng rng(707);
        int built = 0;
        bool ok = true;
        double max_gain_error = 0.0;
        while (built < 50) {
            const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.below(7));   // 4..10
            const Eigen::Index m = 3 + static_cast<Eigen::Index>(rng.below(10));  // 3..12
            Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> pattern(n, m);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < m; ++j) pattern(i, j) = rng.uniform01() < 0.35;
            if (!pattern.any()) continue;
            ++built;

            const ExperienceBundle bundle = bundle_from_pattern(pattern, 7070 + built);
            const GaussianBelief prior = estimate_prior(bundle.scores);
            const MinimalSet greedy = construct_oms(bundle, prior, {});
            const MinimalSet exact = brute_force_oms(bundle, {});

            ok = ok && static_cast<int>(greedy.covered.size()) == greedy.n_coverable;
            // The greedy seed (best mean) may be one wasted pick.
            ok = ok && static_cast<int>(greedy.indices.size()) <=
                           static_cast<int>(exact.indices.size()) + 1;

            // Gain values against the joint-entropy oracle.
            for (int theta : greedy.indices) {
                std::vector<int> rest;
                for (int j : greedy.indices)
                    if (j != theta) rest.push_back(j);
                Eigen::MatrixXd before(rest.size(), rest.size());
                Eigen::VectorXd cross(rest.size());
                for (std::size_t a = 0; a < rest.size(); ++a) {
                    cross(static_cast<Eigen::Index>(a)) = prior.covariance(rest[a], theta);
                    for (std::size_t b = 0; b < rest.size(); ++b)
                        before(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                            prior.covariance(rest[a], rest[b]);
                }
                const double pivot = prior.covariance(theta, theta);
                const Eigen::MatrixXd after = before - cross * cross.transpose() / pivot;
                const double expected = oracle::eig_log_det(before) - oracle::eig_log_det(after);
                max_gain_error =
                    std::max(max_gain_error,
                             std::abs(gain(prior.covariance, greedy.indices, theta, prior.jitter)
                                          .value -
                                      expected));
            }
        }
        std::printf("  max gain error %.3e over 50 bundles\n", max_gain_error);
        return ok && max_gain_error < 1e-8;
    });

    // Criteria 8, 10 and 11 share the correlated ordering benchmark.
    static ExperienceBundle ordering_bundle;
    criterion(8, "box <= static <= rand on the correlated grid benchmark", [] {
        BenchConfig config = ordering_benchmark_config();
        std::filesystem::remove_all(config.out_dir);
        auto domain = make_domain(config.domain);
        ordering_bundle = obtain_bundle(config, *domain);
        std::printf("  bundle n=%d m=%d\n", static_cast<int>(ordering_bundle.n_instances()),
                    static_cast<int>(ordering_bundle.n_constraints()));
        if (ordering_bundle.n_constraints() != 8) return false;

        const LoocvResult result = cmd_loocv(config, ordering_bundle, *domain);
        const PolicyStats* box = nullptr;
        const PolicyStats* fixed = nullptr;
        const PolicyStats* uniform = nullptr;
        for (const auto& stats : result.policies) {
            if (stats.policy == "box") box = &stats;
            if (stats.policy == "static") fixed = &stats;
            if (stats.policy == "rand") uniform = &stats;
        }
        if (!box || !fixed || !uniform) return false;
        std::printf("  evals-to-ff: box %.3f+-%.3f static %.3f+-%.3f rand %.3f+-%.3f\n",
                    box->mean_evals_to_ff, box->ci95_evals, fixed->mean_evals_to_ff,
                    fixed->ci95_evals, uniform->mean_evals_to_ff, uniform->ci95_evals);

        bool ok = box->mean_evals_to_ff <= fixed->mean_evals_to_ff &&
                  fixed->mean_evals_to_ff <= uniform->mean_evals_to_ff;
        // Significance at the 95% level: the paired per-fold gap's
        // confidence interval must exclude zero.
        const PairedGap box_vs_static = paired_eval_gap(*box, *fixed);
        const PairedGap static_vs_rand = paired_eval_gap(*fixed, *uniform);
        std::printf("  paired gaps: static-box %.3f+-%.3f rand-static %.3f+-%.3f\n",
                    box_vs_static.mean, box_vs_static.ci95, static_vs_rand.mean,
                    static_vs_rand.ci95);
        ok = ok && box_vs_static.significant();
        ok = ok && static_vs_rand.significant();
        for (int b = 0; b < result.k / 2; ++b) {
            ok = ok && box->mean_score_by_budget[static_cast<std::size_t>(b)] >=
                           uniform->mean_score_by_budget[static_cast<std::size_t>(b)];
        }
        return ok;
    });

    criterion(9, "restricted constraint set keeps box cheap and effective", [] {
        BenchConfig config = minset_benchmark_config();
        std::filesystem::remove_all(config.out_dir);
        auto domain = make_domain(config.domain);
        const ExperienceBundle bundle = obtain_bundle(config, *domain);
        std::printf("  bundle n=%d m=%d\n", static_cast<int>(bundle.n_instances()),
                    static_cast<int>(bundle.n_constraints()));
        if (bundle.n_constraints() != 64) return false;
        if (!sentinel_relation_holds(bundle)) return false;

        const MinsetReport report = cmd_minset(config, bundle, *domain);
        const double size = static_cast<double>(report.set.indices.size());
        const double ratio = size / 64.0;
        std::printf("  |L|=%d update_cost_ratio=%.5f (budget %.5f) success %.3f vs %.3f\n",
                    static_cast<int>(size), report.update_cost_ratio, ratio * ratio,
                    report.ff_success_minset, report.ff_success_full);
        bool ok = size <= 16.0;
        ok = ok && report.update_cost_ratio <= ratio * ratio + 1e-12;
        ok = ok && report.ff_success_minset >= 0.95 * report.ff_success_full;
        return ok;
    });

    criterion(10, "sentinel separates feasible from infeasible on generated bundles", [] {
        if (ordering_bundle.n_instances() == 0) return false;
        bool ok = sentinel_relation_holds(ordering_bundle);

        NavParams nav_params;
        NavDomain nav(nav_params);
        GenerateParams gen;
        gen.n_instances = 12;
        gen.solutions_per_instance = 3;
        gen.seed = 10101;
        const ExperienceBundle nav_bundle = generate_training_data(nav, gen);
        std::printf("  nav bundle n=%d m=%d\n", static_cast<int>(nav_bundle.n_instances()),
                    static_cast<int>(nav_bundle.n_constraints()));
        ok = ok && sentinel_relation_holds(nav_bundle);
        return ok;
    });

    criterion(11, "identical config and seed reproduce byte-identical outputs", [] {
        nlohmann::json j;
        j["domain"] = {{"domain", "grid"}, {"width", 14},      {"height", 14},
                       {"density", 0.35},  {"n_directions", 8}, {"clustered", true}};
        j["n"] = 12;
        j["seed"] = 313;
        j["solutions_per_instance"] = 3;
        BenchConfig config = BenchConfig::from_json(j);
        config.out_dir = std::filesystem::temp_directory_path() / "scorespace_acc_det_a";
        std::filesystem::remove_all(config.out_dir);
        {
            auto domain = make_domain(config.domain);
            const ExperienceBundle bundle = obtain_bundle(config, *domain);
            cmd_loocv(config, bundle, *domain);
        }
        BenchConfig rerun = config;
        rerun.out_dir = std::filesystem::temp_directory_path() / "scorespace_acc_det_b";
        std::filesystem::remove_all(rerun.out_dir);
        {
            auto domain = make_domain(rerun.domain);
            const ExperienceBundle bundle = obtain_bundle(rerun, *domain);
            cmd_loocv(rerun, bundle, *domain);
        }
        const bool ok =
            !slurp(config.out_dir / "curves.csv").empty() &&
            slurp(config.out_dir / "curves.csv") == slurp(rerun.out_dir / "curves.csv") &&
            slurp(config.out_dir / "firstfeasible.csv") ==
                slurp(rerun.out_dir / "firstfeasible.csv") &&
            slurp(config.out_dir / "summary.json") == slurp(rerun.out_dir / "summary.json");
        std::filesystem::remove_all(config.out_dir);
        std::filesystem::remove_all(rerun.out_dir);
        return ok;
    });

    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
