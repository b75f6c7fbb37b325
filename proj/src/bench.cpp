#include "scorespace/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace scorespace {

namespace {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// ci95 = 1.96 * sd / sqrt(n), sd with divisor n-1.
double ci95_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
}

EpisodeTrace run_policy(const PolicyConfig& policy, int instance, const PlannerOracle& oracle,
                        const GaussianBelief& prior, const ConstraintSet& constraints, int k,
                        std::uint64_t seed) {
    if (policy.name == "box") return run_box(instance, oracle, prior, k, policy.zeta, seed);
    if (policy.name == "static") return run_static(instance, oracle, prior, k);
    if (policy.name == "rand")
        return run_rand(instance, oracle, oracle.constraint_count(), k, seed);
    if (policy.name == "doo") {
        DooParams params;
        params.lipschitz = policy.doo_lambda;
        return run_doo(instance, oracle, constraints, params, k, seed);
    }
    if (policy.name == "raw") return run_raw(instance, oracle, k, seed);
    throw std::invalid_argument("unknown policy: " + policy.name);
}

}  // namespace

PairedGap paired_eval_gap(const PolicyStats& fast, const PolicyStats& slow) {
    std::vector<double> diffs;
    const std::size_t folds = std::min(fast.evals_by_fold.size(), slow.evals_by_fold.size());
    for (std::size_t i = 0; i < folds; ++i) {
        const double a = fast.evals_by_fold[i];
        const double b = slow.evals_by_fold[i];
        if (std::isnan(a) || std::isnan(b)) continue;
        diffs.push_back(b - a);
    }
    PairedGap gap;
    gap.folds = static_cast<int>(diffs.size());
    gap.mean = mean_of(diffs);
    gap.ci95 = ci95_of(diffs);
    return gap;
}

BenchConfig BenchConfig::from_json(const nlohmann::json& j) {
    BenchConfig config;
    if (j.contains("domain")) config.domain = j.at("domain");
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    else if (config.domain.contains("seed")) config.seed = config.domain.at("seed").get<std::uint64_t>();
    if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
    if (j.contains("bundle")) config.bundle_dir = j.at("bundle").get<std::string>();
    if (j.contains("n")) config.n_instances = j.at("n").get<int>();
    if (j.contains("k")) config.k = j.at("k").get<int>();
    if (j.contains("solutions_per_instance"))
        config.solutions_per_instance = j.at("solutions_per_instance").get<int>();
    if (j.contains("raw_extract_budget"))
        config.raw_extract_budget = j.at("raw_extract_budget").get<int>();
    if (j.contains("subsample_m")) config.subsample_m = j.at("subsample_m").get<int>();
    if (j.contains("folds")) config.folds = j.at("folds").get<int>();
    if (j.contains("trials")) config.trials = j.at("trials").get<int>();
    if (j.contains("delta")) config.delta = j.at("delta").get<double>();
    if (j.contains("oms_lambda")) config.oms_lambda = j.at("oms_lambda").get<double>();

    if (j.contains("policies")) {
        config.policies.clear();
        for (const auto& p : j.at("policies")) {
            PolicyConfig policy;
            if (p.is_string()) {
                policy.name = p.get<std::string>();
            } else {
                policy.name = p.at("name").get<std::string>();
                if (p.contains("zeta")) policy.zeta = p.at("zeta").get<double>();
                if (p.contains("lambda")) policy.doo_lambda = p.at("lambda").get<double>();
            }
            config.policies.push_back(std::move(policy));
        }
    }
    if (j.contains("zeta"))
        for (auto& p : config.policies) p.zeta = j.at("zeta").get<double>();
    return config;
}

std::unique_ptr<Domain> make_domain(const nlohmann::json& block) {
    const std::string kind = block.value("domain", "grid");
    if (kind == "grid") {
        GridParams params;
        params.width = block.value("width", params.width);
        params.height = block.value("height", params.height);
        params.density = block.value("density", params.density);
        params.n_directions = block.value("n_directions", params.n_directions);
        params.clustered = block.value("clustered", params.clustered);
        params.cluster_min = block.value("cluster_min", params.cluster_min);
        params.cluster_max = block.value("cluster_max", params.cluster_max);
        params.margin = block.value("margin", params.margin);
        params.cubby = block.value("cubby", params.cubby);
        params.open_width = block.value("open_width", params.open_width);
        params.wall_prob = block.value("wall_prob", params.wall_prob);
        params.direction_skew = block.value("direction_skew", params.direction_skew);
        params.flip_prob = block.value("flip_prob", params.flip_prob);
        return std::make_unique<GridDomain>(params);
    }
    if (kind == "nav") {
        NavParams params;
        params.n_obstacles = block.value("n_obstacles", params.n_obstacles);
        params.obstacle_min = block.value("obstacle_min", params.obstacle_min);
        params.obstacle_max = block.value("obstacle_max", params.obstacle_max);
        params.reach = block.value("reach", params.reach);
        params.angle_tol = block.value("angle_tol", params.angle_tol);
        return std::make_unique<NavDomain>(params);
    }
    throw std::invalid_argument("unknown domain kind: " + kind);
}

void populate_instances(Domain& domain, int n, std::uint64_t seed) {
    for (int i = 0; i < n; ++i)
        domain.sample_instance(derive_seed(seed, static_cast<std::uint64_t>(i)));
}

ExperienceBundle obtain_bundle(const BenchConfig& config, Domain& domain) {
    if (!config.bundle_dir.empty()) {
        ExperienceBundle bundle = read_bundle(config.bundle_dir);
        populate_instances(domain, static_cast<int>(bundle.n_instances()), bundle.seed);
        return bundle;
    }
    GenerateParams params;
    params.n_instances = config.n_instances;
    params.solutions_per_instance = config.solutions_per_instance;
    params.raw_budget = config.raw_extract_budget;
    params.seed = config.seed;
    ExperienceBundle bundle = generate_training_data(domain, params);
    if (config.subsample_m > 0 && config.subsample_m < bundle.n_constraints())
        bundle = subsample_constraints(bundle, config.subsample_m, derive_seed(config.seed, 0xabcd));
    return bundle;
}

ExperienceBundle cmd_gen(const BenchConfig& config) {
    auto domain = make_domain(config.domain);
    ExperienceBundle bundle = obtain_bundle(config, *domain);
    write_bundle(bundle, config.out_dir / "bundle");
    const CorrelationAudit audit = correlation_audit(bundle);
    std::cout << "gen: n=" << bundle.n_instances() << " m=" << bundle.n_constraints()
              << " sentinel=" << format_double(bundle.sentinel)
              << " mean_abs_corr=" << format_double(audit.mean_abs_offdiag) << '\n';
    return bundle;
}

LoocvResult cmd_loocv(const BenchConfig& config, const ExperienceBundle& bundle, Domain& domain,
                      const std::string& file_tag) {
    const int n = static_cast<int>(bundle.n_instances());
    const int m = static_cast<int>(bundle.n_constraints());
    if (n < 3) throw std::invalid_argument("loocv needs at least 3 instances");
    if (domain.instance_count() < n)
        throw std::invalid_argument("domain is missing the bundle's instances");

    const int folds = config.folds > 0 ? std::min(config.folds, n) : n;
    const int k = config.k > 0 ? std::min(config.k, m) : m;

    LoocvResult result;
    result.folds = folds;
    result.k = k;

    struct FoldRecord {
        std::vector<double> evals, costs, best_by_budget, evals_by_fold;
        std::vector<bool> solved;
        double update_cost = 0.0;
    };
    std::vector<FoldRecord> records(config.policies.size());
    std::vector<double> optimal_scores;

    for (int fold = 0; fold < folds; ++fold) {
        const LoocvSplit split = loocv_split(bundle, fold);
        const GaussianBelief prior = estimate_prior(split.train.scores);
        const DomainOracle oracle(domain, bundle.constraints, split.train.sentinel);

        double optimal = split.train.sentinel;
        for (Eigen::Index j = 0; j < split.test.scores.size(); ++j)
            if (split.test.feasibility(j)) optimal = std::max(optimal, split.test.scores(j));
        optimal_scores.push_back(optimal);

        for (std::size_t p = 0; p < config.policies.size(); ++p) {
            const std::uint64_t seed =
                derive_seed(config.seed, 0x1000ull * (p + 1) + static_cast<std::uint64_t>(fold));
            const EpisodeTrace trace = run_policy(config.policies[p], fold, oracle, prior,
                                                  bundle.constraints, k, seed);
            auto& rec = records[p];
            rec.solved.push_back(trace.solved());
            if (trace.solved()) {
                rec.evals.push_back(static_cast<double>(trace.first_feasible_step));
                rec.costs.push_back(trace.first_feasible_cost);
                rec.evals_by_fold.push_back(static_cast<double>(trace.first_feasible_step));
            } else {
                rec.evals_by_fold.push_back(std::numeric_limits<double>::quiet_NaN());
            }
            for (int b = 1; b <= k; ++b) {
                const double best = trace.best_score_within(b);
                rec.best_by_budget.push_back(std::isfinite(best) ? best : split.train.sentinel);
            }
            rec.update_cost += trace.update_cost;
        }
    }

    result.mean_optimal_score = mean_of(optimal_scores);
    for (std::size_t p = 0; p < config.policies.size(); ++p) {
        const auto& rec = records[p];
        PolicyStats stats;
        stats.policy = config.policies[p].name;
        stats.mean_evals_to_ff = mean_of(rec.evals);
        stats.ci95_evals = ci95_of(rec.evals);
        stats.mean_cost_to_ff = mean_of(rec.costs);
        stats.ci95_cost = ci95_of(rec.costs);
        long solved = std::count(rec.solved.begin(), rec.solved.end(), true);
        stats.success_rate = static_cast<double>(solved) / static_cast<double>(folds);
        stats.total_update_cost = rec.update_cost;
        stats.evals_by_fold = rec.evals_by_fold;
        for (int b = 0; b < k; ++b) {
            std::vector<double> column;
            for (int fold = 0; fold < folds; ++fold)
                column.push_back(rec.best_by_budget[static_cast<std::size_t>(fold) * k + b]);
            stats.mean_score_by_budget.push_back(mean_of(column));
            stats.ci95_by_budget.push_back(ci95_of(column));
        }
        result.policies.push_back(std::move(stats));
    }

    std::filesystem::create_directories(config.out_dir);
    const std::string suffix = file_tag.empty() ? "" : "_" + file_tag;
    {
        std::ofstream out(config.out_dir / ("curves" + suffix + ".csv"));
        out << "policy,budget,mean_score,ci95\n";
        for (const auto& stats : result.policies)
            for (int b = 0; b < k; ++b)
                out << stats.policy << ',' << (b + 1) << ','
                    << format_double(stats.mean_score_by_budget[static_cast<std::size_t>(b)]) << ','
                    << format_double(stats.ci95_by_budget[static_cast<std::size_t>(b)]) << '\n';
        for (int b = 0; b < k; ++b)
            out << "optimal," << (b + 1) << ',' << format_double(result.mean_optimal_score)
                << ",0\n";
    }
    {
        std::ofstream out(config.out_dir / ("firstfeasible" + suffix + ".csv"));
        out << "policy,mean_cost,ci95,success_rate\n";
        for (const auto& stats : result.policies)
            out << stats.policy << ',' << format_double(stats.mean_cost_to_ff) << ','
                << format_double(stats.ci95_cost) << ',' << format_double(stats.success_rate)
                << '\n';
    }
    {
        nlohmann::json summary;
        summary["folds"] = folds;
        summary["k"] = k;
        summary["seed"] = config.seed;
        summary["mean_optimal_score"] = result.mean_optimal_score;
        auto policies = nlohmann::json::array();
        for (const auto& stats : result.policies) {
            policies.push_back({{"policy", stats.policy},
                                {"mean_evals_to_ff", stats.mean_evals_to_ff},
                                {"ci95_evals", stats.ci95_evals},
                                {"mean_cost_to_ff", stats.mean_cost_to_ff},
                                {"ci95_cost", stats.ci95_cost},
                                {"success_rate", stats.success_rate},
                                {"update_cost", stats.total_update_cost}});
        }
        summary["policies"] = std::move(policies);
        std::ofstream out(config.out_dir / ("summary" + suffix + ".json"));
        out << summary.dump(2) << '\n';
    }
    return result;
}

MinsetReport cmd_minset(const BenchConfig& config, const ExperienceBundle& bundle, Domain& domain) {
    const GaussianBelief prior = estimate_prior(bundle.scores);
    MinsetReport report;
    report.set = construct_oms(bundle, prior, {config.oms_lambda});
    report.m = static_cast<int>(bundle.n_constraints());

    BenchConfig box_only = config;
    box_only.policies.clear();
    for (const auto& p : config.policies)
        if (p.name == "box") box_only.policies.push_back(p);
    if (box_only.policies.empty()) box_only.policies.push_back({"box"});

    const LoocvResult full = cmd_loocv(box_only, bundle, domain, "allset");

    const ExperienceBundle restricted = select_constraints(bundle, report.set.indices);
    BenchConfig restricted_config = box_only;
    restricted_config.k =
        std::min(full.k, static_cast<int>(restricted.n_constraints()));
    const LoocvResult reduced = cmd_loocv(restricted_config, restricted, domain, "minset");

    report.ff_success_full = full.policies.front().success_rate;
    report.ff_success_minset = reduced.policies.front().success_rate;
    report.mean_evals_full = full.policies.front().mean_evals_to_ff;
    report.mean_evals_minset = reduced.policies.front().mean_evals_to_ff;
    const double full_cost = full.policies.front().total_update_cost;
    report.update_cost_ratio =
        full_cost > 0 ? reduced.policies.front().total_update_cost / full_cost : 0.0;

    nlohmann::json j = to_json(report.set, bundle);
    j["m"] = report.m;
    j["size_ratio"] =
        static_cast<double>(report.set.indices.size()) / static_cast<double>(report.m);
    j["update_cost_ratio"] = report.update_cost_ratio;
    j["ff_success_full"] = report.ff_success_full;
    j["ff_success_minset"] = report.ff_success_minset;
    j["mean_evals_full"] = report.mean_evals_full;
    j["mean_evals_minset"] = report.mean_evals_minset;
    std::filesystem::create_directories(config.out_dir);
    std::ofstream out(config.out_dir / "minset.json");
    out << j.dump(2) << '\n';
    return report;
}

ValidationReport cmd_regret(const BenchConfig& config, const ExperienceBundle& bundle) {
    const GaussianBelief prior = estimate_prior(bundle.scores);
    const int m = static_cast<int>(bundle.n_constraints());
    const int k = config.k > 0 ? std::min(config.k, m) : std::max(1, m / 2);
    RegretParams params = RegretParams::defaults_for(prior, k, config.delta);
    const ValidationReport report =
        monte_carlo_validate(prior, params, config.trials, derive_seed(config.seed, 0x7e7));
    std::filesystem::create_directories(config.out_dir);
    std::ofstream out(config.out_dir / "regret.json");
    out << to_json(report).dump(2) << '\n';
    return report;
}

ScoreMatrix golden_score_matrix() {
    // Four instances by four approach directions (up, left, down, right),
    // binary outcomes. Chosen so that: up and right always coincide
    // (correlation 1), up/right are independent of left, and down
    // anti-correlates with the other three.
    ScoreMatrix scores;
    scores.values.resize(4, 4);
    scores.values << 1, 1, 0, 1,
                     1, 0, 0, 1,
                     0, 1, 0, 0,
                     0, 0, 1, 0;
    scores.constraint_ids = {"up", "left", "down", "right"};
    scores.instance_ids = {"w0", "w1", "w2", "w3"};
    return scores;
}

GoldenReport cmd_golden() {
    GoldenReport report;
    const ScoreMatrix scores = golden_score_matrix();
    const GaussianBelief prior = estimate_prior(scores);
    const double zeta = 1.96;

    const auto ucb_values = [&](const GaussianBelief& belief) {
        Eigen::Vector4d values = Eigen::Vector4d::Constant(
            -std::numeric_limits<double>::infinity());
        for (const auto& entry : ucb(belief, zeta)) values(entry.index) = entry.value;
        return values;
    };

    const Eigen::Vector4d before = ucb_values(prior);
    report.initial_three_way_tie =
        before(0) == before(1) && before(1) == before(3) && before(0) > before(2);

    // Observe that "up" fails.
    const GaussianBelief after = condition(prior, 0, 0.0);
    const Eigen::Vector4d now = ucb_values(after);
    report.uncorrelated_unchanged =
        now(1) == before(1) && after.mean(1) == prior.mean(1) &&
        after.covariance(1, 1) == prior.covariance(1, 1);
    report.negative_correlate_rises = now(2) > before(2);
    report.positive_correlate_falls = now(3) < before(3);

    // The second scenario: only "left" works. The policy must reach it in
    // at most two evaluations no matter how the initial tie breaks.
    const Eigen::VectorXd truth = (Eigen::Vector4d() << 0, 1, 0, 0).finished();
    const TableOracle oracle(truth, 0.0);
    bool within_two = true;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const EpisodeTrace trace = run_box(0, oracle, prior, 2, zeta, seed);
        within_two = within_two && trace.solved() && trace.first_feasible_step <= 2;
    }
    report.feasible_within_two = within_two;

    // Negative control: swap the "down" and "right" columns so the observed
    // failure of "up" now points the wrong way; the rise/fall checks must
    // detect the flip.
    ScoreMatrix flipped = scores;
    flipped.values.col(2).swap(flipped.values.col(3));
    const GaussianBelief flipped_prior = estimate_prior(flipped);
    const auto flipped_before = ucb_values(flipped_prior);
    const auto flipped_after = ucb_values(condition(flipped_prior, 0, 0.0));
    const bool flipped_rises = flipped_after(2) > flipped_before(2);
    const bool flipped_falls = flipped_after(3) < flipped_before(3);
    report.control_detects_flip = !flipped_rises && !flipped_falls;
    return report;
}

}  // namespace scorespace
