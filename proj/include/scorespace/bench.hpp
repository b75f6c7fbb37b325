#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorespace/domains.hpp"
#include "scorespace/experience.hpp"
#include "scorespace/minset.hpp"
#include "scorespace/regret.hpp"

namespace scorespace {

struct PolicyConfig {
    std::string name;          // box | static | rand | doo | raw
    double zeta = 1.96;        // box exploration constant
    double doo_lambda = 1.0;   // doo Lipschitz constant
};

struct BenchConfig {
    nlohmann::json domain;     // domain block, see make_domain
    std::vector<PolicyConfig> policies = {{"box"}, {"static"}, {"rand"}, {"doo"}, {"raw"}};
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::filesystem::path bundle_dir;  // optional: load this bundle instead of generating
    int n_instances = 50;
    int k = 0;                 // evaluation budget; 0 means all constraints
    int solutions_per_instance = 1;
    int raw_extract_budget = 32;  // raw attempts per requested solution during generation
    int subsample_m = 0;       // 0 = keep every extracted constraint
    int folds = 0;             // 0 = every instance held out once
    int trials = 2000;         // regret validation trials
    double delta = 0.05;
    double oms_lambda = 0.1;

    static BenchConfig from_json(const nlohmann::json& j);
};

/// Builds a domain from the config block
/// {domain = "grid"|"nav", width, height, density, n_directions, clustered, reach, ...}.
std::unique_ptr<Domain> make_domain(const nlohmann::json& block);

/// Regenerates the n instances a bundle was built from (same derived seeds).
void populate_instances(Domain& domain, int n, std::uint64_t seed);

/// Generates (or loads) the config's bundle, leaving the domain populated
/// with the matching instances.
ExperienceBundle obtain_bundle(const BenchConfig& config, Domain& domain);

struct PolicyStats {
    std::string policy;
    double mean_evals_to_ff = 0.0;  // over folds the policy solved
    double ci95_evals = 0.0;
    double mean_cost_to_ff = 0.0;
    double ci95_cost = 0.0;
    double success_rate = 0.0;      // solved folds / folds
    double total_update_cost = 0.0;
    std::vector<double> mean_score_by_budget;  // index 0 = budget 1
    std::vector<double> ci95_by_budget;
    std::vector<double> evals_by_fold;  // NaN where the fold went unsolved
};

/// Paired per-fold gap `slow - fast` with its 95% confidence interval,
/// over the folds both policies solved.
struct PairedGap {
    double mean = 0.0;
    double ci95 = 0.0;
    int folds = 0;
    bool significant() const { return folds > 1 && mean > ci95; }
};

PairedGap paired_eval_gap(const PolicyStats& fast, const PolicyStats& slow);

struct LoocvResult {
    std::vector<PolicyStats> policies;
    double mean_optimal_score = 0.0;  // per-instance best constraint, averaged
    int folds = 0;
    int k = 0;
};

/// Writes the bundle directory and prints n, m, sentinel, mean |correlation|.
ExperienceBundle cmd_gen(const BenchConfig& config);

/// Leave-one-out comparison of the configured policies. Writes curves.csv
/// (policy,budget,mean_score,ci95), firstfeasible.csv
/// (policy,mean_cost,ci95,success_rate) and summary.json under out_dir.
LoocvResult cmd_loocv(const BenchConfig& config, const ExperienceBundle& bundle, Domain& domain,
                      const std::string& file_tag = "");

struct MinsetReport {
    MinimalSet set;
    int m = 0;
    double update_cost_ratio = 0.0;   // restricted / full belief-update cost
    double ff_success_full = 0.0;     // box success rate on the full set
    double ff_success_minset = 0.0;   // box success rate restricted to the set
    double mean_evals_full = 0.0;
    double mean_evals_minset = 0.0;
};

/// Builds the minimal set, reruns the comparison with the box policy
/// restricted to it, and reports size, coverage and cost ratios.
MinsetReport cmd_minset(const BenchConfig& config, const ExperienceBundle& bundle, Domain& domain);

ValidationReport cmd_regret(const BenchConfig& config, const ExperienceBundle& bundle);

struct GoldenReport {
    bool initial_three_way_tie = false;
    bool uncorrelated_unchanged = false;
    bool negative_correlate_rises = false;
    bool positive_correlate_falls = false;
    bool feasible_within_two = false;
    bool control_detects_flip = false;  // flipped-correlation matrix must fail rise/fall

    bool pass() const {
        return initial_three_way_tie && uncorrelated_unchanged && negative_correlate_rises &&
               positive_correlate_falls && feasible_within_two && control_detects_flip;
    }
};

/// Worked four-direction scenario: a fixed 4x4 binary score matrix with a
/// known correlation structure, checked end to end for the qualitative UCB
/// behaviors the selection policy relies on.
GoldenReport cmd_golden();

/// The scenario's score matrix (4 instances x constraints up/left/down/right).
ScoreMatrix golden_score_matrix();

}  // namespace scorespace
