#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "scorespace/belief.hpp"
#include "scorespace/common.hpp"
#include "scorespace/constraint_set.hpp"

namespace scorespace {

/// Outcome of one planner call. For infeasible results the harness that owns
/// the experience data rewrites `score` to the domain sentinel; the planner
/// itself only reports feasibility and the path it found.
struct PlanResult {
    double score = 0.0;
    bool feasible = false;
    std::vector<Eigen::Vector2d> plan;  // waypoints, empty when infeasible
    double cost_units = 0.0;            // simulated planning effort
    Eigen::VectorXd constraint;         // constraint the plan was computed under
};

/// Evaluation interface the selection policies run against. Implementations
/// must be deterministic for a fixed (instance, constraint, seed) triple and
/// safe to share read-only across concurrent episodes.
class PlannerOracle {
public:
    virtual ~PlannerOracle() = default;
    virtual int constraint_count() const = 0;
    virtual PlanResult evaluate(int instance, int constraint_index) const = 0;
    /// Raw-planner baseline: one attempt sampled from the original
    /// constraint space. Not every oracle supports it.
    virtual PlanResult unconstrained_solve(int instance, std::uint64_t seed) const;
};

/// Oracle over a fixed score table: evaluate(i, j) returns scores[j].
/// Used by the regret validator and the worked selection example, where the
/// "planner" is a lookup.
class TableOracle : public PlannerOracle {
public:
    TableOracle(Eigen::VectorXd scores, double feasible_above = -std::numeric_limits<double>::infinity());
    int constraint_count() const override { return static_cast<int>(scores_.size()); }
    PlanResult evaluate(int instance, int constraint_index) const override;

private:
    Eigen::VectorXd scores_;
    double feasible_above_;
};

struct EpisodeStep {
    int t = 0;           // 1-based
    int index = -1;      // constraint index; -1 for raw-planner attempts
    double score = 0.0;
    double ucb = 0.0;    // selection criterion value at the moment of choice
    double pivot = 0.0;  // belief variance of the chosen index (box policy)
    bool feasible = false;
    double cost = 0.0;
    double cum_cost = 0.0;
};

/// Ordered record of one episode: which constraints were tried, what they
/// scored, and what it cost to find out.
struct EpisodeTrace {
    std::vector<EpisodeStep> steps;
    int best_step = 0;  // t attaining best_score, 0 when the trace is empty
    double best_score = -std::numeric_limits<double>::infinity();
    double cumulative_cost = 0.0;
    double update_cost = 0.0;  // belief-update cost model units (m^2 per conditioning)
    int first_feasible_step = 0;  // 0 when no feasible plan was found
    double first_feasible_cost = std::numeric_limits<double>::quiet_NaN();

    bool solved() const { return first_feasible_step > 0; }
    std::vector<double> pivots() const;

    /// Max observed score among the first `budget` steps (-inf if none).
    double best_score_within(int budget) const;
};

struct DooParams {
    double lipschitz = 1.0;
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> semimetric;  // default Euclidean

    double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        return semimetric ? semimetric(a, b) : (a - b).norm();
    }
};

// Selection policies. Each returns a trace with at most k steps and never
// re-evaluates a constraint. All randomness comes from the seed argument.

/// UCB selection with sequential Gaussian conditioning on observed scores.
/// Ties in the UCB argmax are broken uniformly at random.
EpisodeTrace run_box(int instance, const PlannerOracle& oracle, const GaussianBelief& prior,
                     int k, double zeta, std::uint64_t seed);

/// Fixed order: descending prior mean, ties by ascending index. No updates.
EpisodeTrace run_static(int instance, const PlannerOracle& oracle, const GaussianBelief& prior,
                        int k);

/// k distinct uniformly sampled constraints.
EpisodeTrace run_rand(int instance, const PlannerOracle& oracle, int m, int k,
                      std::uint64_t seed);

/// Discrete optimistic optimization: optimistic bound
/// b(i) = min over evaluated j of score(j) + lipschitz * semimetric(i, j),
/// +inf before anything is evaluated (so the first pick is seeded-random).
EpisodeTrace run_doo(int instance, const PlannerOracle& oracle, const ConstraintSet& constraints,
                     const DooParams& params, int k, std::uint64_t seed);

/// Unconstrained planner baseline: repeated raw attempts until feasible or
/// the attempt budget runs out.
EpisodeTrace run_raw(int instance, const PlannerOracle& oracle, int budget, std::uint64_t seed);

/// One JSON object per step: {t, constraint_id, score, ucb, cum_cost}.
void write_jsonl(const EpisodeTrace& trace, const std::vector<std::string>& constraint_ids,
                 std::ostream& out);

}  // namespace scorespace
