#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scorespace/constraint_set.hpp"
#include "scorespace/policies.hpp"
#include "scorespace/score_matrix.hpp"

namespace scorespace {

/// A planning domain: a distribution over problem instances plus a planner
/// that can solve an instance either under an explicit constraint or in raw
/// mode (sampling the constraint itself). Instances are owned by the domain
/// and addressed by index, so everything downstream stays copy-free.
class Domain {
public:
    virtual ~Domain() = default;
    virtual std::string name() const = 0;
    virtual int constraint_dim() const = 0;
    virtual int instance_count() const = 0;
    /// Samples one instance from the domain distribution; returns its index.
    virtual int sample_instance(std::uint64_t seed) = 0;
    virtual PlanResult plan(int instance, const Eigen::VectorXd& constraint) const = 0;
    /// One raw attempt: sample a constraint from the original space, plan under it.
    virtual PlanResult raw_solve(int instance, std::uint64_t seed) const = 0;
    virtual std::string constraint_id(const Eigen::VectorXd& constraint) const = 0;
};

/// Score matrix plus the constraint set it was computed over, the
/// infeasibility sentinel, and the feasibility mask.
struct ExperienceBundle {
    ScoreMatrix scores;
    ConstraintSet constraints;
    double sentinel = 0.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> feasibility;
    std::string domain_name;
    std::uint64_t seed = 0;

    Eigen::Index n_instances() const { return scores.values.rows(); }
    Eigen::Index n_constraints() const { return scores.values.cols(); }

    /// Checks shape consistency, the feasible <=> score > sentinel relation,
    /// and that the stored sentinel matches a recomputation within 1e-12.
    void validate() const;
};

/// Infeasibility sentinel, computed over the feasible entries only:
/// d = min - (mean - min), i.e. the minimum pushed down by the mean-to-min
/// spread, so d sits strictly below every feasible score for any score sign
/// convention. Returns 0 when nothing is feasible (all cells get the
/// sentinel and the relation holds vacuously).
double infeasibility_sentinel(const Eigen::MatrixXd& scores,
                              const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& feasibility);

/// Plan score: negative total waypoint path length when feasible, the
/// sentinel otherwise. A single waypoint has an empty sum, score 0.
double score_plan(const std::vector<Eigen::Vector2d>& waypoints, bool feasible, double sentinel);

struct GenerateParams {
    int n_instances = 0;
    int solutions_per_instance = 1;
    int raw_budget = 32;  // raw attempts per requested solution
    std::uint64_t seed = 0;
};

/// Builds an experience bundle: samples instances, extracts constraints from
/// raw solutions (deduplicated on exact parameter equality), scores every
/// (instance, constraint) pair, then applies the sentinel in a second pass.
/// Instances whose raw solve never succeeds contribute no constraint but are
/// still scored; their rows simply hold whatever the evaluations produced.
ExperienceBundle generate_training_data(Domain& domain, const GenerateParams& params);

struct HeldOutInstance {
    int index = 0;
    std::string instance_id;
    Eigen::VectorXd scores;                         // row from the full bundle
    Eigen::Array<bool, Eigen::Dynamic, 1> feasibility;
};

struct LoocvSplit {
    ExperienceBundle train;
    HeldOutInstance test;
};

/// Leave-one-out split: train keeps the other n-1 rows in order with its
/// sentinel recomputed (and infeasible cells rewritten to it).
LoocvSplit loocv_split(const ExperienceBundle& bundle, int held_out);

/// Keeps the given columns (in the given order) and recomputes the sentinel.
ExperienceBundle select_constraints(const ExperienceBundle& bundle, const std::vector<int>& columns);

/// Uniformly subsamples target_m columns (original relative order kept).
ExperienceBundle subsample_constraints(const ExperienceBundle& bundle, int target_m,
                                       std::uint64_t seed);

// Bundle directory layout: scores.csv, constraints.csv, meta.json.
void write_bundle(const ExperienceBundle& bundle, const std::filesystem::path& dir);
ExperienceBundle read_bundle(const std::filesystem::path& dir);

/// Policy-facing oracle over a domain and an extracted constraint set.
/// Infeasible evaluations get their score rewritten to the sentinel, which
/// keeps observed scores on the same scale the prior was estimated from.
class DomainOracle : public PlannerOracle {
public:
    DomainOracle(const Domain& domain, ConstraintSet constraints, double sentinel,
                 int raw_budget = 1);
    int constraint_count() const override { return static_cast<int>(constraints_.size()); }
    PlanResult evaluate(int instance, int constraint_index) const override;
    PlanResult unconstrained_solve(int instance, std::uint64_t seed) const override;

private:
    const Domain& domain_;
    ConstraintSet constraints_;
    double sentinel_;
    int raw_budget_;
};

}  // namespace scorespace
