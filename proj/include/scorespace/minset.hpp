#pragma once

#include <Eigen/Dense>
#include <vector>

#include <json.hpp>

#include "scorespace/belief.hpp"
#include "scorespace/experience.hpp"

namespace scorespace {

/// A small ordered subset L of the constraints that covers every coverable
/// training instance, with its success-probability and information-gain
/// bookkeeping.
struct MinimalSet {
    std::vector<int> indices;      // selection order
    std::vector<int> covered;      // covered instance indices, ascending
    std::vector<int> uncoverable;  // instances no constraint covers, ascending
    int n_coverable = 0;
    double success_prob = 0.0;
    double total_gain = 0.0;
};

struct OmsParams {
    double lambda_tradeoff = 0.1;  // weight of total gain in the subset objective
};

/// P(at least one constraint in L is feasible) = 1 - prod(1 - p_theta).
double success_prob(const Eigen::VectorXd& p, const std::vector<int>& members);

/// Differential entropy of a Gaussian with the given covariance:
/// (m/2)(1 + log 2pi) + (1/2) log det.
double gaussian_entropy(const Eigen::MatrixXd& covariance);

struct GainResult {
    double value = 0.0;
    bool degenerate = false;  // pivot collapsed below jitter; value forced to 0
};

/// Information gain of evaluating member `theta` of L about the rest of the
/// set: log det of the covariance over L \ {theta} minus the log det after
/// conditioning on theta. Zero when theta is uncorrelated with the rest.
GainResult gain(const Eigen::MatrixXd& covariance, const std::vector<int>& members, int theta,
                double jitter = 0.0);

/// Greedy construction: seed with the highest-mean constraint, then keep
/// adding the candidate that covers the most uncovered instances, breaking
/// ties first by mean score and then by gain. Instances no constraint covers
/// are reported separately and excluded from the coverage target.
MinimalSet construct_oms(const ExperienceBundle& bundle, const GaussianBelief& prior,
                         const OmsParams& params);

/// Exhaustive reference: enumerates every subset (m <= max_m), keeps the
/// covering subsets of minimum cardinality, and among those maximizes
/// sum p_theta + lambda * total gain.
MinimalSet brute_force_oms(const ExperienceBundle& bundle, const OmsParams& params,
                           int max_m = 15);

nlohmann::json to_json(const MinimalSet& set, const ExperienceBundle& bundle);

}  // namespace scorespace
