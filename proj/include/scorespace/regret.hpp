#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorespace/belief.hpp"
#include "scorespace/policies.hpp"

namespace scorespace {

/// Exploration constant that makes the high-probability regret bound hold at
/// failure probability delta.
inline double bound_zeta(double delta) { return std::sqrt(2.0 * std::log(1.0 / delta)); }

struct RegretParams {
    double delta = 0.05;   // failure probability, in (0, 1)
    double sigma = 0.0;    // augmentation noise scale; covariance - sigma^2 I must stay PSD
    double c_bound = 0.0;  // uniform variance bound, strictly above every diagonal entry
    int k = 0;             // evaluation budget

    /// sigma^2 = 0.99 x smallest eigenvalue, c = 1.01 x largest diagonal.
    static RegretParams defaults_for(const GaussianBelief& prior, int k, double delta = 0.05);

    /// Throws unless covariance - sigma^2 I is PSD (checked by eigenvalues)
    /// and c_bound exceeds every diagonal entry.
    void validate_against(const Eigen::MatrixXd& covariance) const;
};

/// r_k: gap between the best constraint's true score and the best score the
/// trace observed.
double regret(const Eigen::VectorXd& true_scores, const EpisodeTrace& trace);

enum class RhoMode { exact, greedy };

/// Maximum information gain over size-k subsets A:
/// (1/2) log det(sigma^-2 Sigma_A). Exact mode enumerates subsets (m <= 20);
/// greedy mode grows A by the best marginal log-det gain.
double rho_k(const Eigen::MatrixXd& covariance, double sigma, int k, RhoMode mode);

/// High-probability regret bound:
/// 2 sqrt(2 log(1/delta) (2 (c - sigma^2) rho / (k log(c sigma^-2)) + sigma^2)).
double regret_bound(const RegretParams& params, double rho);

/// Sequential information gain (1/2) sum_t log(sigma^-2 pivot_t) from the
/// conditioning pivots a selection run recorded.
double mutual_info_sequential(const std::vector<double>& pivots, double sigma);

struct AugmentedSample {
    Eigen::VectorXd f;  // latent vector
    Eigen::VectorXd j;  // observed scores; marginally N(mean, covariance)
};

/// Two-stage draw: f ~ N(mean, covariance - sigma^2 I), then j ~ N(f, sigma^2 I).
AugmentedSample sample_augmented(const GaussianBelief& prior, double sigma, Rng& rng);

/// Symmetric PSD square root via eigendecomposition (spectrum clamped at 0).
Eigen::MatrixXd gaussian_sqrt(const Eigen::MatrixXd& covariance);

struct ValidationReport {
    double delta = 0.0;
    double sigma = 0.0;
    double c = 0.0;
    int k = 0;
    int trials = 0;
    int violations = 0;
    double violation_rate = 0.0;
    double mean_regret = 0.0;
    double mean_bound = 0.0;
    std::string rho_mode;
};

/// Empirical coverage check of the regret bound: draws score vectors from
/// the prior, runs the UCB policy with the bound's zeta against a lookup
/// oracle, and reports how often the realized regret exceeds the bound.
ValidationReport monte_carlo_validate(const GaussianBelief& prior, const RegretParams& params,
                                      int trials, std::uint64_t seed);

/// x <= c log(1 + a x / c) / log(1 + a) for 0 <= x <= c, a > 0.
bool bernoulli_corollary_check(double x, double a, double c);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace scorespace
