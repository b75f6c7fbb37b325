#include "scorespace/regret.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scorespace {

namespace {

double log_det_llt(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("log det: matrix is not positive definite");
    return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& full, const std::vector<int>& idx) {
    Eigen::MatrixXd out(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = full(idx[i], idx[j]);
    return out;
}

/// (1/2) log det(sigma^-2 Sigma_A) for a subset A.
double half_log_det_scaled(const Eigen::MatrixXd& cov, const std::vector<int>& subset,
                           double sigma) {
    const double k = static_cast<double>(subset.size());
    return 0.5 * (log_det_llt(submatrix(cov, subset)) - 2.0 * k * std::log(sigma));
}

}  // namespace

RegretParams RegretParams::defaults_for(const GaussianBelief& prior, int k, double delta) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.covariance);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig <= 0.0)
        throw std::invalid_argument("prior covariance must be positive definite after jitter");
    RegretParams params;
    params.delta = delta;
    params.sigma = std::sqrt(0.99 * min_eig);
    params.c_bound = 1.01 * prior.covariance.diagonal().maxCoeff();
    params.k = k;
    return params;
}

void RegretParams::validate_against(const Eigen::MatrixXd& covariance) const {
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must be in (0, 1)");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    if (k < 1) throw std::invalid_argument("budget k must be positive");

    Eigen::MatrixXd shifted = covariance;
    shifted.diagonal().array() -= sigma * sigma;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(shifted);
    const double scale = std::max(1.0, covariance.diagonal().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
        throw std::invalid_argument("covariance - sigma^2 I is not positive semi-definite");
    if (c_bound <= covariance.diagonal().maxCoeff())
        throw std::invalid_argument("c_bound must exceed every diagonal entry");
}

double regret(const Eigen::VectorXd& true_scores, const EpisodeTrace& trace) {
    double best_observed = -std::numeric_limits<double>::infinity();
    for (const auto& step : trace.steps) {
        if (step.index < 0 || step.index >= true_scores.size())
            throw std::invalid_argument("trace index out of range");
        best_observed = std::max(best_observed, step.score);
    }
    return true_scores.maxCoeff() - best_observed;
}

double rho_k(const Eigen::MatrixXd& covariance, double sigma, int k, RhoMode mode) {
    const int m = static_cast<int>(covariance.rows());
    if (k < 1 || k > m) throw std::invalid_argument("rho_k: k out of range");
    if (sigma <= 0.0) throw std::invalid_argument("rho_k: sigma must be positive");

    if (mode == RhoMode::greedy) {
        std::vector<int> chosen;
        std::vector<bool> used(static_cast<std::size_t>(m), false);
        for (int step = 0; step < k; ++step) {
            int best = -1;
            double best_value = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                std::vector<int> with = chosen;
                with.push_back(i);
                const double value = half_log_det_scaled(covariance, with, sigma);
                if (value > best_value) {
                    best_value = value;
                    best = i;
                }
            }
            chosen.push_back(best);
            used[static_cast<std::size_t>(best)] = true;
        }
        return half_log_det_scaled(covariance, chosen, sigma);
    }

    if (m > 20) throw std::invalid_argument("rho_k exact mode is limited to m <= 20");
    // Lexicographic enumeration of all size-k subsets.
    std::vector<int> subset(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) subset[static_cast<std::size_t>(i)] = i;
    double best = -std::numeric_limits<double>::infinity();
    while (true) {
        best = std::max(best, half_log_det_scaled(covariance, subset, sigma));
        int i = k - 1;
        while (i >= 0 && subset[static_cast<std::size_t>(i)] == m - k + i) --i;
        if (i < 0) break;
        ++subset[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
    }
    return best;
}

double regret_bound(const RegretParams& params, double rho) {
    const double sigma2 = params.sigma * params.sigma;
    if (params.c_bound <= sigma2)
        throw std::invalid_argument("regret_bound needs c > sigma^2");
    const double log_ratio = std::log(params.c_bound / sigma2);
    const double inner =
        2.0 * (params.c_bound - sigma2) * rho / (static_cast<double>(params.k) * log_ratio) + sigma2;
    return 2.0 * std::sqrt(2.0 * std::log(1.0 / params.delta) * inner);
}

double mutual_info_sequential(const std::vector<double>& pivots, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    double sum = 0.0;
    for (double pivot : pivots) {
        if (pivot <= 0.0) throw std::invalid_argument("pivots must be positive");
        sum += std::log(pivot / (sigma * sigma));
    }
    return 0.5 * sum;
}

Eigen::MatrixXd gaussian_sqrt(const Eigen::MatrixXd& covariance) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

AugmentedSample sample_augmented(const GaussianBelief& prior, double sigma, Rng& rng) {
    const Eigen::Index m = prior.size();
    Eigen::MatrixXd latent_cov = prior.covariance;
    latent_cov.diagonal().array() -= sigma * sigma;
    const Eigen::MatrixXd root = gaussian_sqrt(latent_cov);

    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.normal();
    AugmentedSample sample;
    sample.f = prior.mean + root * z;
    sample.j.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) sample.j(i) = sample.f(i) + sigma * rng.normal();
    return sample;
}

ValidationReport monte_carlo_validate(const GaussianBelief& prior, const RegretParams& params,
                                      int trials, std::uint64_t seed) {
    if (trials < 100) throw std::invalid_argument("need at least 100 trials");
    params.validate_against(prior.covariance);
    const int m = static_cast<int>(prior.size());
    if (params.k > m) throw std::invalid_argument("budget exceeds constraint count");

    const RhoMode mode = m <= 20 ? RhoMode::exact : RhoMode::greedy;
    const double rho = rho_k(prior.covariance, params.sigma, params.k, mode);
    const double bound = regret_bound(params, rho);
    const double zeta = bound_zeta(params.delta);
    const Eigen::MatrixXd root = gaussian_sqrt(prior.covariance);

    ValidationReport report;
    report.delta = params.delta;
    report.sigma = params.sigma;
    report.c = params.c_bound;
    report.k = params.k;
    report.trials = trials;
    report.rho_mode = mode == RhoMode::exact ? "exact" : "greedy";
    report.mean_bound = bound;

    double regret_sum = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
        Eigen::VectorXd z(m);
        for (int i = 0; i < m; ++i) z(i) = rng.normal();
        const Eigen::VectorXd scores = prior.mean + root * z;

        const TableOracle oracle(scores);
        const EpisodeTrace trace = run_box(0, oracle, prior, params.k, zeta,
                                           derive_seed(seed, 0x80000000ull + trial));
        const double r = regret(scores, trace);
        regret_sum += r;
        if (r > bound) ++report.violations;
    }
    report.violation_rate = static_cast<double>(report.violations) / static_cast<double>(trials);
    report.mean_regret = regret_sum / static_cast<double>(trials);
    return report;
}

bool bernoulli_corollary_check(double x, double a, double c) {
    if (x < 0.0 || x > c || a <= 0.0)
        throw std::invalid_argument("bernoulli_corollary_check needs 0 <= x <= c and a > 0");
    const double rhs = c * std::log1p(a * x / c) / std::log1p(a);
    return x <= rhs + 1e-12 * std::max(1.0, std::abs(rhs));
}

nlohmann::json to_json(const ValidationReport& report) {
    return nlohmann::json{{"delta", report.delta},
                          {"sigma", report.sigma},
                          {"c", report.c},
                          {"k", report.k},
                          {"trials", report.trials},
                          {"violations", report.violations},
                          {"violation_rate", report.violation_rate},
                          {"mean_regret", report.mean_regret},
                          {"mean_bound", report.mean_bound},
                          {"rho_mode", report.rho_mode}};
}

}  // namespace scorespace
