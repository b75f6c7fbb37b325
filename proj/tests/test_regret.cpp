#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scorespace/regret.hpp"

using namespace scorespace;

namespace {

GaussianBelief belief_from(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    GaussianBelief belief;
    belief.mean = mean;
    belief.covariance = cov;
    return belief;
}

/// Low-rank plus noise covariance: G G^T + sigma^2 I with G m x d.
Eigen::MatrixXd planted_covariance(Eigen::Index m, Eigen::Index d, double sigma, Rng& rng) {
    Eigen::MatrixXd g(m, d);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
    Eigen::MatrixXd cov = g * g.transpose();
    cov.diagonal().array() += sigma * sigma;
    return cov;
}

}  // namespace

TEST_CASE("regret arithmetic") {
    Eigen::VectorXd truth(3);
    truth << 3.0, 1.0, 2.0;
    const TableOracle oracle(truth);
    GaussianBelief prior = belief_from(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity());

    // A trace that saw the best constraint has zero regret.
    EpisodeTrace trace = run_static(0, oracle, prior, 3);
    CHECK(regret(truth, trace) == 0.0);

    // Evaluating only {1, 2}: regret is 3 - 2 = 1.
    GaussianBelief skewed = prior;
    skewed.mean << -1.0, 1.0, 0.5;
    trace = run_static(0, oracle, skewed, 2);
    CHECK(regret(truth, trace) == doctest::Approx(1.0));

    // Full budget always has zero regret.
    for (std::uint64_t seed = 0; seed < 10; ++seed)
        CHECK(regret(truth, run_box(0, oracle, prior, 3, 1.0, seed)) == 0.0);
}

TEST_CASE("rho_k") {
    const double sigma = 0.5;
    SUBCASE("pure noise carries no information") {
        const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(6, 6) * sigma * sigma;
        for (int k = 1; k <= 6; ++k)
            CHECK(rho_k(cov, sigma, k, RhoMode::exact) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("diagonal closed form") {
        const double c = 2.0;
        const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(5, 5) * c;
        for (int k = 1; k <= 5; ++k)
            CHECK(rho_k(cov, sigma, k, RhoMode::exact) ==
                  doctest::Approx(0.5 * k * std::log(c / (sigma * sigma))).epsilon(1e-12));
    }
    SUBCASE("greedy never beats exact and both grow with k") {
        Rng rng(3);
        const Eigen::MatrixXd cov = planted_covariance(6, 2, sigma, rng);
        double previous = 0.0;
        for (int k = 1; k <= 6; ++k) {
            const double exact = rho_k(cov, sigma, k, RhoMode::exact);
            const double greedy = rho_k(cov, sigma, k, RhoMode::greedy);
            CHECK(greedy <= exact + 1e-9);
            CHECK(exact >= previous - 1e-12);
            previous = exact;
        }
    }
    SUBCASE("exact mode rejects large sets") {
        const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(21, 21);
        CHECK_THROWS_AS(rho_k(cov, sigma, 2, RhoMode::exact), std::invalid_argument);
    }
}

TEST_CASE("regret bound formula") {
    SUBCASE("diagonal case collapses analytically") {
        const double delta = 0.05, c = 1.0, sigma = 0.4;
        RegretParams params;
        params.delta = delta;
        params.sigma = sigma;
        params.c_bound = c;
        params.k = 7;
        const double rho = 0.5 * params.k * std::log(c / (sigma * sigma));
        const double bound = regret_bound(params, rho);
        CHECK(std::abs(bound - 2.0 * std::sqrt(2.0 * std::log(20.0))) < 1e-9);
    }
    SUBCASE("continuous as sigma^2 approaches c") {
        const double c = 1.0;
        RegretParams params;
        params.delta = 0.05;
        params.c_bound = c;
        params.k = 4;
        const double limit = 2.0 * std::sqrt(2.0 * std::log(20.0) * c);
        for (double eps : {1e-3, 1e-6, 1e-9}) {
            params.sigma = std::sqrt(c * (1.0 - eps));
            const double rho = 0.5 * params.k * std::log(c / (params.sigma * params.sigma));
            CHECK(std::abs(regret_bound(params, rho) - limit) < 1e-3);
        }
        params.sigma = 1.1;
        CHECK_THROWS_AS(regret_bound(params, 0.0), std::invalid_argument);
    }
    SUBCASE("planted covariance: bound decreases with the budget") {
        Rng rng(5);
        const double sigma = 0.3;
        const Eigen::MatrixXd cov = planted_covariance(12, 2, sigma, rng);
        RegretParams params;
        params.delta = 0.05;
        params.sigma = sigma;
        params.c_bound = 1.01 * cov.diagonal().maxCoeff();
        double previous = std::numeric_limits<double>::infinity();
        for (int k : {2, 4, 6, 8, 10, 12}) {
            params.k = k;
            const double bound = regret_bound(params, rho_k(cov, sigma, k, RhoMode::exact));
            CHECK(bound < previous);
            previous = bound;
        }
    }
}

TEST_CASE("sequential mutual information matches the subset log-det") {
    const double sigma = 0.4;
    SUBCASE("trivial cases") {
        CHECK(mutual_info_sequential({sigma * sigma}, sigma) == doctest::Approx(0.0));
        CHECK(mutual_info_sequential({0.9}, sigma) ==
              doctest::Approx(0.5 * std::log(0.9 / (sigma * sigma))));
    }
    SUBCASE("identity holds along selection traces") {
        Rng rng(7);
        for (int trial = 0; trial < 25; ++trial) {
            const Eigen::Index m = 8;
            const Eigen::MatrixXd cov = planted_covariance(m, 3, sigma, rng);
            Eigen::VectorXd mean(m), truth(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                mean(i) = rng.normal();
                truth(i) = rng.normal();
            }
            const GaussianBelief prior = belief_from(mean, cov);
            const TableOracle oracle(truth);
            const int k = 1 + static_cast<int>(rng.below(m - 1));
            const EpisodeTrace trace =
                run_box(0, oracle, prior, k, bound_zeta(0.05), 900 + trial);

            std::vector<int> chosen;
            for (const auto& s : trace.steps) chosen.push_back(s.index);
            Eigen::MatrixXd sub(chosen.size(), chosen.size());
            for (std::size_t a = 0; a < chosen.size(); ++a)
                for (std::size_t b = 0; b < chosen.size(); ++b)
                    sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                        cov(chosen[a], chosen[b]);
            const double direct =
                0.5 * (oracle::eig_log_det(sub) -
                       2.0 * static_cast<double>(chosen.size()) * std::log(sigma));
            CHECK(mutual_info_sequential(trace.pivots(), sigma) ==
                  doctest::Approx(direct).epsilon(1e-8));
        }
    }
}

TEST_CASE("augmented samples reproduce the marginal distribution") {
    Rng rng(11);
    const double sigma = 0.35;
    const Eigen::Index m = 4;
    const Eigen::MatrixXd cov = planted_covariance(m, 2, sigma, rng);
    Eigen::VectorXd mean(m);
    mean << 1.0, -0.5, 0.0, 2.0;
    const GaussianBelief prior = belief_from(mean, cov);

    const int draws = 50000;
    Eigen::MatrixXd samples(draws, m);
    Rng sample_rng(12345);
    for (int i = 0; i < draws; ++i) {
        const AugmentedSample s = sample_augmented(prior, sigma, sample_rng);
        samples.row(i) = s.j.transpose();
    }
    const Eigen::VectorXd sample_mean = samples.colwise().mean();
    Eigen::MatrixXd centered = samples.rowwise() - sample_mean.transpose();
    const Eigen::MatrixXd sample_cov = centered.transpose() * centered / (draws - 1.0);

    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
            // Standard error of a covariance entry for a Gaussian sample.
            const double se =
                std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / draws);
            CHECK(std::abs(sample_cov(a, b) - cov(a, b)) < 5.0 * se);
        }
        CHECK(std::abs(sample_mean(a) - mean(a)) < 5.0 * std::sqrt(cov(a, a) / draws));
    }
}

TEST_CASE("gaussian tail bound holds empirically") {
    const double delta0 = 0.1;
    const double zeta0 = bound_zeta(delta0);
    const double mu = 2.0, sd = 1.7;
    Rng rng(13);
    const int draws = 100000;
    long inside = 0;
    for (int i = 0; i < draws; ++i)
        if (std::abs(mu + sd * rng.normal() - mu) <= zeta0 * sd) ++inside;
    // Coverage must be at least 1 - delta0 up to Monte Carlo noise.
    const double rate = static_cast<double>(inside) / draws;
    CHECK(rate >= 1.0 - delta0 - 3.0 * std::sqrt(delta0 * (1 - delta0) / draws));
}

TEST_CASE("bernoulli corollary") {
    CHECK(bernoulli_corollary_check(0.0, 2.0, 1.0));
    CHECK(bernoulli_corollary_check(1.0, 2.0, 1.0));  // equality at x = c
    Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
        const double c = 0.1 + 5.0 * rng.uniform01();
        const double x = c * rng.uniform01();
        const double a = 1e-3 + 4.0 * rng.uniform01();
        CHECK(bernoulli_corollary_check(x, a, c));
    }
    CHECK_THROWS_AS(bernoulli_corollary_check(-0.1, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("monte carlo validation") {
    Rng rng(19);
    const double sigma = 0.3;
    const Eigen::Index m = 10;
    const Eigen::MatrixXd cov = planted_covariance(m, 2, sigma, rng);
    Eigen::VectorXd mean(m);
    for (Eigen::Index i = 0; i < m; ++i) mean(i) = rng.normal();
    const GaussianBelief prior = belief_from(mean, cov);

    RegretParams params;
    params.delta = 0.05;
    params.sigma = sigma;
    params.c_bound = 1.01 * cov.diagonal().maxCoeff();

    SUBCASE("full budget means zero regret and zero violations") {
        params.k = static_cast<int>(m);
        const ValidationReport report = monte_carlo_validate(prior, params, 200, 23);
        CHECK(report.violations == 0);
        CHECK(report.mean_regret == doctest::Approx(0.0));
        CHECK(report.rho_mode == "exact");
    }
    SUBCASE("rejects tiny trial counts and bad parameters") {
        params.k = 3;
        CHECK_THROWS_AS(monte_carlo_validate(prior, params, 99, 1), std::invalid_argument);
        RegretParams bad = params;
        bad.sigma = 10.0;
        CHECK_THROWS_AS(monte_carlo_validate(prior, bad, 200, 1), std::invalid_argument);
        RegretParams low_c = params;
        low_c.c_bound = 0.5 * cov.diagonal().maxCoeff();
        CHECK_THROWS_AS(monte_carlo_validate(prior, low_c, 200, 1), std::invalid_argument);
    }
    SUBCASE("defaults satisfy the preconditions") {
        GaussianBelief jittered = prior;
        jittered.jitter = 0.0;
        const RegretParams defaults = RegretParams::defaults_for(jittered, 4);
        defaults.validate_against(prior.covariance);
        CHECK(defaults.c_bound > cov.diagonal().maxCoeff());
    }
    SUBCASE("report serializes the contract fields") {
        params.k = 4;
        const ValidationReport report = monte_carlo_validate(prior, params, 150, 29);
        const nlohmann::json j = to_json(report);
        for (const char* key : {"delta", "sigma", "c", "k", "trials", "violations",
                                "violation_rate", "mean_regret", "mean_bound", "rho_mode"})
            CHECK(j.contains(key));
    }
}
