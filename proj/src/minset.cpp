#include "scorespace/minset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scorespace {

namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& full, const std::vector<int>& rows) {
    Eigen::MatrixXd out(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                full(rows[i], rows[j]);
    return out;
}

double log_det_psd(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    }
    // Semi-definite fallback: clamp the spectrum at a tiny floor.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    const double floor = 1e-300;
    return eig.eigenvalues().array().max(floor).log().sum();
}

/// Per-constraint empirical feasibility probabilities (successes / n).
Eigen::VectorXd feasibility_probs(const ExperienceBundle& bundle) {
    const Eigen::Index n = bundle.n_instances();
    Eigen::VectorXd p(bundle.n_constraints());
    for (Eigen::Index j = 0; j < bundle.n_constraints(); ++j) {
        long count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (bundle.feasibility(i, j)) ++count;
        p(j) = static_cast<double>(count) / static_cast<double>(n);
    }
    return p;
}

std::vector<bool> coverage_of(const ExperienceBundle& bundle, const std::vector<int>& members) {
    std::vector<bool> covered(static_cast<std::size_t>(bundle.n_instances()), false);
    for (int j : members)
        for (Eigen::Index i = 0; i < bundle.n_instances(); ++i)
            if (bundle.feasibility(i, j)) covered[static_cast<std::size_t>(i)] = true;
    return covered;
}

double total_gain_of(const Eigen::MatrixXd& cov, const std::vector<int>& members, double jitter) {
    double total = 0.0;
    for (int theta : members) total += gain(cov, members, theta, jitter).value;
    return total;
}

void finish(MinimalSet& set, const ExperienceBundle& bundle, const Eigen::MatrixXd& cov,
            const Eigen::VectorXd& p, double jitter) {
    const auto covered = coverage_of(bundle, set.indices);
    set.covered.clear();
    for (Eigen::Index i = 0; i < bundle.n_instances(); ++i)
        if (covered[static_cast<std::size_t>(i)]) set.covered.push_back(static_cast<int>(i));
    set.success_prob = success_prob(p, set.indices);
    set.total_gain = total_gain_of(cov, set.indices, jitter);
}

}  // namespace

double success_prob(const Eigen::VectorXd& p, const std::vector<int>& members) {
    double miss = 1.0;
    for (int j : members) {
        if (j < 0 || j >= p.size()) throw std::invalid_argument("success_prob: index out of range");
        if (p(j) < 0.0 || p(j) > 1.0)
            throw std::invalid_argument("success_prob: probabilities must be in [0, 1]");
        miss *= 1.0 - p(j);
    }
    return 1.0 - miss;
}

double gaussian_entropy(const Eigen::MatrixXd& covariance) {
    const double m = static_cast<double>(covariance.rows());
    return 0.5 * m * (1.0 + std::log(2.0 * 3.14159265358979324)) + 0.5 * log_det_psd(covariance);
}

GainResult gain(const Eigen::MatrixXd& covariance, const std::vector<int>& members, int theta,
                double jitter) {
    if (std::find(members.begin(), members.end(), theta) == members.end())
        throw std::invalid_argument("gain: theta must be a member of the set");

    const double pivot = covariance(theta, theta);
    if (pivot <= 0.0 || pivot < jitter * (1.0 - 1e-9)) return {0.0, true};

    std::vector<int> rest;
    for (int j : members)
        if (j != theta) rest.push_back(j);
    if (rest.empty()) return {0.0, false};

    const Eigen::MatrixXd before = submatrix(covariance, rest);
    Eigen::VectorXd cross(rest.size());
    for (std::size_t i = 0; i < rest.size(); ++i)
        cross(static_cast<Eigen::Index>(i)) = covariance(rest[i], theta);
    const Eigen::MatrixXd after = before - (cross * cross.transpose()) / pivot;
    return {log_det_psd(before) - log_det_psd(after), false};
}

MinimalSet construct_oms(const ExperienceBundle& bundle, const GaussianBelief& prior,
                         const OmsParams& params) {
    if (prior.size() != bundle.n_constraints())
        throw std::invalid_argument("prior dimension does not match bundle");
    if (!std::isfinite(params.lambda_tradeoff))
        throw std::invalid_argument("lambda_tradeoff must be finite");

    const Eigen::Index n = bundle.n_instances();
    const Eigen::Index m = bundle.n_constraints();
    const Eigen::VectorXd p = feasibility_probs(bundle);
    if ((p.array() <= 0.0).all())
        throw std::invalid_argument("no constraint is feasible for any instance");

    MinimalSet set;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool coverable = false;
        for (Eigen::Index j = 0; j < m && !coverable; ++j) coverable = bundle.feasibility(i, j);
        if (!coverable) set.uncoverable.push_back(static_cast<int>(i));
    }
    set.n_coverable = static_cast<int>(n) - static_cast<int>(set.uncoverable.size());

    // Seed: highest prior mean, lowest index on ties.
    int seed_idx = 0;
    for (int j = 1; j < m; ++j)
        if (prior.mean(j) > prior.mean(seed_idx)) seed_idx = j;
    set.indices.push_back(seed_idx);

    auto covered = coverage_of(bundle, set.indices);
    const auto covered_count = [&] {
        int c = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            bool uncoverable = std::binary_search(set.uncoverable.begin(), set.uncoverable.end(),
                                                  static_cast<int>(i));
            if (!uncoverable && covered[static_cast<std::size_t>(i)]) ++c;
        }
        return c;
    };

    while (covered_count() < set.n_coverable) {
        // Candidates: constraints covering the most still-uncovered instances.
        int best_new = 0;
        std::vector<int> new_coverage(static_cast<std::size_t>(m), 0);
        for (int j = 0; j < m; ++j) {
            if (std::find(set.indices.begin(), set.indices.end(), j) != set.indices.end()) continue;
            int cnt = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!covered[static_cast<std::size_t>(i)] && bundle.feasibility(i, j)) ++cnt;
            new_coverage[static_cast<std::size_t>(j)] = cnt;
            best_new = std::max(best_new, cnt);
        }

        std::vector<int> candidates;
        for (int j = 0; j < m; ++j)
            if (new_coverage[static_cast<std::size_t>(j)] == best_new && best_new > 0)
                candidates.push_back(j);

        // Among them keep only the maximal mean scores.
        double best_mean = -std::numeric_limits<double>::infinity();
        for (int j : candidates) best_mean = std::max(best_mean, prior.mean(j));
        std::erase_if(candidates, [&](int j) { return prior.mean(j) != best_mean; });

        // Break the remaining tie by information gain; lowest index on ties.
        int chosen = candidates.front();
        double best_gain = -std::numeric_limits<double>::infinity();
        for (int j : candidates) {
            std::vector<int> with = set.indices;
            with.push_back(j);
            const double g = gain(prior.covariance, with, j, prior.jitter).value;
            if (g > best_gain) {
                best_gain = g;
                chosen = j;
            }
        }

        set.indices.push_back(chosen);
        for (Eigen::Index i = 0; i < n; ++i)
            if (bundle.feasibility(i, chosen)) covered[static_cast<std::size_t>(i)] = true;
    }

    finish(set, bundle, prior.covariance, p, prior.jitter);
    return set;
}

MinimalSet brute_force_oms(const ExperienceBundle& bundle, const OmsParams& params, int max_m) {
    const int m = static_cast<int>(bundle.n_constraints());
    const Eigen::Index n = bundle.n_instances();
    if (m > max_m) throw std::invalid_argument("brute_force_oms: too many constraints");
    if (n > 64) throw std::invalid_argument("brute_force_oms: too many instances");

    const GaussianBelief prior = estimate_prior(bundle.scores);
    const Eigen::VectorXd p = feasibility_probs(bundle);

    // Bitmask of instances each constraint covers.
    std::vector<std::uint64_t> column_mask(static_cast<std::size_t>(m), 0);
    std::uint64_t coverable_mask = 0;
    for (int j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (bundle.feasibility(i, j)) column_mask[static_cast<std::size_t>(j)] |= 1ull << i;
        coverable_mask |= column_mask[static_cast<std::size_t>(j)];
    }

    int best_size = m + 1;
    double best_objective = -std::numeric_limits<double>::infinity();
    std::vector<int> best_members;
    for (std::uint64_t mask = 1; mask < (1ull << m); ++mask) {
        const int size = __builtin_popcountll(mask);
        if (size > best_size) continue;
        std::uint64_t covered = 0;
        for (int j = 0; j < m; ++j)
            if (mask & (1ull << j)) covered |= column_mask[static_cast<std::size_t>(j)];
        if (covered != coverable_mask) continue;

        std::vector<int> members;
        for (int j = 0; j < m; ++j)
            if (mask & (1ull << j)) members.push_back(j);
        const double objective = [&] {
            double sum_p = 0.0;
            for (int j : members) sum_p += p(j);
            return sum_p + params.lambda_tradeoff *
                               total_gain_of(prior.covariance, members, prior.jitter);
        }();

        if (size < best_size || (size == best_size && objective > best_objective)) {
            best_size = size;
            best_objective = objective;
            best_members = std::move(members);
        }
    }
    if (best_members.empty())
        throw std::invalid_argument("no constraint is feasible for any instance");

    MinimalSet set;
    set.indices = std::move(best_members);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(coverable_mask & (1ull << i))) set.uncoverable.push_back(static_cast<int>(i));
    set.n_coverable = static_cast<int>(n) - static_cast<int>(set.uncoverable.size());
    finish(set, bundle, prior.covariance, p, prior.jitter);
    return set;
}

nlohmann::json to_json(const MinimalSet& set, const ExperienceBundle& bundle) {
    nlohmann::json j;
    j["indices"] = set.indices;
    std::vector<std::string> ids;
    for (int i : set.indices) ids.push_back(bundle.constraints.ids[static_cast<std::size_t>(i)]);
    j["constraint_ids"] = ids;
    j["covered_count"] = set.covered.size();
    j["n_coverable"] = set.n_coverable;
    j["success_prob"] = set.success_prob;
    j["total_gain"] = set.total_gain;
    return j;
}

}  // namespace scorespace
