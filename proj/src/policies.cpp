#include "scorespace/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace scorespace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Argmax over (index, value) candidates; exact ties broken uniformly.
/// The rng is consumed only when there is an actual tie.
int pick_argmax(const std::vector<std::pair<int, double>>& candidates, Rng& rng) {
    double best = -kInf;
    for (const auto& [idx, v] : candidates) best = std::max(best, v);
    std::vector<int> ties;
    for (const auto& [idx, v] : candidates)
        if (v == best) ties.push_back(idx);
    if (ties.size() == 1) return ties.front();
    return ties[static_cast<std::size_t>(rng.below(ties.size()))];
}

void append_step(EpisodeTrace& trace, int index, const PlanResult& result, double criterion,
                 double pivot) {
    EpisodeStep step;
    step.t = static_cast<int>(trace.steps.size()) + 1;
    step.index = index;
    step.score = result.score;
    step.ucb = criterion;
    step.pivot = pivot;
    step.feasible = result.feasible;
    step.cost = result.cost_units;
    trace.cumulative_cost += result.cost_units;
    step.cum_cost = trace.cumulative_cost;
    trace.steps.push_back(step);

    if (result.score > trace.best_score) {
        trace.best_score = result.score;
        trace.best_step = step.t;
    }
    if (result.feasible && trace.first_feasible_step == 0) {
        trace.first_feasible_step = step.t;
        trace.first_feasible_cost = trace.cumulative_cost;
    }
}

void check_budget(int k, int m) {
    if (k < 1) throw std::invalid_argument("evaluation budget k must be positive");
    if (k > m) throw std::invalid_argument("evaluation budget k exceeds constraint count");
}

}  // namespace

PlanResult PlannerOracle::unconstrained_solve(int, std::uint64_t) const {
    throw std::logic_error("this oracle has no unconstrained planner");
}

TableOracle::TableOracle(Eigen::VectorXd scores, double feasible_above)
    : scores_(std::move(scores)), feasible_above_(feasible_above) {}

PlanResult TableOracle::evaluate(int, int constraint_index) const {
    if (constraint_index < 0 || constraint_index >= scores_.size())
        throw std::invalid_argument("table oracle: constraint index out of range");
    PlanResult result;
    result.score = scores_(constraint_index);
    result.feasible = result.score > feasible_above_;
    result.cost_units = 1.0;
    return result;
}

std::vector<double> EpisodeTrace::pivots() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.pivot);
    return out;
}

double EpisodeTrace::best_score_within(int budget) const {
    double best = -kInf;
    for (const auto& s : steps) {
        if (s.t > budget) break;
        best = std::max(best, s.score);
    }
    return best;
}

EpisodeTrace run_box(int instance, const PlannerOracle& oracle, const GaussianBelief& prior,
                     int k, double zeta, std::uint64_t seed) {
    const int m = oracle.constraint_count();
    check_budget(k, m);
    if (prior.size() != m)
        throw std::invalid_argument("prior dimension does not match oracle constraint count");
    if (!prior.evaluated.empty())
        throw std::invalid_argument("run_box needs a prior with no evaluated entries");

    Rng rng(seed);
    EpisodeTrace trace;
    GaussianBelief belief = prior;
    for (int t = 0; t < k; ++t) {
        std::vector<std::pair<int, double>> candidates;
        for (const auto& entry : ucb(belief, zeta))
            candidates.emplace_back(static_cast<int>(entry.index), entry.value);
        const int chosen = pick_argmax(candidates, rng);
        double criterion = 0.0;
        for (const auto& [idx, v] : candidates)
            if (idx == chosen) criterion = v;

        const double pivot = belief.covariance(chosen, chosen);
        const PlanResult result = oracle.evaluate(instance, chosen);
        append_step(trace, chosen, result, criterion, pivot);

        belief = condition(belief, static_cast<Eigen::Index>(chosen), result.score);
        trace.update_cost += static_cast<double>(m) * static_cast<double>(m);
    }
    return trace;
}

EpisodeTrace run_static(int instance, const PlannerOracle& oracle, const GaussianBelief& prior,
                        int k) {
    const int m = oracle.constraint_count();
    check_budget(k, m);
    if (prior.size() != m)
        throw std::invalid_argument("prior dimension does not match oracle constraint count");

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (prior.mean(a) != prior.mean(b)) return prior.mean(a) > prior.mean(b);
        return a < b;
    });

    EpisodeTrace trace;
    for (int t = 0; t < k; ++t) {
        const int chosen = order[static_cast<std::size_t>(t)];
        const PlanResult result = oracle.evaluate(instance, chosen);
        append_step(trace, chosen, result, prior.mean(chosen), kNaN);
    }
    return trace;
}

EpisodeTrace run_rand(int instance, const PlannerOracle& oracle, int m, int k,
                      std::uint64_t seed) {
    check_budget(k, m);
    if (oracle.constraint_count() != m)
        throw std::invalid_argument("constraint count does not match oracle");

    // Partial Fisher-Yates: the first k entries are k distinct uniform picks.
    std::vector<int> pool(static_cast<std::size_t>(m));
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    EpisodeTrace trace;
    for (int t = 0; t < k; ++t) {
        const std::size_t j = t + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m - t)));
        std::swap(pool[static_cast<std::size_t>(t)], pool[j]);
        const int chosen = pool[static_cast<std::size_t>(t)];
        const PlanResult result = oracle.evaluate(instance, chosen);
        append_step(trace, chosen, result, kNaN, kNaN);
    }
    return trace;
}

EpisodeTrace run_doo(int instance, const PlannerOracle& oracle, const ConstraintSet& constraints,
                     const DooParams& params, int k, std::uint64_t seed) {
    const int m = oracle.constraint_count();
    check_budget(k, m);
    if (constraints.size() != m)
        throw std::invalid_argument("constraint set size does not match oracle");
    if (params.lipschitz < 0) throw std::invalid_argument("lipschitz constant must be nonnegative");

    Rng rng(seed);
    EpisodeTrace trace;
    std::vector<bool> tried(static_cast<std::size_t>(m), false);
    std::vector<std::pair<int, double>> evaluated;  // (index, score)

    for (int t = 0; t < k; ++t) {
        std::vector<std::pair<int, double>> candidates;
        for (int i = 0; i < m; ++i) {
            if (tried[static_cast<std::size_t>(i)]) continue;
            double bound = kInf;
            for (const auto& [j, score] : evaluated) {
                const double d = params.distance(constraints.params.row(i).transpose(),
                                                 constraints.params.row(j).transpose());
                bound = std::min(bound, score + params.lipschitz * d);
            }
            candidates.emplace_back(i, bound);
        }
        const int chosen = pick_argmax(candidates, rng);
        double criterion = 0.0;
        for (const auto& [idx, v] : candidates)
            if (idx == chosen) criterion = v;

        const PlanResult result = oracle.evaluate(instance, chosen);
        append_step(trace, chosen, result, criterion, kNaN);
        tried[static_cast<std::size_t>(chosen)] = true;
        evaluated.emplace_back(chosen, result.score);
    }
    return trace;
}

EpisodeTrace run_raw(int instance, const PlannerOracle& oracle, int budget, std::uint64_t seed) {
    if (budget < 0) throw std::invalid_argument("raw budget must be nonnegative");
    EpisodeTrace trace;
    for (int attempt = 0; attempt < budget; ++attempt) {
        const PlanResult result =
            oracle.unconstrained_solve(instance, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        append_step(trace, -1, result, kNaN, kNaN);
        if (result.feasible) break;
    }
    return trace;
}

void write_jsonl(const EpisodeTrace& trace, const std::vector<std::string>& constraint_ids,
                 std::ostream& out) {
    for (const auto& s : trace.steps) {
        nlohmann::json j;
        j["t"] = s.t;
        j["constraint_id"] =
            s.index >= 0 ? constraint_ids.at(static_cast<std::size_t>(s.index)) : "";
        j["score"] = s.score;
        j["ucb"] = std::isfinite(s.ucb) ? nlohmann::json(s.ucb) : nlohmann::json(nullptr);
        j["cum_cost"] = s.cum_cost;
        out << j.dump() << '\n';
    }
}

}  // namespace scorespace
