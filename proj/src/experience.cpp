#include "scorespace/experience.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace scorespace {

namespace {

/// Reapplies the sentinel to the infeasible cells of a score matrix.
void apply_sentinel(Eigen::MatrixXd& values,
                    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& feasibility,
                    double sentinel) {
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            if (!feasibility(i, j)) values(i, j) = sentinel;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

double infeasibility_sentinel(
    const Eigen::MatrixXd& scores,
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& feasibility) {
    if (scores.rows() != feasibility.rows() || scores.cols() != feasibility.cols())
        throw std::invalid_argument("scores and feasibility shapes differ");
    double min = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::int64_t count = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            if (!feasibility(i, j)) continue;
            min = std::min(min, scores(i, j));
            sum += scores(i, j);
            ++count;
        }
    }
    if (count == 0) return 0.0;
    const double mean = sum / static_cast<double>(count);
    // Offset the minimum by the mean-to-min spread so the sentinel sits
    // strictly below every feasible score regardless of sign convention.
    // When all feasible scores coincide the spread is zero; fall back to one
    // score unit to keep the separation strict.
    double spread = mean - min;
    if (spread <= 0.0) spread = 1.0;
    return min - spread;
}

double score_plan(const std::vector<Eigen::Vector2d>& waypoints, bool feasible, double sentinel) {
    if (!feasible) return sentinel;
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
        if (!waypoints[i].allFinite() || !waypoints[i + 1].allFinite())
            throw std::invalid_argument("score_plan: waypoints must be finite");
        length += (waypoints[i + 1] - waypoints[i]).norm();
    }
    return -length;
}

void ExperienceBundle::validate() const {
    scores.validate();
    constraints.validate();
    if (constraints.size() != scores.values.cols())
        throw std::invalid_argument("constraint set size does not match score columns");
    if (feasibility.rows() != scores.values.rows() || feasibility.cols() != scores.values.cols())
        throw std::invalid_argument("feasibility shape does not match scores");
    for (Eigen::Index i = 0; i < scores.values.rows(); ++i)
        for (Eigen::Index j = 0; j < scores.values.cols(); ++j)
            if (feasibility(i, j) != (scores.values(i, j) > sentinel))
                throw std::invalid_argument("feasibility mask inconsistent with sentinel rule");
    const double recomputed = infeasibility_sentinel(scores.values, feasibility);
    const double scale = std::max(1.0, std::abs(sentinel));
    if (std::abs(recomputed - sentinel) > 1e-12 * scale)
        throw std::invalid_argument("stored sentinel does not match recomputation");
}

ExperienceBundle generate_training_data(Domain& domain, const GenerateParams& params) {
    if (params.n_instances < 2)
        throw std::invalid_argument("training data needs at least 2 instances");
    if (params.solutions_per_instance < 1)
        throw std::invalid_argument("solutions_per_instance must be positive");

    std::vector<int> instances;
    instances.reserve(static_cast<std::size_t>(params.n_instances));
    for (int i = 0; i < params.n_instances; ++i)
        instances.push_back(domain.sample_instance(derive_seed(params.seed, static_cast<std::uint64_t>(i))));

    // Extraction pass: raw-solve each instance, keep the constraints that
    // produced the solutions, dedup on exact parameter equality.
    ConstraintSet constraints;
    std::vector<Eigen::VectorXd> rows;
    std::uint64_t attempt_stream = 0x10000;
    for (int i = 0; i < params.n_instances; ++i) {
        for (int s = 0; s < params.solutions_per_instance; ++s) {
            for (int attempt = 0; attempt < params.raw_budget; ++attempt) {
                const PlanResult result =
                    domain.raw_solve(instances[static_cast<std::size_t>(i)],
                                     derive_seed(params.seed, attempt_stream++));
                if (!result.feasible) continue;
                const bool duplicate =
                    std::any_of(rows.begin(), rows.end(),
                                [&](const Eigen::VectorXd& v) { return v == result.constraint; });
                if (!duplicate) {
                    rows.push_back(result.constraint);
                    constraints.ids.push_back(domain.constraint_id(result.constraint));
                }
                break;
            }
        }
    }
    if (rows.empty())
        throw std::runtime_error("no raw solution found on any training instance");

    constraints.params.resize(static_cast<Eigen::Index>(rows.size()), domain.constraint_dim());
    for (std::size_t j = 0; j < rows.size(); ++j)
        constraints.params.row(static_cast<Eigen::Index>(j)) = rows[j].transpose();
    constraints.validate();

    // Scoring pass over every (instance, constraint) pair.
    const Eigen::Index n = params.n_instances;
    const Eigen::Index m = constraints.size();
    Eigen::MatrixXd values(n, m);
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> feasibility(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const PlanResult result = domain.plan(instances[static_cast<std::size_t>(i)],
                                                  constraints.params.row(j).transpose());
            feasibility(i, j) = result.feasible;
            values(i, j) = result.feasible ? score_plan(result.plan, true, 0.0) : 0.0;
        }
    }

    ExperienceBundle bundle;
    bundle.sentinel = infeasibility_sentinel(values, feasibility);
    apply_sentinel(values, feasibility, bundle.sentinel);
    bundle.scores.values = std::move(values);
    bundle.scores.constraint_ids = constraints.ids;
    bundle.scores.instance_ids.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) bundle.scores.instance_ids.push_back("w" + std::to_string(i));
    bundle.constraints = std::move(constraints);
    bundle.feasibility = std::move(feasibility);
    bundle.domain_name = domain.name();
    bundle.seed = params.seed;
    bundle.validate();
    return bundle;
}

LoocvSplit loocv_split(const ExperienceBundle& bundle, int held_out) {
    const Eigen::Index n = bundle.n_instances();
    if (n < 3) throw std::invalid_argument("leave-one-out needs at least 3 instances");
    if (held_out < 0 || held_out >= n) throw std::invalid_argument("held-out index out of range");

    LoocvSplit split;
    split.test.index = held_out;
    split.test.instance_id = bundle.scores.instance_ids[static_cast<std::size_t>(held_out)];
    split.test.scores = bundle.scores.values.row(held_out).transpose();
    split.test.feasibility = bundle.feasibility.row(held_out).transpose();

    const Eigen::Index m = bundle.n_constraints();
    Eigen::MatrixXd values(n - 1, m);
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> feasibility(n - 1, m);
    std::vector<std::string> instance_ids;
    instance_ids.reserve(static_cast<std::size_t>(n - 1));
    Eigen::Index out = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i == held_out) continue;
        values.row(out) = bundle.scores.values.row(i);
        feasibility.row(out) = bundle.feasibility.row(i);
        instance_ids.push_back(bundle.scores.instance_ids[static_cast<std::size_t>(i)]);
        ++out;
    }

    ExperienceBundle& train = split.train;
    train.sentinel = infeasibility_sentinel(values, feasibility);
    apply_sentinel(values, feasibility, train.sentinel);
    train.scores.values = std::move(values);
    train.scores.constraint_ids = bundle.scores.constraint_ids;
    train.scores.instance_ids = std::move(instance_ids);
    train.constraints = bundle.constraints;
    train.feasibility = std::move(feasibility);
    train.domain_name = bundle.domain_name;
    train.seed = bundle.seed;
    train.validate();
    return split;
}

ExperienceBundle select_constraints(const ExperienceBundle& bundle, const std::vector<int>& columns) {
    if (columns.empty()) throw std::invalid_argument("select_constraints: empty column list");
    const Eigen::Index n = bundle.n_instances();
    const Eigen::Index m = static_cast<Eigen::Index>(columns.size());

    ExperienceBundle out;
    out.scores.values.resize(n, m);
    out.feasibility.resize(n, m);
    out.constraints.params.resize(m, bundle.constraints.dim());
    for (Eigen::Index j = 0; j < m; ++j) {
        const int src = columns[static_cast<std::size_t>(j)];
        if (src < 0 || src >= bundle.n_constraints())
            throw std::invalid_argument("select_constraints: column out of range");
        out.scores.values.col(j) = bundle.scores.values.col(src);
        out.feasibility.col(j) = bundle.feasibility.col(src);
        out.constraints.params.row(j) = bundle.constraints.params.row(src);
        out.constraints.ids.push_back(bundle.constraints.ids[static_cast<std::size_t>(src)]);
    }
    out.sentinel = infeasibility_sentinel(out.scores.values, out.feasibility);
    apply_sentinel(out.scores.values, out.feasibility, out.sentinel);
    out.scores.constraint_ids = out.constraints.ids;
    out.scores.instance_ids = bundle.scores.instance_ids;
    out.domain_name = bundle.domain_name;
    out.seed = bundle.seed;
    out.validate();
    return out;
}

ExperienceBundle subsample_constraints(const ExperienceBundle& bundle, int target_m,
                                       std::uint64_t seed) {
    const int m = static_cast<int>(bundle.n_constraints());
    if (target_m < 1 || target_m > m)
        throw std::invalid_argument("subsample target out of range");

    std::vector<int> pool(static_cast<std::size_t>(m));
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    for (int t = 0; t < target_m; ++t) {
        const std::size_t j =
            t + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m - t)));
        std::swap(pool[static_cast<std::size_t>(t)], pool[j]);
    }
    std::vector<int> keep(pool.begin(), pool.begin() + target_m);
    std::sort(keep.begin(), keep.end());
    return select_constraints(bundle, keep);
}

void write_bundle(const ExperienceBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::ofstream scores_out(dir / "scores.csv");
    if (!scores_out) throw std::runtime_error("cannot write scores.csv");
    write_csv(bundle.scores, scores_out);

    std::ofstream constraints_out(dir / "constraints.csv");
    if (!constraints_out) throw std::runtime_error("cannot write constraints.csv");
    constraints_out << "id";
    for (Eigen::Index j = 0; j < bundle.constraints.dim(); ++j) constraints_out << ",p" << j;
    constraints_out << '\n';
    for (Eigen::Index i = 0; i < bundle.constraints.size(); ++i) {
        constraints_out << bundle.constraints.ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < bundle.constraints.dim(); ++j)
            constraints_out << ',' << format_double(bundle.constraints.params(i, j));
        constraints_out << '\n';
    }

    nlohmann::json meta;
    meta["sentinel"] = bundle.sentinel;
    meta["d"] = bundle.constraints.dim();
    meta["n"] = bundle.n_instances();
    meta["m"] = bundle.n_constraints();
    meta["domain"] = bundle.domain_name;
    meta["seed"] = bundle.seed;
    std::ofstream meta_out(dir / "meta.json");
    if (!meta_out) throw std::runtime_error("cannot write meta.json");
    meta_out << meta.dump(2) << '\n';
}

ExperienceBundle read_bundle(const std::filesystem::path& dir) {
    std::ifstream scores_in(dir / "scores.csv");
    if (!scores_in) throw std::runtime_error("cannot read scores.csv");
    ExperienceBundle bundle;
    bundle.scores = read_score_csv(scores_in);

    std::ifstream constraints_in(dir / "constraints.csv");
    if (!constraints_in) throw std::runtime_error("cannot read constraints.csv");
    std::string line;
    if (!std::getline(constraints_in, line)) throw std::runtime_error("empty constraints.csv");
    const std::size_t dim = split_line(line).size() - 1;
    std::vector<std::vector<double>> rows;
    while (std::getline(constraints_in, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != dim + 1) throw std::runtime_error("bad constraints.csv row");
        bundle.constraints.ids.push_back(fields[0]);
        std::vector<double> row(dim);
        for (std::size_t j = 0; j < dim; ++j) row[j] = std::stod(fields[j + 1]);
        rows.push_back(std::move(row));
    }
    bundle.constraints.params.resize(static_cast<Eigen::Index>(rows.size()),
                                     static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j)
            bundle.constraints.params(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];

    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw std::runtime_error("cannot read meta.json");
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    bundle.sentinel = meta.at("sentinel").get<double>();
    bundle.domain_name = meta.value("domain", "");
    bundle.seed = meta.value("seed", std::uint64_t{0});

    bundle.feasibility = bundle.scores.values.array() > bundle.sentinel;
    bundle.validate();
    return bundle;
}

DomainOracle::DomainOracle(const Domain& domain, ConstraintSet constraints, double sentinel,
                           int raw_budget)
    : domain_(domain), constraints_(std::move(constraints)), sentinel_(sentinel),
      raw_budget_(raw_budget) {
    constraints_.validate();
}

PlanResult DomainOracle::evaluate(int instance, int constraint_index) const {
    if (constraint_index < 0 || constraint_index >= constraints_.size())
        throw std::invalid_argument("constraint index out of range");
    PlanResult result = domain_.plan(instance, constraints_.params.row(constraint_index).transpose());
    result.score = result.feasible ? score_plan(result.plan, true, sentinel_) : sentinel_;
    return result;
}

PlanResult DomainOracle::unconstrained_solve(int instance, std::uint64_t seed) const {
    PlanResult best;
    for (int attempt = 0; attempt < raw_budget_; ++attempt) {
        PlanResult result =
            domain_.raw_solve(instance, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        best.cost_units += result.cost_units;
        if (result.feasible) {
            result.cost_units = best.cost_units;
            result.score = score_plan(result.plan, true, sentinel_);
            return result;
        }
        best.constraint = result.constraint;
    }
    best.feasible = false;
    best.score = sentinel_;
    return best;
}

}  // namespace scorespace
