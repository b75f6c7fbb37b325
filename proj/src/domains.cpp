#include "scorespace/domains.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>

namespace scorespace {

namespace {

constexpr double kTwoPi = 6.2831853071795865;

double wrap_angle(double a) {
    while (a > 3.14159265358979324) a -= kTwoPi;
    while (a <= -3.14159265358979324) a += kTwoPi;
    return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid pick domain
// ---------------------------------------------------------------------------

std::vector<Eigen::Vector2i> approach_offsets(int n_directions) {
    if (n_directions < 1) throw std::invalid_argument("need at least one approach direction");
    if (n_directions == 4) {
        return {{0, 1}, {-1, 0}, {0, -1}, {1, 0}};  // up, left, down, right
    }
    std::vector<Eigen::Vector2i> offsets;
    for (int radius = 1; static_cast<int>(offsets.size()) < n_directions; ++radius) {
        std::vector<Eigen::Vector2i> ring;
        for (int dx = -radius; dx <= radius; ++dx) {
            for (int dy = -radius; dy <= radius; ++dy) {
                if (std::max(std::abs(dx), std::abs(dy)) != radius) continue;
                ring.push_back({dx, dy});
            }
        }
        std::sort(ring.begin(), ring.end(), [](const Eigen::Vector2i& a, const Eigen::Vector2i& b) {
            const double aa = std::atan2(static_cast<double>(a.y()), static_cast<double>(a.x()));
            const double ab = std::atan2(static_cast<double>(b.y()), static_cast<double>(b.x()));
            return aa < ab;
        });
        for (const auto& o : ring) {
            offsets.push_back(o);
            if (static_cast<int>(offsets.size()) == n_directions) break;
        }
        if (radius > 8) throw std::invalid_argument("direction count too large");
    }
    return offsets;
}

GridPickInstance sample_grid_instance(const GridParams& params, std::uint64_t seed) {
    if (params.width < 3 || params.height < 3)
        throw std::invalid_argument("grid must be at least 3x3");
    if (params.density < 0.0 || params.density >= 1.0)
        throw std::invalid_argument("obstacle density must be in [0, 1)");

    Rng rng(seed);
    GridPickInstance inst;
    inst.seed = seed;
    inst.occupied.setConstant(params.width, params.height, false);

    const int margin = params.margin;
    if (2 * margin >= params.width - 1 || 2 * margin >= params.height - 1)
        throw std::invalid_argument("margin leaves no room for target and start");
    const auto random_cell = [&] {
        return Eigen::Vector2i(
            margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(params.width - 2 * margin))),
            margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(params.height - 2 * margin))));
    };
    inst.target = random_cell();
    do {
        inst.robot_start = random_cell();
    } while (inst.robot_start == inst.target);

    const auto protected_cell = [&](int x, int y) {
        return (x == inst.target.x() && y == inst.target.y()) ||
               (x == inst.robot_start.x() && y == inst.robot_start.y());
    };

    if (params.cubby) {
        // Pick the open sector's center among the 8 ring-1 directions with
        // geometrically skewed weights, then build walls everywhere else.
        const auto ring = approach_offsets(8);
        double total_weight = 0.0;
        std::vector<double> weights;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            weights.push_back(std::pow(params.direction_skew, static_cast<double>(i)));
            total_weight += weights.back();
        }
        double draw = rng.uniform01() * total_weight;
        std::size_t center = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            draw -= weights[i];
            if (draw <= 0.0) {
                center = i;
                break;
            }
        }
        if (rng.uniform01() < params.flip_prob) center = (center + ring.size() / 2) % ring.size();
        // Ring offsets are angle-ordered, so the open sector is a contiguous
        // run of indices starting at the center.
        std::vector<bool> open(ring.size(), false);
        for (int w = 0; w < params.open_width; ++w)
            open[(center + static_cast<std::size_t>(w)) % ring.size()] = true;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            if (open[i]) continue;
            if (rng.uniform01() >= params.wall_prob) continue;
            const Eigen::Vector2i cell = inst.target + ring[i];
            if (!inst.in_bounds(cell) || protected_cell(cell.x(), cell.y())) continue;
            inst.occupied(cell.x(), cell.y()) = true;
        }
    }

    const long total = static_cast<long>(params.width) * params.height;
    if (params.clustered) {
        const long want = static_cast<long>(params.density * static_cast<double>(total));
        long occupied = 0;
        int attempts = 0;
        while (occupied < want && attempts < 10000) {
            ++attempts;
            const int w = params.cluster_min +
                          static_cast<int>(rng.below(static_cast<std::uint64_t>(
                              params.cluster_max - params.cluster_min + 1)));
            const int h = params.cluster_min +
                          static_cast<int>(rng.below(static_cast<std::uint64_t>(
                              params.cluster_max - params.cluster_min + 1)));
            const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.width)));
            const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.height)));
            for (int x = x0; x < std::min(x0 + w, params.width); ++x) {
                for (int y = y0; y < std::min(y0 + h, params.height); ++y) {
                    if (protected_cell(x, y) || inst.occupied(x, y)) continue;
                    inst.occupied(x, y) = true;
                    ++occupied;
                }
            }
        }
    } else {
        for (int x = 0; x < params.width; ++x)
            for (int y = 0; y < params.height; ++y)
                if (!protected_cell(x, y) && rng.uniform01() < params.density)
                    inst.occupied(x, y) = true;
    }
    return inst;
}

PlanResult grid_plan(const GridPickInstance& instance, std::optional<Eigen::Vector2i> approach,
                     const GridParams& params, std::uint64_t raw_seed) {
    Eigen::Vector2i offset;
    if (approach) {
        offset = *approach;
    } else {
        const auto offsets = approach_offsets(params.n_directions);
        Rng rng(raw_seed);
        offset = offsets[static_cast<std::size_t>(rng.below(offsets.size()))];
    }

    PlanResult result;
    result.constraint = Eigen::Vector2d(offset.x(), offset.y());
    result.cost_units = 1.0;

    const Eigen::Vector2i pregrasp = instance.target + offset;
    if (!instance.in_bounds(pregrasp) || pregrasp == instance.target ||
        instance.occupied(pregrasp.x(), pregrasp.y())) {
        return result;  // infeasible, cheap reject
    }

    // BFS over free cells; the target cell itself is not traversable.
    const int w = instance.width();
    const int h = instance.height();
    const auto cell_index = [w](const Eigen::Vector2i& c) { return c.y() * w + c.x(); };
    std::vector<int> parent(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -2);
    std::deque<Eigen::Vector2i> frontier;

    const auto passable = [&](const Eigen::Vector2i& c) {
        return instance.in_bounds(c) && !instance.occupied(c.x(), c.y()) && c != instance.target;
    };
    if (!passable(instance.robot_start)) return result;

    frontier.push_back(instance.robot_start);
    parent[static_cast<std::size_t>(cell_index(instance.robot_start))] = -1;
    long expansions = 0;
    bool reached = false;
    const Eigen::Vector2i moves[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (!frontier.empty()) {
        const Eigen::Vector2i cur = frontier.front();
        frontier.pop_front();
        ++expansions;
        if (cur == pregrasp) {
            reached = true;
            break;
        }
        for (const auto& mv : moves) {
            const Eigen::Vector2i next = cur + mv;
            if (!passable(next)) continue;
            auto& slot = parent[static_cast<std::size_t>(cell_index(next))];
            if (slot != -2) continue;
            slot = cell_index(cur);
            frontier.push_back(next);
        }
    }
    result.cost_units = 1.0 + static_cast<double>(expansions);
    if (!reached) return result;

    std::vector<Eigen::Vector2d> waypoints;
    for (Eigen::Vector2i c = pregrasp;;) {
        waypoints.emplace_back(static_cast<double>(c.x()), static_cast<double>(c.y()));
        const int p = parent[static_cast<std::size_t>(cell_index(c))];
        if (p < 0) break;
        c = Eigen::Vector2i(p % w, p / w);
    }
    std::reverse(waypoints.begin(), waypoints.end());

    result.feasible = true;
    result.plan = std::move(waypoints);
    result.score = -static_cast<double>(result.plan.size() - 1);
    return result;
}

int GridDomain::sample_instance(std::uint64_t seed) {
    instances_.push_back(sample_grid_instance(params_, seed));
    return static_cast<int>(instances_.size()) - 1;
}

int GridDomain::add_instance(GridPickInstance instance) {
    instances_.push_back(std::move(instance));
    return static_cast<int>(instances_.size()) - 1;
}

PlanResult GridDomain::plan(int instance, const Eigen::VectorXd& constraint) const {
    if (constraint.size() != 2) throw std::invalid_argument("grid constraint must be 2-d");
    const Eigen::Vector2i offset(static_cast<int>(std::lround(constraint(0))),
                                 static_cast<int>(std::lround(constraint(1))));
    return grid_plan(this->instance(instance), offset, params_);
}

PlanResult GridDomain::raw_solve(int instance, std::uint64_t seed) const {
    return grid_plan(this->instance(instance), std::nullopt, params_, seed);
}

std::string GridDomain::constraint_id(const Eigen::VectorXd& constraint) const {
    return "d" + std::to_string(static_cast<int>(std::lround(constraint(0)))) + "_" +
           std::to_string(static_cast<int>(std::lround(constraint(1))));
}

// ---------------------------------------------------------------------------
// Nav domain
// ---------------------------------------------------------------------------

NavInstance sample_nav_instance(const NavParams& params, std::uint64_t seed) {
    Rng rng(seed);
    NavInstance inst;
    inst.seed = seed;
    inst.start = {rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98)};
    do {
        inst.target = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
    } while ((inst.target - inst.start).norm() < 0.2);

    int placed = 0;
    int attempts = 0;
    while (placed < params.n_obstacles && attempts < 1000) {
        ++attempts;
        const double w = rng.uniform(params.obstacle_min, params.obstacle_max);
        const double h = rng.uniform(params.obstacle_min, params.obstacle_max);
        const double x = rng.uniform(0.0, 1.0 - w);
        const double y = rng.uniform(0.0, 1.0 - h);
        Eigen::AlignedBox2d box(Eigen::Vector2d(x, y), Eigen::Vector2d(x + w, y + h));
        if (box.contains(inst.start) || box.contains(inst.target)) continue;
        inst.obstacles.push_back(box);
        ++placed;
    }
    return inst;
}

bool point_in_obstacle(const Eigen::Vector2d& p, const std::vector<Eigen::AlignedBox2d>& boxes) {
    for (const auto& box : boxes) {
        if (p.x() > box.min().x() && p.x() < box.max().x() && p.y() > box.min().y() &&
            p.y() < box.max().y())
            return true;
    }
    return false;
}

namespace {

constexpr double kBlockEps = 1e-9;   // boxes shrink by this in the blocking test
constexpr double kNodeEps = 1e-7;    // corner nodes stand off by this

bool segment_intersects_closed_box(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                   const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
    const Eigen::Vector2d d = b - a;
    double t0 = 0.0, t1 = 1.0;
    for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(d(axis)) < 1e-300) {
            if (a(axis) < lo(axis) || a(axis) > hi(axis)) return false;
        } else {
            double u = (lo(axis) - a(axis)) / d(axis);
            double v = (hi(axis) - a(axis)) / d(axis);
            if (u > v) std::swap(u, v);
            t0 = std::max(t0, u);
            t1 = std::min(t1, v);
            if (t0 > t1) return false;
        }
    }
    return true;
}

}  // namespace

bool segment_blocked(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const std::vector<Eigen::AlignedBox2d>& boxes) {
    for (const auto& box : boxes) {
        const Eigen::Vector2d lo = box.min().array() + kBlockEps;
        const Eigen::Vector2d hi = box.max().array() - kBlockEps;
        if (lo.x() >= hi.x() || lo.y() >= hi.y()) continue;  // degenerate sliver
        if (segment_intersects_closed_box(a, b, lo, hi)) return true;
    }
    return false;
}

std::vector<Eigen::Vector2d> visibility_path(const Eigen::Vector2d& start,
                                             const Eigen::Vector2d& goal,
                                             const std::vector<Eigen::AlignedBox2d>& boxes,
                                             long* visibility_tests) {
    // The world is the unit square; a corner that lands outside it (an
    // obstacle flush against the boundary) is not a place a path can round.
    // The square is convex, so keeping all nodes inside keeps segments inside.
    std::vector<Eigen::Vector2d> nodes = {start, goal};
    for (const auto& box : boxes) {
        const Eigen::Vector2d lo = box.min().array() - kNodeEps;
        const Eigen::Vector2d hi = box.max().array() + kNodeEps;
        for (const Eigen::Vector2d& corner :
             {Eigen::Vector2d(lo.x(), lo.y()), Eigen::Vector2d(lo.x(), hi.y()),
              Eigen::Vector2d(hi.x(), lo.y()), Eigen::Vector2d(hi.x(), hi.y())}) {
            if (corner.x() < 0.0 || corner.x() > 1.0 || corner.y() < 0.0 || corner.y() > 1.0)
                continue;
            if (!point_in_obstacle(corner, boxes)) nodes.push_back(corner);
        }
    }

    const std::size_t count = nodes.size();
    long tests = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = i + 1; j < count; ++j) {
            ++tests;
            if (segment_blocked(nodes[i], nodes[j], boxes)) continue;
            const double w = (nodes[j] - nodes[i]).norm();
            adjacency[i].emplace_back(j, w);
            adjacency[j].emplace_back(i, w);
        }
    }
    if (visibility_tests) *visibility_tests += tests;

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(count, kInf);
    std::vector<int> prev(count, -1);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[0] = 0.0;
    queue.push({0.0, 0});
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u == 1) break;
        for (const auto& [v, w] : adjacency[u]) {
            if (dist[u] + w < dist[v]) {
                dist[v] = dist[u] + w;
                prev[v] = static_cast<int>(u);
                queue.push({dist[v], v});
            }
        }
    }
    if (dist[1] == kInf) return {};

    std::vector<Eigen::Vector2d> path;
    for (int u = 1; u != -1; u = prev[static_cast<std::size_t>(u)])
        path.push_back(nodes[static_cast<std::size_t>(u)]);
    std::reverse(path.begin(), path.end());
    return path;
}

PlanResult nav_plan(const NavInstance& instance, std::optional<Eigen::Vector3d> constraint,
                    const NavParams& params, std::uint64_t raw_seed, int budget) {
    if (!constraint) {
        // Raw mode: rejection-sample approach poses from the disk around the
        // target until one works or the try budget runs out.
        Rng rng(raw_seed);
        PlanResult last;
        for (int attempt = 0; attempt < budget; ++attempt) {
            const double radius = params.reach * std::sqrt(rng.uniform01());
            const double phi = rng.uniform(-3.14159265358979324, 3.14159265358979324);
            const double psi = rng.uniform(-3.14159265358979324, 3.14159265358979324);
            const Eigen::Vector3d pose(instance.target.x() + radius * std::cos(phi),
                                       instance.target.y() + radius * std::sin(phi), psi);
            PlanResult result = nav_plan(instance, pose, params);
            result.cost_units += last.cost_units;
            if (result.feasible) return result;
            last = std::move(result);
        }
        return last;
    }

    PlanResult result;
    result.constraint = *constraint;
    result.cost_units = 1.0;

    const Eigen::Vector2d point = constraint->head<2>();
    const double psi = constraint->z();
    if (point.x() < 0.0 || point.x() > 1.0 || point.y() < 0.0 || point.y() > 1.0) return result;
    if (point_in_obstacle(point, instance.obstacles)) return result;
    if ((point - instance.target).norm() > params.reach) return result;
    const Eigen::Vector2d to_target = instance.target - point;
    if (to_target.norm() > 1e-12) {
        const double bearing = std::atan2(to_target.y(), to_target.x());
        if (std::abs(wrap_angle(psi - bearing)) > params.angle_tol) return result;
    }
    if (point_in_obstacle(instance.start, instance.obstacles)) return result;

    long tests = 0;
    auto path = visibility_path(instance.start, point, instance.obstacles, &tests);
    result.cost_units = 1.0 + static_cast<double>(tests);
    if (path.empty()) return result;

    result.feasible = true;
    result.plan = std::move(path);
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < result.plan.size(); ++i)
        length += (result.plan[i + 1] - result.plan[i]).norm();
    result.score = -length;
    return result;
}

int NavDomain::sample_instance(std::uint64_t seed) {
    instances_.push_back(sample_nav_instance(params_, seed));
    return static_cast<int>(instances_.size()) - 1;
}

int NavDomain::add_instance(NavInstance instance) {
    instances_.push_back(std::move(instance));
    return static_cast<int>(instances_.size()) - 1;
}

PlanResult NavDomain::plan(int instance, const Eigen::VectorXd& constraint) const {
    if (constraint.size() != 3) throw std::invalid_argument("nav constraint must be 3-d");
    return nav_plan(this->instance(instance), Eigen::Vector3d(constraint), params_);
}

PlanResult NavDomain::raw_solve(int instance, std::uint64_t seed) const {
    return nav_plan(this->instance(instance), std::nullopt, params_, seed, 1);
}

std::string NavDomain::constraint_id(const Eigen::VectorXd& constraint) const {
    std::string id = "p";
    for (Eigen::Index i = 0; i < constraint.size(); ++i) {
        if (i > 0) id += '_';
        id += format_double(constraint(i));
    }
    return id;
}

// ---------------------------------------------------------------------------
// Instance serialization
// ---------------------------------------------------------------------------

nlohmann::json to_json(const GridPickInstance& instance) {
    std::vector<long> runs;
    bool run_value = false;  // runs alternate starting with free cells
    long run_length = 0;
    for (int y = 0; y < instance.height(); ++y) {
        for (int x = 0; x < instance.width(); ++x) {
            const bool v = instance.occupied(x, y);
            if (v == run_value) {
                ++run_length;
            } else {
                runs.push_back(run_length);
                run_value = v;
                run_length = 1;
            }
        }
    }
    runs.push_back(run_length);
    return nlohmann::json{{"width", instance.width()},
                          {"height", instance.height()},
                          {"target", {instance.target.x(), instance.target.y()}},
                          {"start", {instance.robot_start.x(), instance.robot_start.y()}},
                          {"seed", instance.seed},
                          {"occupied_rle", runs}};
}

GridPickInstance grid_instance_from_json(const nlohmann::json& j) {
    GridPickInstance instance;
    const int width = j.at("width").get<int>();
    const int height = j.at("height").get<int>();
    instance.occupied.setConstant(width, height, false);
    instance.target = {j.at("target").at(0).get<int>(), j.at("target").at(1).get<int>()};
    instance.robot_start = {j.at("start").at(0).get<int>(), j.at("start").at(1).get<int>()};
    instance.seed = j.value("seed", std::uint64_t{0});

    long cell = 0;
    bool value = false;
    for (const auto& run : j.at("occupied_rle")) {
        const long length = run.get<long>();
        for (long s = 0; s < length; ++s, ++cell) {
            if (cell >= static_cast<long>(width) * height)
                throw std::invalid_argument("grid rle overruns the bitmap");
            if (value) instance.occupied(static_cast<int>(cell % width),
                                         static_cast<int>(cell / width)) = true;
        }
        value = !value;
    }
    if (cell != static_cast<long>(width) * height)
        throw std::invalid_argument("grid rle does not fill the bitmap");
    return instance;
}

nlohmann::json to_json(const NavInstance& instance) {
    auto obstacles = nlohmann::json::array();
    for (const auto& box : instance.obstacles)
        obstacles.push_back({box.min().x(), box.min().y(), box.max().x(), box.max().y()});
    return nlohmann::json{{"obstacles", std::move(obstacles)},
                          {"target", {instance.target.x(), instance.target.y()}},
                          {"start", {instance.start.x(), instance.start.y()}},
                          {"seed", instance.seed}};
}

NavInstance nav_instance_from_json(const nlohmann::json& j) {
    NavInstance instance;
    for (const auto& box : j.at("obstacles"))
        instance.obstacles.emplace_back(
            Eigen::Vector2d(box.at(0).get<double>(), box.at(1).get<double>()),
            Eigen::Vector2d(box.at(2).get<double>(), box.at(3).get<double>()));
    instance.target = {j.at("target").at(0).get<double>(), j.at("target").at(1).get<double>()};
    instance.start = {j.at("start").at(0).get<double>(), j.at("start").at(1).get<double>()};
    instance.seed = j.value("seed", std::uint64_t{0});
    return instance;
}

// ---------------------------------------------------------------------------
// Correlation audit
// ---------------------------------------------------------------------------

CorrelationAudit correlation_audit(const ExperienceBundle& bundle) {
    const Eigen::MatrixXd cov = sample_covariance(bundle.scores.values);
    const Eigen::Index m = cov.rows();

    CorrelationAudit audit;
    long n_all = 0, n_same = 0, n_opp = 0;
    double sum_abs = 0, sum_same = 0, sum_opp = 0, sum_abs_same = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double denom = std::sqrt(cov(i, i) * cov(j, j));
            if (denom <= 1e-300) continue;
            const double corr = cov(i, j) / denom;
            sum_abs += std::abs(corr);
            ++n_all;
            const double dot = bundle.constraints.params.row(i).dot(bundle.constraints.params.row(j));
            if (dot > 0) {
                sum_same += corr;
                sum_abs_same += std::abs(corr);
                ++n_same;
            } else if (dot < 0) {
                sum_opp += corr;
                ++n_opp;
            }
        }
    }
    if (n_all > 0) audit.mean_abs_offdiag = sum_abs / static_cast<double>(n_all);
    if (n_same > 0) {
        audit.mean_same_side = sum_same / static_cast<double>(n_same);
        audit.mean_abs_same_side = sum_abs_same / static_cast<double>(n_same);
    }
    if (n_opp > 0) audit.mean_opposite_side = sum_opp / static_cast<double>(n_opp);
    return audit;
}

}  // namespace scorespace
