#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorespace/experience.hpp"

namespace scorespace {

// Two deterministic, seedable planning domains. The grid domain plans a
// shortest path to a pre-grasp cell next to a target under an approach
// direction constraint; the nav domain plans through a visibility graph to
// an approach pose (x, y, psi) near a target in the unit square.

// ---------------------------------------------------------------------------
// Grid pick domain
// ---------------------------------------------------------------------------

struct GridParams {
    int width = 20;
    int height = 20;
    double density = 0.25;
    int n_directions = 8;
    bool clustered = true;  // rectangle clusters vs i.i.d. cells
    int cluster_min = 2;
    int cluster_max = 5;
    int margin = 0;  // keep target and start this far from the boundary

    // Cubby mode: wall off the cells around the target except an open sector
    // of `open_width` adjacent directions. The sector's center direction is
    // drawn per instance with weights proportional to powers of
    // `direction_skew`, so some approach sides are persistently more likely
    // to be open than others while same-side approaches fail together. With
    // probability `flip_prob` the sector jumps to the opposite side, which
    // plants a second, anti-correlated regime.
    bool cubby = false;
    int open_width = 2;
    double wall_prob = 0.9;
    double direction_skew = 0.6;
    double flip_prob = 0.0;
};

struct GridPickInstance {
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> occupied;  // (x, y)
    Eigen::Vector2i target;
    Eigen::Vector2i robot_start;
    std::uint64_t seed = 0;

    int width() const { return static_cast<int>(occupied.rows()); }
    int height() const { return static_cast<int>(occupied.cols()); }
    bool in_bounds(const Eigen::Vector2i& c) const {
        return c.x() >= 0 && c.x() < width() && c.y() >= 0 && c.y() < height();
    }
};

/// Approach offsets for a given direction count. 4 means the axis
/// directions; larger counts walk outward ring by ring (8, 24, 48, ... cells)
/// ordered by angle, so any k up to the enclosing ring total is valid.
std::vector<Eigen::Vector2i> approach_offsets(int n_directions);

GridPickInstance sample_grid_instance(const GridParams& params, std::uint64_t seed);

/// Shortest 4-connected path from the robot start to the pre-grasp cell
/// target + approach. Feasible iff that cell is inside the grid, free, and
/// reachable. Without a constraint a direction is sampled uniformly (raw
/// mode). Cost is 1 + the number of BFS expansions, so doomed-from-the-start
/// constraints are cheap and unreachable ones are expensive.
PlanResult grid_plan(const GridPickInstance& instance, std::optional<Eigen::Vector2i> approach,
                     const GridParams& params, std::uint64_t raw_seed = 0);

class GridDomain : public Domain {
public:
    explicit GridDomain(GridParams params) : params_(std::move(params)) {}
    std::string name() const override { return "grid"; }
    int constraint_dim() const override { return 2; }
    int instance_count() const override { return static_cast<int>(instances_.size()); }
    int sample_instance(std::uint64_t seed) override;
    int add_instance(GridPickInstance instance);
    const GridPickInstance& instance(int i) const { return instances_.at(static_cast<std::size_t>(i)); }
    PlanResult plan(int instance, const Eigen::VectorXd& constraint) const override;
    PlanResult raw_solve(int instance, std::uint64_t seed) const override;
    std::string constraint_id(const Eigen::VectorXd& constraint) const override;
    const GridParams& params() const { return params_; }

private:
    GridParams params_;
    std::vector<GridPickInstance> instances_;
};

// ---------------------------------------------------------------------------
// Nav domain
// ---------------------------------------------------------------------------

struct NavParams {
    int n_obstacles = 8;
    double obstacle_min = 0.05;
    double obstacle_max = 0.22;
    double reach = 0.15;                 // approach point must be this close to the target
    double angle_tol = 0.78539816339744831;  // pi/4 heading tolerance
};

struct NavInstance {
    std::vector<Eigen::AlignedBox2d> obstacles;
    Eigen::Vector2d target;
    Eigen::Vector2d start;
    std::uint64_t seed = 0;
};

NavInstance sample_nav_instance(const NavParams& params, std::uint64_t seed);

/// True iff p is strictly inside one of the boxes.
bool point_in_obstacle(const Eigen::Vector2d& p, const std::vector<Eigen::AlignedBox2d>& boxes);

/// True iff the segment [a, b] passes through any box interior (boxes are
/// shrunk by a small epsilon, so grazing a boundary does not block).
bool segment_blocked(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const std::vector<Eigen::AlignedBox2d>& boxes);

/// Shortest obstacle-avoiding polyline through the corner visibility graph.
/// Empty when no path exists. visibility_tests, when given, accumulates the
/// number of segment tests performed (the domain cost model).
std::vector<Eigen::Vector2d> visibility_path(const Eigen::Vector2d& start,
                                             const Eigen::Vector2d& goal,
                                             const std::vector<Eigen::AlignedBox2d>& boxes,
                                             long* visibility_tests = nullptr);

/// Plans to the approach pose (x, y, psi). Feasible iff the point is
/// collision-free, within reach of the target, the heading points at the
/// target within the angular tolerance, and a visibility path from the start
/// exists. Raw mode rejection-samples poses from the disk around the target
/// (up to `budget` tries).
PlanResult nav_plan(const NavInstance& instance, std::optional<Eigen::Vector3d> constraint,
                    const NavParams& params, std::uint64_t raw_seed = 0, int budget = 1);

class NavDomain : public Domain {
public:
    explicit NavDomain(NavParams params) : params_(std::move(params)) {}
    std::string name() const override { return "nav"; }
    int constraint_dim() const override { return 3; }
    int instance_count() const override { return static_cast<int>(instances_.size()); }
    int sample_instance(std::uint64_t seed) override;
    int add_instance(NavInstance instance);
    const NavInstance& instance(int i) const { return instances_.at(static_cast<std::size_t>(i)); }
    PlanResult plan(int instance, const Eigen::VectorXd& constraint) const override;
    PlanResult raw_solve(int instance, std::uint64_t seed) const override;
    std::string constraint_id(const Eigen::VectorXd& constraint) const override;
    const NavParams& params() const { return params_; }

private:
    NavParams params_;
    std::vector<NavInstance> instances_;
};

// ---------------------------------------------------------------------------
// Correlation audit
// ---------------------------------------------------------------------------

/// Summary of the off-diagonal correlation structure of a bundle's sample
/// covariance. Pairs are classed by the dot product of their constraint
/// parameter vectors: same side (> 0) vs opposite side (< 0).
struct CorrelationAudit {
    double mean_abs_offdiag = 0.0;
    double mean_same_side = 0.0;       // signed
    double mean_opposite_side = 0.0;   // signed
    double mean_abs_same_side = 0.0;
};

CorrelationAudit correlation_audit(const ExperienceBundle& bundle);

// Instance serialization. Grid bitmaps are run-length encoded in x-major
// order, alternating free/occupied run lengths and starting with a free run.
nlohmann::json to_json(const GridPickInstance& instance);
GridPickInstance grid_instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NavInstance& instance);
NavInstance nav_instance_from_json(const nlohmann::json& j);

}  // namespace scorespace
