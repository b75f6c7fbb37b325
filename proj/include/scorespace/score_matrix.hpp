#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace scorespace {

/// Scores of m solution constraints across n problem instances.
/// Rows are instances, columns are constraints.
struct ScoreMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> constraint_ids;
    std::vector<std::string> instance_ids;

    Eigen::Index n_instances() const { return values.rows(); }
    Eigen::Index n_constraints() const { return values.cols(); }

    /// Throws std::invalid_argument on shape/id/finiteness violations.
    void validate() const;
};

// CSV layout: header "instance_id,<constraint ids...>", one row per instance.
// Values are written with 17 significant digits so a round trip is bit exact.
void write_csv(const ScoreMatrix& scores, std::ostream& out);
ScoreMatrix read_score_csv(std::istream& in);

nlohmann::json to_json(const ScoreMatrix& scores);
ScoreMatrix score_matrix_from_json(const nlohmann::json& j);

/// %.17g rendering used by every CSV writer in the project.
std::string format_double(double v);

}  // namespace scorespace
