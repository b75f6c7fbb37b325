#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace scorespace {

/// Ordered collection of solution constraints: an opaque id plus a parameter
/// vector in R^d per constraint (one row of params each).
struct ConstraintSet {
    std::vector<std::string> ids;
    Eigen::MatrixXd params;  // size() x dim()

    Eigen::Index size() const { return params.rows(); }
    Eigen::Index dim() const { return params.cols(); }

    void validate() const {
        if (static_cast<Eigen::Index>(ids.size()) != params.rows())
            throw std::invalid_argument("constraint id count does not match parameter rows");
        if (!params.allFinite())
            throw std::invalid_argument("constraint parameters must be finite");
        std::unordered_set<std::string> seen;
        for (const auto& id : ids)
            if (!seen.insert(id).second)
                throw std::invalid_argument("duplicate constraint id: " + id);
    }
};

}  // namespace scorespace
