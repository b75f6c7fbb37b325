#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "scorespace/common.hpp"
#include "scorespace/score_matrix.hpp"

namespace scorespace {

// Gaussian model over constraint scores. Beliefs are immutable values:
// condition() returns a fresh belief, so episodes can fork and replay freely
// and conditioning order can be permuted in tests.

template <typename Scalar>
struct Observation {
    Eigen::Index index;
    Scalar score;
};

template <typename Scalar>
struct GaussianBeliefT {
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Vec mean;
    Mat covariance;
    std::vector<Observation<Scalar>> evaluated;
    Scalar jitter = Scalar(0);  // diagonal regularization actually applied

    Eigen::Index size() const { return mean.size(); }

    bool is_evaluated(Eigen::Index i) const {
        for (const auto& obs : evaluated)
            if (obs.index == i) return true;
        return false;
    }

    std::vector<Eigen::Index> untried() const {
        std::vector<Eigen::Index> out;
        out.reserve(static_cast<std::size_t>(size()));
        for (Eigen::Index i = 0; i < size(); ++i)
            if (!is_evaluated(i)) out.push_back(i);
        return out;
    }
};

using GaussianBelief = GaussianBeliefT<double>;

/// Column means of a data matrix (rows = samples).
template <typename Derived>
auto column_means(const Eigen::MatrixBase<Derived>& data) {
    using Scalar = typename Derived::Scalar;
    return Eigen::Vector<Scalar, Eigen::Dynamic>(data.colwise().mean());
}

/// Unbiased sample covariance (divisor n-1) of a data matrix.
template <typename Derived>
auto sample_covariance(const Eigen::MatrixBase<Derived>& data) {
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = data.rows();
    if (n < 2) throw std::invalid_argument("sample covariance needs at least 2 rows");
    const auto mu = column_means(data);
    Mat centered = data.rowwise() - mu.transpose();
    Mat cov = (centered.transpose() * centered) / Scalar(n - 1);
    return cov;
}

template <typename Scalar>
struct RegularizedCovariance {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix;
    Scalar jitter;
};

/// Smallest diagonal jitter from a geometric ladder (base 1e-10 * mean
/// diagonal, x10 per retry) that makes an LLT factorization succeed. The
/// ladder is capped at 1e-2 * max diagonal; past that we give up rather than
/// distort the matrix. A zero matrix has no scale of its own, so the ladder
/// falls back to absolute units there.
template <typename Scalar>
RegularizedCovariance<Scalar> regularize(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& covariance,
    Scalar symmetry_tol = Scalar(1e-10)) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index m = covariance.rows();
    if (covariance.cols() != m) throw std::invalid_argument("covariance must be square");
    if (!covariance.allFinite()) throw std::invalid_argument("covariance has non-finite entries");

    const Scalar scale_ref = std::max(Scalar(1), covariance.cwiseAbs().maxCoeff());
    const Scalar asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
    if (asym > symmetry_tol * scale_ref)
        throw std::invalid_argument("covariance is not symmetric within tolerance");

    Mat sym = ((covariance + covariance.transpose()) / Scalar(2)).eval();

    const auto factorizes = [](const Mat& a) {
        Eigen::LLT<Mat> llt(a);
        return llt.info() == Eigen::Success;
    };

    if (factorizes(sym)) return {sym, Scalar(0)};

    const Scalar trace = sym.trace();
    const Scalar max_diag = sym.diagonal().maxCoeff();
    const Scalar unit = trace > Scalar(0) ? trace / Scalar(m) : Scalar(1);
    const Scalar cap = Scalar(1e-2) * (max_diag > Scalar(0) ? max_diag : unit);

    for (Scalar jitter = Scalar(1e-10) * unit; jitter <= cap; jitter *= Scalar(10)) {
        Mat candidate = sym;
        candidate.diagonal().array() += jitter;
        if (factorizes(candidate)) return {std::move(candidate), jitter};
    }
    throw RegularizationError("jitter ladder exceeded 1e-2 * max diagonal");
}

/// Prior belief from a score matrix: column means, unbiased sample
/// covariance, regularized so later conditioning always has a usable pivot.
inline GaussianBelief estimate_prior(const ScoreMatrix& scores) {
    scores.validate();
    GaussianBelief belief;
    belief.mean = column_means(scores.values);
    auto reg = regularize(Eigen::MatrixXd(sample_covariance(scores.values)));
    belief.covariance = std::move(reg.matrix);
    belief.jitter = reg.jitter;
    return belief;
}

/// Posterior after observing one score. Incremental rank-1 update: O(m^2)
/// per observation, and by Gaussian conditioning algebra the result over
/// untried indices matches conditioning on the whole observation set at once
/// in any order. The evaluated entry is pinned to the observation exactly.
template <typename Scalar>
GaussianBeliefT<Scalar> condition(const GaussianBeliefT<Scalar>& belief, Eigen::Index index,
                                  Scalar observed) {
    if (index < 0 || index >= belief.size())
        throw std::invalid_argument("condition: index out of range");
    if (belief.is_evaluated(index))
        throw std::invalid_argument("condition: index already evaluated");
    if (!std::isfinite(observed))
        throw std::invalid_argument("condition: observed score must be finite");

    const Scalar pivot = belief.covariance(index, index);
    if (pivot <= Scalar(0) || pivot < belief.jitter * (Scalar(1) - Scalar(1e-9)))
        throw DegeneratePivotError("conditioning pivot below jitter at index " +
                                   std::to_string(index));

    GaussianBeliefT<Scalar> out = belief;
    const typename GaussianBeliefT<Scalar>::Vec col = belief.covariance.col(index);
    const Scalar residual = observed - belief.mean(index);

    out.mean += col * (residual / pivot);
    // col * col^T is bitwise symmetric; dividing by the pivot entrywise keeps it so.
    out.covariance -= (col * col.transpose()) / pivot;

    out.mean(index) = observed;
    out.covariance.row(index).setZero();
    out.covariance.col(index).setZero();
    out.evaluated.push_back({index, observed});
    return out;
}

template <typename Scalar>
struct UcbEntry {
    Eigen::Index index;
    Scalar value;
};

/// Upper confidence bounds mean + zeta * sqrt(variance) for the untried
/// indices only. Variance is clamped at zero: jitter and rounding can leave
/// a -1e-15 on the diagonal.
template <typename Scalar>
std::vector<UcbEntry<Scalar>> ucb(const GaussianBeliefT<Scalar>& belief, Scalar zeta) {
    if (!(zeta >= Scalar(0))) throw std::invalid_argument("ucb: zeta must be nonnegative");
    std::vector<UcbEntry<Scalar>> out;
    out.reserve(static_cast<std::size_t>(belief.size()));
    for (Eigen::Index i = 0; i < belief.size(); ++i) {
        if (belief.is_evaluated(i)) continue;
        const Scalar var = std::max(belief.covariance(i, i), Scalar(0));
        out.push_back({i, belief.mean(i) + zeta * std::sqrt(var)});
    }
    return out;
}

}  // namespace scorespace
