#pragma once

// Natural exponential family GLMs with the canonical link: the log-likelihood
// of observation i is y_i * x_i'b - a(x_i'b) + b(y_i).

#include <cmath>
#include <iterator>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "pqs/error.hpp"

namespace pqs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class FamilyKind { gaussian_linear, logistic };

class Family {
public:
    constexpr explicit Family(FamilyKind kind) : kind_(kind) {}

    static constexpr Family gaussian() { return Family(FamilyKind::gaussian_linear); }
    static constexpr Family logistic() { return Family(FamilyKind::logistic); }

    constexpr FamilyKind kind() const noexcept { return kind_; }

    std::string_view name() const noexcept {
        return kind_ == FamilyKind::logistic ? "logistic" : "linear";
    }

    /// Cumulant function a(theta).
    double a(double theta) const {
        if (kind_ == FamilyKind::gaussian_linear) return 0.5 * theta * theta;
        // log(1 + e^theta) without overflow
        return theta > 0.0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
    }

    /// Mean function a'(theta).
    double mean(double theta) const {
        if (kind_ == FamilyKind::gaussian_linear) return theta;
        if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
        const double e = std::exp(theta);
        return e / (1.0 + e);
    }

    /// Variance function a''(theta).
    double variance(double theta) const {
        if (kind_ == FamilyKind::gaussian_linear) return 1.0;
        const double mu = mean(theta);
        return mu * (1.0 - mu);
    }

    /// Base measure term b(y); unit-variance Gaussian density for the linear model.
    double base(double y) const {
        if (kind_ == FamilyKind::gaussian_linear)
            return -0.5 * y * y - 0.5 * std::log(2.0 * std::numbers::pi);
        return 0.0;
    }

private:
    FamilyKind kind_;
};

inline Family family_from_name(std::string_view name) {
    if (name == "linear" || name == "gaussian" || name == "gaussian-linear") return Family::gaussian();
    if (name == "logistic") return Family::logistic();
    throw Error(ErrorKind::invalid_argument, "unknown model '" + std::string(name) + "'");
}

/// Regressors (n x p) and responses (n). Validated on construction.
class Dataset {
public:
    Dataset(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
        if (X_.rows() < 1 || X_.cols() < 1)
            throw Error(ErrorKind::dimension_mismatch, "dataset needs n >= 1 and p >= 1");
        if (X_.rows() != y_.size())
            throw Error(ErrorKind::dimension_mismatch,
                        "X has " + std::to_string(X_.rows()) + " rows but y has " +
                            std::to_string(y_.size()) + " entries");
        if (!X_.allFinite() || !y_.allFinite())
            throw Error(ErrorKind::non_finite, "dataset contains non-finite entries");
    }

    Dataset(Matrix X, Vector y, Family family) : Dataset(std::move(X), std::move(y)) {
        validate_for(family);
    }

    void validate_for(Family family) const {
        if (family.kind() != FamilyKind::logistic) return;
        for (Eigen::Index i = 0; i < y_.size(); ++i)
            if (y_[i] != 0.0 && y_[i] != 1.0)
                throw Error(ErrorKind::invalid_argument, "logistic responses must be 0 or 1");
    }

    const Matrix& X() const noexcept { return X_; }
    const Vector& y() const noexcept { return y_; }
    Eigen::Index n() const noexcept { return X_.rows(); }
    Eigen::Index p() const noexcept { return X_.cols(); }

    /// Rows selected by `rows`, in the given order.
    template <typename IndexRange>
    Dataset subset(const IndexRange& rows) const {
        const auto count = static_cast<Eigen::Index>(std::size(rows));
        Matrix Xs(count, p());
        Vector ys(count);
        Eigen::Index k = 0;
        for (auto r : rows) {
            Xs.row(k) = X_.row(static_cast<Eigen::Index>(r));
            ys[k] = y_[static_cast<Eigen::Index>(r)];
            ++k;
        }
        return Dataset(std::move(Xs), std::move(ys));
    }

private:
    Matrix X_;
    Vector y_;
};

namespace detail {

inline Vector linear_predictor(const Dataset& data, const Vector& beta) {
    if (beta.size() != data.p())
        throw Error(ErrorKind::dimension_mismatch,
                    "coefficient vector has length " + std::to_string(beta.size()) +
                        ", expected " + std::to_string(data.p()));
    if (!beta.allFinite()) throw Error(ErrorKind::non_finite, "coefficients are not finite");
    Vector eta = data.X() * beta;
    if (!eta.allFinite()) throw Error(ErrorKind::non_finite, "linear predictor is not finite");
    return eta;
}

}  // namespace detail

/// Sum over observations of y_i x_i'b - a(x_i'b) + b(y_i).
inline double log_likelihood(Family family, const Dataset& data, const Vector& beta) {
    const Vector eta = detail::linear_predictor(data, beta);
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double yi = data.y()[i];
        total += yi * eta[i] - family.a(eta[i]) + family.base(yi);
    }
    return total;
}

/// n^{-1/2} sum_i x_i (y_i - a'(x_i'b)).
inline Vector score_scaled(Family family, const Dataset& data, const Vector& beta) {
    const Vector eta = detail::linear_predictor(data, beta);
    Vector resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = data.y()[i] - family.mean(eta[i]);
    return data.X().transpose() * resid / std::sqrt(static_cast<double>(data.n()));
}

/// n^{-1} sum_i a''(x_i'b) x_i x_i'.
inline Matrix information(Family family, const Dataset& data, const Vector& beta) {
    const Vector eta = detail::linear_predictor(data, beta);
    Vector w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) w[i] = family.variance(eta[i]);
    Matrix J = data.X().transpose() * w.asDiagonal() * data.X();
    J /= static_cast<double>(data.n());
    // exact symmetry for downstream factorizations
    return 0.5 * (J + J.transpose());
}

}  // namespace pqs
