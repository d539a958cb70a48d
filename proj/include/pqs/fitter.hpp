#pragma once

// Penalized maximum likelihood
//
//     minimize  -sum_i g_i(b) + sqrt(n) * sum_j p_lambda(b_j)
//
// by local quadratic approximation (LQA). Each outer iteration replaces
// p_lambda(|b_j|) with the quadratic majorant p'(|b_j^t|) / (2 |b_j^t|) b_j^2
// around the current iterate and minimizes the surrogate by damped Newton.
// Coordinates that fall below `zero_threshold` are set to exactly zero and
// stay there for the rest of the fit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pqs/error.hpp"
#include "pqs/family.hpp"
#include "pqs/partinfo.hpp"
#include "pqs/penalty.hpp"

namespace pqs {

enum class InitKind {
    mle,    // unpenalized maximum likelihood estimate
    zeros,
    warm,   // FitConfig::warm_start
};

struct FitConfig {
    int max_outer_iters = 200;
    int max_inner_iters = 50;
    double tol = 1e-8;
    double zero_threshold = 1e-6;
    InitKind init = InitKind::mle;
    Vector warm_start;
    int max_halvings = 30;

    void validate() const {
        if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tol must be positive");
        if (!(zero_threshold > 0.0))
            throw Error(ErrorKind::invalid_argument, "zero_threshold must be positive");
        if (max_outer_iters < 1 || max_inner_iters < 1)
            throw Error(ErrorKind::invalid_argument, "iteration caps must be at least 1");
        if (max_halvings < 0) throw Error(ErrorKind::invalid_argument, "max_halvings must be >= 0");
    }
};

struct FitResult {
    double lambda = 0.0;
    Vector beta_hat;
    ActiveSetPartition active;
    double objective = 0.0;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Penalized objective after the initial pruning and after every outer iteration.
    std::vector<double> objective_trace;

    Eigen::Index active_count() const noexcept {
        return static_cast<Eigen::Index>(active.active.size());
    }
};

/// -sum_i g_i(b) + sqrt(n) sum_j p_lambda(b_j).
inline double penalized_objective(Family family, const Dataset& data, const PenaltySpec& penalty,
                                  const Vector& beta) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) pen += penalty.value(beta[j]);
    return -log_likelihood(family, data, beta) + std::sqrt(static_cast<double>(data.n())) * pen;
}

namespace detail {

struct NewtonOutcome {
    Vector beta;
    int iterations = 0;
    bool converged = false;
};

// -loglik(b) + 0.5 * sum_j ridge_j b_j^2 over the free coordinates; other
// coordinates of b are held at zero.
inline double surrogate(Family family, const Dataset& data, const Vector& beta,
                        const IndexList& free, const Vector& ridge) {
    double quad = 0.0;
    for (std::size_t k = 0; k < free.size(); ++k) {
        const double b = beta[free[k]];
        quad += ridge[static_cast<Eigen::Index>(k)] * b * b;
    }
    return -log_likelihood(family, data, beta) + 0.5 * quad;
}

/// Damped Newton on the ridge-penalized negative log-likelihood restricted
/// to `free`. Step halving keeps the surrogate from increasing.
inline NewtonOutcome newton_minimize(Family family, const Dataset& data, Vector beta,
                                     const IndexList& free, const Vector& ridge,
                                     const FitConfig& config) {
    NewtonOutcome out;
    const auto m = static_cast<Eigen::Index>(free.size());
    if (m == 0) {
        out.beta = std::move(beta);
        out.converged = true;
        return out;
    }
    Matrix Xs(data.n(), m);
    for (Eigen::Index k = 0; k < m; ++k) Xs.col(k) = data.X().col(free[static_cast<std::size_t>(k)]);
    {
        // columns without a ridge term must be linearly independent
        IndexList bare;
        for (Eigen::Index k = 0; k < m; ++k)
            if (ridge[k] == 0.0) bare.push_back(k);
        if (!bare.empty()) {
            Matrix Xb(data.n(), static_cast<Eigen::Index>(bare.size()));
            for (std::size_t k = 0; k < bare.size(); ++k) Xb.col(static_cast<Eigen::Index>(k)) = Xs.col(bare[k]);
            if (Eigen::ColPivHouseholderQR<Matrix>(Xb).rank() < Xb.cols())
                throw Error(ErrorKind::singular_system,
                            "Newton system is singular: unpenalized regressors are collinear");
        }
    }

    double current = surrogate(family, data, beta, free, ridge);
    for (int it = 1; it <= config.max_inner_iters; ++it) {
        out.iterations = it;
        const Vector eta = data.X() * beta;
        Vector resid(data.n()), var(data.n());
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            resid[i] = data.y()[i] - family.mean(eta[i]);
            var[i] = family.variance(eta[i]);
        }
        const Vector bs = detail::subvector(beta, free);
        const Vector grad = -Xs.transpose() * resid + ridge.cwiseProduct(bs);
        Matrix H = Xs.transpose() * var.asDiagonal() * Xs;
        H.diagonal() += ridge;

        Eigen::LLT<Matrix> llt;
        try {
            llt = factor_psd(H, "Newton system");
        } catch (const Error& e) {
            throw Error(ErrorKind::singular_system, e.what());
        }
        const Vector step = llt.solve(-grad);
        if (!step.allFinite()) throw Error(ErrorKind::singular_system, "Newton step is not finite");

        double t = 1.0;
        Vector trial = beta;
        double trial_value = std::numeric_limits<double>::infinity();
        for (int h = 0; h <= config.max_halvings; ++h) {
            for (Eigen::Index k = 0; k < m; ++k) trial[free[static_cast<std::size_t>(k)]] = bs[k] + t * step[k];
            trial_value = surrogate(family, data, trial, free, ridge);
            if (std::isfinite(trial_value) && trial_value <= current) break;
            t *= 0.5;
        }
        if (!(std::isfinite(trial_value) && trial_value <= current)) {
            // no descent direction left at working precision
            out.converged = step.cwiseAbs().maxCoeff() < config.tol;
            break;
        }
        const double change = t * step.cwiseAbs().maxCoeff();
        beta = trial;
        current = trial_value;
        if (change < config.tol * 0.1) {
            out.converged = true;
            break;
        }
    }
    out.beta = std::move(beta);
    return out;
}

inline IndexList all_coordinates(Eigen::Index p) {
    IndexList idx(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) idx[static_cast<std::size_t>(j)] = j;
    return idx;
}

}  // namespace detail

/// Unpenalized maximum likelihood estimate by damped Newton from zero.
inline Vector unpenalized_mle(Family family, const Dataset& data, const FitConfig& config = {}) {
    const auto free = detail::all_coordinates(data.p());
    return detail::newton_minimize(family, data, Vector::Zero(data.p()), free,
                                   Vector::Zero(data.p()), config)
        .beta;
}

namespace detail {

inline FitResult fit_from(Family family, const Dataset& data, const PenaltySpec& penalty,
                          const FitConfig& config, Vector beta) {
    const double sqrt_n = std::sqrt(static_cast<double>(data.n()));
    const Eigen::Index p = data.p();
    FitResult result;
    result.lambda = penalty.lambda();

    if (penalty.lambda() == 0.0) {
        // identically zero penalty: plain Newton, nothing is pruned
        auto nt = newton_minimize(family, data, std::move(beta), all_coordinates(p),
                                  Vector::Zero(p), config);
        result.beta_hat = std::move(nt.beta);
        result.iterations = nt.iterations;
        result.converged = nt.converged;
    } else {
        std::vector<bool> pruned(static_cast<std::size_t>(p), false);
        auto prune = [&](Vector& b) {
            for (Eigen::Index j = 0; j < p; ++j) {
                if (!pruned[static_cast<std::size_t>(j)] && std::abs(b[j]) < config.zero_threshold)
                    pruned[static_cast<std::size_t>(j)] = true;
                if (pruned[static_cast<std::size_t>(j)]) b[j] = 0.0;
            }
        };
        prune(beta);
        result.objective_trace.push_back(penalized_objective(family, data, penalty, beta));

        for (int outer = 1; outer <= config.max_outer_iters; ++outer) {
            result.iterations = outer;
            IndexList free;
            for (Eigen::Index j = 0; j < p; ++j)
                if (!pruned[static_cast<std::size_t>(j)]) free.push_back(j);
            Vector ridge(static_cast<Eigen::Index>(free.size()));
            for (std::size_t k = 0; k < free.size(); ++k) {
                const double b = std::abs(beta[free[k]]);
                ridge[static_cast<Eigen::Index>(k)] = sqrt_n * penalty.magnitude_derivative(b) / b;
            }
            auto nt = newton_minimize(family, data, beta, free, ridge, config);
            Vector next = std::move(nt.beta);
            prune(next);
            const double change = (next - beta).cwiseAbs().maxCoeff();
            beta = std::move(next);
            result.objective_trace.push_back(penalized_objective(family, data, penalty, beta));
            if (change < config.tol) {
                result.converged = true;
                break;
            }
        }
        result.beta_hat = std::move(beta);
    }

    result.active = ActiveSetPartition::from_coefficients(result.beta_hat);
    result.loglik = log_likelihood(family, data, result.beta_hat);
    result.objective = penalized_objective(family, data, penalty, result.beta_hat);
    return result;
}

inline Vector initial_point(Family family, const Dataset& data, const FitConfig& config) {
    switch (config.init) {
    case InitKind::zeros: return Vector::Zero(data.p());
    case InitKind::warm:
        if (config.warm_start.size() != data.p())
            throw Error(ErrorKind::dimension_mismatch, "warm start has the wrong length");
        if (!config.warm_start.allFinite())
            throw Error(ErrorKind::non_finite, "warm start is not finite");
        return config.warm_start;
    case InitKind::mle: break;
    }
    return unpenalized_mle(family, data, config);
}

}  // namespace detail

/// Local minimizer of the penalized objective by LQA.
inline FitResult fit(Family family, const Dataset& data, const PenaltySpec& penalty,
                     const FitConfig& config = {}) {
    config.validate();
    data.validate_for(family);
    return detail::fit_from(family, data, penalty, config,
                            detail::initial_point(family, data, config));
}

/// Fits along a strictly descending lambda grid. Each fit starts from the
/// previous solution; coordinates that solution set to zero are re-seeded
/// from the initial point so they can re-enter as lambda decreases.
inline std::vector<FitResult> fit_path(Family family, const Dataset& data, PenaltyShape shape,
                                       const std::vector<double>& lambdas,
                                       const FitConfig& config = {}) {
    config.validate();
    data.validate_for(family);
    shape.validate();
    if (lambdas.empty()) throw Error(ErrorKind::invalid_argument, "lambda grid is empty");
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] >= 0.0))
            throw Error(ErrorKind::invalid_argument, "lambda must be nonnegative");
        if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
            throw Error(ErrorKind::invalid_argument, "lambda grid must be strictly descending");
    }

    const Vector seed = detail::initial_point(family, data, config);
    std::vector<FitResult> path;
    path.reserve(lambdas.size());
    Vector start = seed;
    for (double lambda : lambdas) {
        try {
            path.push_back(detail::fit_from(family, data, PenaltySpec(shape, lambda), config, start));
        } catch (const Error& e) {
            throw Error(e.kind(), "fit at lambda=" + std::to_string(lambda) + " failed: " + e.what());
        }
        const Vector& prev = path.back().beta_hat;
        for (Eigen::Index j = 0; j < prev.size(); ++j) start[j] = prev[j] != 0.0 ? prev[j] : seed[j];
    }
    return path;
}

/// Smallest lambda at which zero is stationary for an l1-type penalty:
/// || n^{-1/2} sum_i g_i'(0) ||_inf.
inline double lambda_max(Family family, const Dataset& data) {
    return score_scaled(family, data, Vector::Zero(data.p())).cwiseAbs().maxCoeff();
}

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
inline std::vector<double> default_lambda_grid(Family family, const Dataset& data, int count = 50,
                                               double ratio = 1e-3) {
    if (count < 1) throw Error(ErrorKind::invalid_argument, "grid needs at least one point");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw Error(ErrorKind::invalid_argument, "grid ratio must lie in (0,1)");
    double top = lambda_max(family, data);
    if (!(top > 0.0)) top = 1.0;
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = top;
        return grid;
    }
    const double step = std::log(ratio) / (count - 1);
    for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = top * std::exp(step * k);
    return grid;
}

}  // namespace pqs
