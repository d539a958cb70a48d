#pragma once

// Tuning-parameter selection for penalized GLM fits: an AIC-type criterion
// whose bias term is |active set| (plus a Monte-Carlo term K for l1-type
// penalties), and K-fold cross-validated deviance as a baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pqs/error.hpp"
#include "pqs/family.hpp"
#include "pqs/fitter.hpp"
#include "pqs/partinfo.hpp"
#include "pqs/penalty.hpp"
#include "pqs/rng.hpp"

namespace pqs {

/// Minimizes u'Ju/2 - u'tau + lambda ||u||_1 by cyclic coordinate descent,
///
///     u_j <- S(tau_j - sum_{k != j} J_jk u_k, lambda) / J_jj,
///
/// with S the soft threshold, until no coordinate moves by tol or more.
inline Vector solve_u1(const Matrix& J, const Vector& tau, double lambda, double tol = 1e-12,
                       int max_sweeps = 100000) {
    const Eigen::Index m = tau.size();
    if (J.rows() != m || J.cols() != m)
        throw Error(ErrorKind::dimension_mismatch, "solve_u1: matrix and vector sizes differ");
    if (!(lambda >= 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be nonnegative");
    Vector u = Vector::Zero(m);
    if (m == 0) return u;
    for (Eigen::Index j = 0; j < m; ++j)
        if (!(J(j, j) > 0.0))
            throw Error(ErrorKind::not_positive_definite,
                        "solve_u1: diagonal entry " + std::to_string(j) + " is not positive");

    // grad = J u - tau, kept current as coordinates move
    Vector grad = -tau;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double largest = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double z = J(j, j) * u[j] - grad[j];  // tau_j - sum_{k!=j} J_jk u_k
            const double shrunk = std::max(std::abs(z) - lambda, 0.0);
            const double next = (z > 0.0 ? shrunk : -shrunk) / J(j, j);
            const double delta = next - u[j];
            if (delta != 0.0) {
                grad += J.col(j) * delta;
                u[j] = next;
                largest = std::max(largest, std::abs(delta));
            }
        }
        if (largest < tol) break;
    }
    return u;
}

/// Objective minimized by solve_u1.
inline double u1_objective(const Matrix& J, const Vector& tau, double lambda, const Vector& u) {
    return 0.5 * u.dot(J * u) - u.dot(tau) + lambda * u.lpNorm<1>();
}

struct KEstimate {
    double k_hat = 0.0;
    double std_error = 0.0;
    int samples = 0;
};

/// Monte-Carlo estimate of K = E[u1' s_{1|2}] with s ~ N(0, J), where u1
/// solves the limiting l1 problem for the inactive coordinates of `fit`.
inline KEstimate estimate_K(const FitResult& fit, const Matrix& J, const PenaltySpec& penalty,
                            int mc_samples, RngStream& rng) {
    if (!penalty.is_l1_type())
        throw Error(ErrorKind::invalid_argument, "K is only defined for l1-type penalties");
    if (mc_samples < 2) throw Error(ErrorKind::invalid_argument, "mc_samples must be at least 2");
    if (fit.active.inactive.empty()) return {0.0, 0.0, 0};

    const PartitionedInfo info = partition(J, fit.active);
    Vector slope(static_cast<Eigen::Index>(fit.active.active.size()));
    for (std::size_t k = 0; k < fit.active.active.size(); ++k)
        slope[static_cast<Eigen::Index>(k)] = penalty.derivative(fit.beta_hat[fit.active.active[k]]);

    const Matrix draws = sample_gaussian(J, mc_samples, rng);
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        const Vector s = draws.row(i).transpose();
        const Vector s1 = info.inactive_part(s);
        const Vector s2 = info.active_part(s);
        Vector s1given2 = s1, tau = s1;
        if (s2.size() > 0) {
            s1given2 -= info.gain() * s2;
            tau -= info.gain() * (s2 - slope);
        }
        const Vector u1 = solve_u1(info.J1given2(), tau, penalty.lambda());
        const double term = u1.dot(s1given2);
        sum += term;
        sum_sq += term * term;
    }
    const double m = static_cast<double>(mc_samples);
    const double mean = sum / m;
    const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
    return {mean, std::sqrt(var / m), mc_samples};
}

struct AicReport {
    double lambda = 0.0;
    double loglik = 0.0;
    Eigen::Index active_count = 0;
    double k_hat = 0.0;
    double k_hat_stderr = 0.0;
    double aic = 0.0;
    int mc_samples = 0;
};

/// -2 loglik + 2 |active| (+ 2 K for l1-type penalties).
inline double aic_value(double loglik, Eigen::Index active_count, double k_hat, bool l1_type) {
    return -2.0 * loglik + 2.0 * static_cast<double>(active_count) + (l1_type ? 2.0 * k_hat : 0.0);
}

inline AicReport aic(const FitResult& fit, Family family, const Dataset& data,
                     const PenaltySpec& penalty, int mc_samples, RngStream& rng) {
    AicReport report;
    report.lambda = penalty.lambda();
    report.loglik = fit.loglik;
    report.active_count = fit.active_count();
    if (penalty.is_l1_type()) {
        const Matrix J = information(family, data, fit.beta_hat);
        const KEstimate k = estimate_K(fit, J, penalty, mc_samples, rng);
        report.k_hat = k.k_hat;
        report.k_hat_stderr = k.std_error;
        report.mc_samples = k.samples;
    }
    report.aic = aic_value(report.loglik, report.active_count, report.k_hat, penalty.is_l1_type());
    return report;
}

/// AIC along a fitted path; one child stream of `rng` per grid point.
inline std::vector<AicReport> aic_path(const std::vector<FitResult>& path, Family family,
                                       const Dataset& data, PenaltyShape shape, int mc_samples,
                                       const RngStream& rng) {
    std::vector<AicReport> out;
    out.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        RngStream child = rng.split(k);
        out.push_back(aic(path[k], family, data, PenaltySpec(shape, path[k].lambda), mc_samples, child));
    }
    return out;
}

/// Held-out fold of every observation after one deterministic shuffle.
struct FoldAssignment {
    int folds = 0;
    std::vector<std::vector<Eigen::Index>> members;  // ascending within each fold
};

inline FoldAssignment make_folds(Eigen::Index n, int folds, RngStream& rng) {
    if (folds < 2 || folds > n)
        throw Error(ErrorKind::invalid_argument, "folds must lie in [2, n]");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // Fisher-Yates driven directly by the engine so the permutation does not
    // depend on the standard library's distribution implementations.
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.engine()() % static_cast<std::uint64_t>(i));
        std::swap(order[i - 1], order[j]);
    }
    FoldAssignment out;
    out.folds = folds;
    out.members.resize(static_cast<std::size_t>(folds));
    const Eigen::Index base = n / folds, extra = n % folds;
    Eigen::Index pos = 0;
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index size = base + (f < extra ? 1 : 0);
        auto& fold = out.members[static_cast<std::size_t>(f)];
        fold.assign(order.begin() + pos, order.begin() + pos + size);
        std::sort(fold.begin(), fold.end());
        pos += size;
    }
    return out;
}

struct CvReport {
    double lambda = 0.0;
    int folds = 0;
    double deviance = 0.0;
    std::vector<double> per_fold;
};

namespace detail {

inline std::vector<Eigen::Index> complement(Eigen::Index n, const std::vector<Eigen::Index>& held) {
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(n) - held.size());
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (k < held.size() && held[k] == i)
            ++k;
        else
            out.push_back(i);
    }
    return out;
}

}  // namespace detail

/// Cross-validated deviance (-2 x held-out log-likelihood) for every lambda
/// of a descending grid, sharing one fold assignment.
inline std::vector<CvReport> cross_validate_path(Family family, const Dataset& data, PenaltyShape shape,
                                                 const std::vector<double>& lambdas,
                                                 const FoldAssignment& assignment,
                                                 const FitConfig& config = {}) {
    std::vector<CvReport> reports(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        reports[k].lambda = lambdas[k];
        reports[k].folds = assignment.folds;
        reports[k].per_fold.assign(static_cast<std::size_t>(assignment.folds), 0.0);
    }
    for (int f = 0; f < assignment.folds; ++f) {
        const auto& held = assignment.members[static_cast<std::size_t>(f)];
        const Dataset train = data.subset(detail::complement(data.n(), held));
        const Dataset test = data.subset(held);
        std::vector<FitResult> path;
        try {
            path = fit_path(family, train, shape, lambdas, config);
        } catch (const Error& e) {
            throw Error(ErrorKind::fit_failure, "cross-validation fold " + std::to_string(f) +
                                                    " failed: " + e.what());
        }
        for (std::size_t k = 0; k < lambdas.size(); ++k)
            reports[k].per_fold[static_cast<std::size_t>(f)] =
                -2.0 * log_likelihood(family, test, path[k].beta_hat);
    }
    for (auto& r : reports)
        r.deviance = std::accumulate(r.per_fold.begin(), r.per_fold.end(), 0.0);
    return reports;
}

inline CvReport cross_validate(Family family, const Dataset& data, PenaltyShape shape, double lambda,
                               int folds, const FitConfig& config, RngStream& rng) {
    const FoldAssignment assignment = make_folds(data.n(), folds, rng);
    return cross_validate_path(family, data, shape, {lambda}, assignment, config).front();
}

/// Lambda with the smallest score; ties go to the largest lambda.
inline double select_lambda(const std::vector<std::pair<double, double>>& scored) {
    if (scored.empty()) throw Error(ErrorKind::invalid_argument, "no candidates to select from");
    auto best = scored.front();
    for (const auto& [lambda, score] : scored) {
        if (score < best.second || (score == best.second && lambda > best.first)) best = {lambda, score};
    }
    return best.first;
}

}  // namespace pqs
