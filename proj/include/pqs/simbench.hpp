#pragma once

// Simulation bench: correlated Gaussian designs, sparse true coefficients,
// and a comparison of AIC- and CV-selected fits by the expected predictive
// log-likelihood on fresh data (KL), false positives and false negatives.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "pqs/criterion.hpp"
#include "pqs/error.hpp"
#include "pqs/family.hpp"
#include "pqs/fitter.hpp"
#include "pqs/partinfo.hpp"
#include "pqs/penalty.hpp"
#include "pqs/rng.hpp"

namespace pqs {

enum class Selector { aic, cv };

inline std::string_view to_string(Selector s) { return s == Selector::aic ? "aic" : "cv"; }

inline Selector selector_from_name(std::string_view name) {
    if (name == "aic") return Selector::aic;
    if (name == "cv") return Selector::cv;
    throw Error(ErrorKind::invalid_argument, "unknown selector '" + std::string(name) + "'");
}

struct Design {
    Eigen::Index p = 8;
    Eigen::Index k = 2;
    Eigen::Index n = 100;
};

struct SimulationConfig {
    Family model = Family::gaussian();
    PenaltyShape penalty{};
    int case_id = 1;  // 1 or 2 for the standard pairs, 0 for user-supplied
    double beta1 = 0.1;
    double beta2 = 0.5;
    Design design{};
    int reps = 50;
    int kl_copies = 500;
    std::vector<Selector> selectors{Selector::cv, Selector::aic};
    std::uint64_t seed = 1;
    int mc_samples = 1000;
    int folds = 5;
    int grid_size = 50;
    double grid_ratio = 1e-3;
    bool fixed_x_kl = false;  // evaluate KL on copies of y with the fitted X
    int threads = 1;
    FitConfig fit{};

    void validate() const {
        penalty.validate();
        if (design.p < 1 || design.n < 1 || design.k < 0)
            throw Error(ErrorKind::invalid_argument, "design needs p >= 1, n >= 1, k >= 0");
        if (design.p < 2 * design.k) throw Error(ErrorKind::invalid_argument, "design needs p >= 2k");
        if (reps < 1) throw Error(ErrorKind::invalid_argument, "reps must be at least 1");
        if (kl_copies < 1) throw Error(ErrorKind::invalid_argument, "kl_copies must be at least 1");
        if (selectors.empty()) throw Error(ErrorKind::invalid_argument, "no selectors requested");
        if (mc_samples < 2) throw Error(ErrorKind::invalid_argument, "mc_samples must be at least 2");
        if (folds < 2 || folds > design.n) throw Error(ErrorKind::invalid_argument, "folds must lie in [2, n]");
        if (grid_size < 1) throw Error(ErrorKind::invalid_argument, "grid_size must be at least 1");
        if (threads < 1) throw Error(ErrorKind::invalid_argument, "threads must be at least 1");
        fit.validate();
    }
};

/// Sigma_ij = 0.5^|i-j|.
inline Matrix design_covariance(Eigen::Index p) {
    Matrix S(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            S(i, j) = std::pow(0.5, static_cast<double>(std::abs(i - j)));
    return S;
}

/// n rows drawn i.i.d. from N(0, Sigma).
inline Matrix generate_design(Eigen::Index p, Eigen::Index n, RngStream& rng) {
    if (p < 1 || n < 1) throw Error(ErrorKind::invalid_argument, "design needs p >= 1 and n >= 1");
    return sample_gaussian(design_covariance(p), n, rng);
}

/// (beta1 1_k, beta2 1_k, 0_{p-2k}).
inline Vector true_beta(Eigen::Index p, Eigen::Index k, double beta1, double beta2) {
    if (k < 0 || p < 2 * k)
        throw Error(ErrorKind::invalid_argument, "true_beta needs p >= 2k");
    Vector b = Vector::Zero(p);
    b.head(k).setConstant(beta1);
    b.segment(k, k).setConstant(beta2);
    return b;
}

inline Vector generate_response(Family family, const Matrix& X, const Vector& beta, RngStream& rng) {
    if (X.cols() != beta.size())
        throw Error(ErrorKind::dimension_mismatch, "generate_response: X and beta disagree");
    const Vector eta = X * beta;
    Vector y(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (family.kind() == FamilyKind::gaussian_linear)
            y[i] = eta[i] + rng.normal();
        else
            y[i] = rng.bernoulli(family.mean(eta[i])) ? 1.0 : 0.0;
    }
    return y;
}

/// -(1 / (copies n)) sum over fresh datasets of sum_i g_i(beta_hat). When
/// `fixed_X` is non-null only the responses are redrawn.
inline double kl_metric(Family family, const Vector& beta_hat, const Vector& beta_star, Eigen::Index n,
                        int copies, RngStream& rng, const Matrix* fixed_X = nullptr) {
    if (copies < 1) throw Error(ErrorKind::invalid_argument, "kl_copies must be at least 1");
    if (beta_hat.size() != beta_star.size())
        throw Error(ErrorKind::dimension_mismatch, "kl_metric: coefficient lengths differ");
    if (!beta_hat.allFinite()) throw Error(ErrorKind::non_finite, "kl_metric: beta_hat not finite");
    double total = 0.0;
    for (int c = 0; c < copies; ++c) {
        Matrix X = fixed_X ? *fixed_X : generate_design(beta_star.size(), n, rng);
        Vector y = generate_response(family, X, beta_star, rng);
        total += log_likelihood(family, Dataset(std::move(X), std::move(y)), beta_hat);
    }
    const Eigen::Index rows = fixed_X ? fixed_X->rows() : n;
    return -total / (static_cast<double>(copies) * static_cast<double>(rows));
}

inline double kl_metric(const SimulationConfig& config, const Vector& beta_hat, RngStream& rng,
                        const Matrix* fixed_X = nullptr) {
    const Vector star = true_beta(config.design.p, config.design.k, config.beta1, config.beta2);
    return kl_metric(config.model, beta_hat, star, config.design.n, config.kl_copies, rng, fixed_X);
}

struct SelectionCounts {
    int fp = 0;
    int fn = 0;
};

inline SelectionCounts count_errors(const Vector& beta_hat, const Vector& beta_star) {
    if (beta_hat.size() != beta_star.size())
        throw Error(ErrorKind::dimension_mismatch, "count_errors: coefficient lengths differ");
    SelectionCounts c;
    for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
        if (beta_hat[j] != 0.0 && beta_star[j] == 0.0) ++c.fp;
        if (beta_hat[j] == 0.0 && beta_star[j] != 0.0) ++c.fn;
    }
    return c;
}

struct RepRecord {
    Selector selector = Selector::aic;
    int rep = 0;
    double lambda_hat = 0.0;
    double kl = 0.0;
    int fp = 0;
    int fn = 0;
};

struct MetricsReport {
    Selector selector = Selector::aic;
    int reps = 0;
    double kl_mean = 0.0;
    double kl_sd = 0.0;
    double fp_mean = 0.0;
    double fn_mean = 0.0;
    std::vector<double> lambda_hat;
};

struct ExperimentResult {
    std::vector<RepRecord> records;  // ordered by rep, then selector
    std::vector<MetricsReport> summary;
    std::vector<int> failed_reps;
    std::vector<std::string> failure_messages;
};

/// Stream layout per replication: split(rep) then 0 = data, 1 = KL
/// evaluation (shared by all selectors), 2 = AIC sampling, 3 = CV folds.
inline std::vector<RepRecord> run_replication(const SimulationConfig& config, int rep) {
    const RngStream root = RngStream(config.seed).split(static_cast<std::uint64_t>(rep));
    RngStream data_rng = root.split(0);
    const Family family = config.model;
    const Vector star = true_beta(config.design.p, config.design.k, config.beta1, config.beta2);

    Matrix X = generate_design(config.design.p, config.design.n, data_rng);
    Vector y = generate_response(family, X, star, data_rng);
    const Dataset data(X, std::move(y), family);

    const auto grid = default_lambda_grid(family, data, config.grid_size, config.grid_ratio);
    const auto path = fit_path(family, data, config.penalty, grid, config.fit);

    std::vector<RepRecord> out;
    for (Selector sel : config.selectors) {
        std::vector<std::pair<double, double>> scored;
        if (sel == Selector::aic) {
            for (const auto& r : aic_path(path, family, data, config.penalty, config.mc_samples, root.split(2)))
                scored.emplace_back(r.lambda, r.aic);
        } else {
            RngStream fold_rng = root.split(3);
            const auto folds = make_folds(data.n(), config.folds, fold_rng);
            for (const auto& r : cross_validate_path(family, data, config.penalty, grid, folds, config.fit))
                scored.emplace_back(r.lambda, r.deviance);
        }
        const double lambda_hat = select_lambda(scored);
        const auto it = std::find_if(path.begin(), path.end(),
                                     [&](const FitResult& f) { return f.lambda == lambda_hat; });
        const Vector& beta_hat = it->beta_hat;

        RngStream kl_rng = root.split(1);
        RepRecord rec;
        rec.selector = sel;
        rec.rep = rep;
        rec.lambda_hat = lambda_hat;
        rec.kl = kl_metric(config, beta_hat, kl_rng, config.fixed_x_kl ? &X : nullptr);
        const auto counts = count_errors(beta_hat, star);
        rec.fp = counts.fp;
        rec.fn = counts.fn;
        out.push_back(rec);
    }
    return out;
}

inline std::vector<MetricsReport> summarize(const SimulationConfig& config,
                                            const std::vector<RepRecord>& records) {
    std::vector<MetricsReport> summary;
    for (Selector sel : config.selectors) {
        MetricsReport m;
        m.selector = sel;
        std::vector<double> kls;
        for (const auto& r : records) {
            if (r.selector != sel) continue;
            kls.push_back(r.kl);
            m.fp_mean += r.fp;
            m.fn_mean += r.fn;
            m.lambda_hat.push_back(r.lambda_hat);
        }
        m.reps = static_cast<int>(kls.size());
        if (m.reps > 0) {
            const double cnt = static_cast<double>(m.reps);
            double sum = 0.0;
            for (double v : kls) sum += v;
            m.kl_mean = sum / cnt;
            double ss = 0.0;
            for (double v : kls) ss += (v - m.kl_mean) * (v - m.kl_mean);
            m.kl_sd = m.reps > 1 ? std::sqrt(ss / (cnt - 1.0)) : 0.0;
            m.fp_mean /= cnt;
            m.fn_mean /= cnt;
        }
        summary.push_back(std::move(m));
    }
    return summary;
}

/// Runs all replications on up to `config.threads` workers. The output does
/// not depend on the number of workers. Failed replications are excluded;
/// more than 10% failures aborts.
inline ExperimentResult run_experiment(const SimulationConfig& config) {
    config.validate();
    const int reps = config.reps;
    std::vector<std::vector<RepRecord>> per_rep(static_cast<std::size_t>(reps));
    std::vector<std::string> errors(static_cast<std::size_t>(reps));
    std::vector<char> failed(static_cast<std::size_t>(reps), 0);

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int rep = next++; rep < reps; rep = next++) {
            try {
                per_rep[static_cast<std::size_t>(rep)] = run_replication(config, rep);
            } catch (const std::exception& e) {
                failed[static_cast<std::size_t>(rep)] = 1;
                errors[static_cast<std::size_t>(rep)] = e.what();
            }
        }
    };
    const int workers = std::min(config.threads, reps);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ExperimentResult result;
    for (int rep = 0; rep < reps; ++rep) {
        if (failed[static_cast<std::size_t>(rep)]) {
            result.failed_reps.push_back(rep);
            result.failure_messages.push_back(errors[static_cast<std::size_t>(rep)]);
            continue;
        }
        for (const auto& r : per_rep[static_cast<std::size_t>(rep)]) result.records.push_back(r);
    }
    if (result.failed_reps.size() * 10 > static_cast<std::size_t>(reps))
        throw Error(ErrorKind::fit_failure,
                    std::to_string(result.failed_reps.size()) + " of " + std::to_string(reps) +
                        " replications failed; first: " + result.failure_messages.front());
    result.summary = summarize(config, result.records);
    return result;
}

}  // namespace pqs
