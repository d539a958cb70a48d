// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Pass criterion numbers as arguments to run a
// subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pqs/cli.hpp"
#include "pqs/criterion.hpp"
#include "pqs/fitter.hpp"
#include "pqs/penalty.hpp"
#include "pqs/simbench.hpp"

using namespace pqs;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

// ---------------------------------------------------------------------------

Verdict penalty_regularity() {
    RngStream rng(101);
    const double eps = 1e-8;
    double worst_jump = 0.0, worst_fd = 0.0, worst_ratio = 0.0;
    for (int pair = 0; pair < 50; ++pair) {
        const double lambda = 0.05 + 4.95 * rng.uniform();
        const double r = 1.1 + 4.9 * rng.uniform();
        for (const auto& pen : {PenaltySpec::scad(lambda, r), PenaltySpec::mcp(lambda, r)}) {
            std::vector<double> branches = pen.kind() == PenaltyKind::scad
                                               ? std::vector<double>{lambda, (r + 1) * lambda}
                                               : std::vector<double>{r * lambda};
            for (double b : branches)
                for (double side : {-eps, eps})
                    worst_jump = std::max(worst_jump, std::abs(pen.value(b + side) - pen.value(b)));

            for (double b = 1e-3; b < 10.0 * (r + 1) * lambda; b *= 1.07) {
                bool near = false;
                for (double br : branches) near = near || std::abs(b - br) < 1e-4;
                if (near) continue;
                const double h = 1e-6;
                const double fd = (pen.value(b + h) - pen.value(b - h)) / (2 * h);
                worst_fd = std::max(worst_fd, std::abs(fd - pen.derivative(b)));
            }
            const double beta = 1e-5;
            worst_ratio = std::max(worst_ratio, std::abs(pen.value(beta) / (lambda * beta) - 1.0));
        }
    }
    const bool pass = worst_jump <= 1e-6 && worst_fd <= 1e-6 && worst_ratio <= 1e-3;
    return {pass, "max branch jump " + fmt(worst_jump) + " (<= 1e-6), max |fd - derivative| " + fmt(worst_fd) +
                      " (<= 1e-6), max |ratio - 1| at 1e-5 " + fmt(worst_ratio) + " (<= 1e-3)"};
}

// ---------------------------------------------------------------------------

// Exact minimizer of u'Ju/2 - u'tau + lambda |u|_1 by enumerating the 27
// sign patterns, followed by a coarse grid scan that must not beat it.
Vector brute_force_u1(const Matrix& J, const Vector& tau, double lambda) {
    Vector best = Vector::Zero(3);
    double best_value = 0.0;
    for (int code = 1; code < 27; ++code) {
        std::vector<Eigen::Index> support;
        std::vector<double> signs;
        for (int j = 0, rest = code; j < 3; ++j, rest /= 3) {
            if (rest % 3 == 0) continue;
            support.push_back(j);
            signs.push_back(rest % 3 == 1 ? 1.0 : -1.0);
        }
        const auto k = static_cast<Eigen::Index>(support.size());
        Matrix A(k, k);
        Vector rhs(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            rhs[a] = tau[support[a]] - lambda * signs[a];
            for (Eigen::Index b = 0; b < k; ++b) A(a, b) = J(support[a], support[b]);
        }
        const Vector sol = A.llt().solve(rhs);
        bool consistent = true;
        for (Eigen::Index a = 0; a < k; ++a) consistent = consistent && sol[a] * signs[a] > 0;
        if (!consistent) continue;
        Vector u = Vector::Zero(3);
        for (Eigen::Index a = 0; a < k; ++a) u[support[a]] = sol[a];
        const double v = u1_objective(J, tau, lambda, u);
        if (v < best_value) {
            best_value = v;
            best = u;
        }
    }
    return best;
}

double subgradient_residual(const Matrix& J, const Vector& tau, double lambda, const Vector& u) {
    const Vector grad = J * u - tau;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        if (u[j] == 0.0)
            worst = std::max(worst, std::max(0.0, std::abs(grad[j]) - lambda));
        else
            worst = std::max(worst, std::abs(grad[j] + lambda * (u[j] > 0 ? 1.0 : -1.0)));
    }
    return worst;
}

Verdict solve_u1_oracle() {
    RngStream rng(202);
    double worst_gap = 0.0, worst_kkt = 0.0, oracle_kkt = 0.0;
    bool grid_beaten = false;
    for (int inst = 0; inst < 100; ++inst) {
        Matrix A(3, 3);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) A(i, j) = rng.normal();
        Matrix J = A * A.transpose() / 3.0;
        J.diagonal().array() += 0.1;
        Vector tau(3);
        for (Eigen::Index j = 0; j < 3; ++j) tau[j] = 2.0 * rng.normal();
        const double lambda = 2.0 * rng.uniform();

        const Vector u = solve_u1(J, tau, lambda);
        const Vector oracle = brute_force_u1(J, tau, lambda);
        const double oracle_value = u1_objective(J, tau, lambda, oracle);
        worst_gap = std::max(worst_gap, std::abs(u1_objective(J, tau, lambda, u) - oracle_value));
        worst_kkt = std::max(worst_kkt, subgradient_residual(J, tau, lambda, u));
        oracle_kkt = std::max(oracle_kkt, subgradient_residual(J, tau, lambda, oracle));

        const double step = 0.1;
        for (double a = -6; a <= 6; a += step)
            for (double b = -6; b <= 6; b += step)
                for (double c = -6; c <= 6; c += step)
                    if (u1_objective(J, tau, lambda, Vector{{a, b, c}}) < oracle_value - 1e-12) grid_beaten = true;
    }
    const bool pass = worst_gap <= 1e-8 && worst_kkt <= 1e-6 && oracle_kkt <= 1e-9 && !grid_beaten;
    return {pass, "max objective gap " + fmt(worst_gap) + " (<= 1e-8), max KKT residual " + fmt(worst_kkt) +
                      " (<= 1e-6), oracle verified" + std::string(grid_beaten ? " NO (grid point beat it)" : "")};
}

// ---------------------------------------------------------------------------

Verdict k_closed_form() {
    bool pass = true;
    std::string detail;
    for (double lambda : {0.0, 0.5, 1.0}) {
        FitResult fit;
        fit.lambda = lambda;
        fit.beta_hat = Vector{{0.0, 1.0}};
        fit.active = ActiveSetPartition::from_coefficients(fit.beta_hat);
        RngStream rng(303);
        const auto k = estimate_K(fit, Matrix::Identity(2, 2), PenaltySpec::scad(lambda, 2.7), 100000, rng);
        const double target = std::erfc(lambda / std::numbers::sqrt2);  // 2 (1 - Phi(lambda))
        const double z = (k.k_hat - target) / k.std_error;
        pass = pass && std::abs(z) <= 3.0;
        detail += "lambda " + fmt(lambda, 2) + ": K " + fmt(k.k_hat, 5) + " vs " + fmt(target, 5) + " (z " +
                  fmt(z, 2) + "); ";
    }
    detail += "|z| <= 3 required";
    return {pass, detail};
}

// ---------------------------------------------------------------------------

Verdict bias_bracket() {
    const Family family = Family::gaussian();
    const Vector star{{1.0, 1.0, 0.0}};
    const PenaltySpec pen = PenaltySpec::bridge(0.5, 0.2);
    const int reps = 2000;
    const Eigen::Index n = 2000;
    RngStream root(404);
    double sum = 0.0, sum_sq = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng = root.split(static_cast<std::uint64_t>(rep));
        const Matrix X = generate_design(3, n, rng);
        const Dataset train(X, generate_response(family, X, star, rng));
        const Dataset fresh(X, generate_response(family, X, star, rng));
        const Vector beta_hat = fit(family, train, pen).beta_hat;
        const double bracket = (log_likelihood(family, train, beta_hat) - log_likelihood(family, train, star)) -
                               (log_likelihood(family, fresh, beta_hat) - log_likelihood(family, fresh, star));
        sum += bracket;
        sum_sq += bracket * bracket;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq - reps * mean * mean) / (reps - 1.0) / reps);
    const double z = (mean - 2.0) / se;
    return {std::abs(z) <= 3.0, "mean bracket " + fmt(mean) + " (se " + fmt(se, 3) + ") vs 2, z " + fmt(z, 2) +
                                    " (|z| <= 3 required)"};
}

// ---------------------------------------------------------------------------

double sparsity_fraction(Eigen::Index n, std::uint64_t seed) {
    const Family family = Family::gaussian();
    const Vector star = true_beta(8, 2, 0.2, 1.0);
    const PenaltySpec pen = PenaltySpec::bridge(0.5, 0.2);
    RngStream root(seed);
    int exact = 0;
    for (int rep = 0; rep < 200; ++rep) {
        RngStream rng = root.split(static_cast<std::uint64_t>(rep));
        const Matrix X = generate_design(8, n, rng);
        const Dataset data(X, generate_response(family, X, star, rng));
        const Vector beta_hat = fit(family, data, pen).beta_hat;
        exact += beta_hat.tail(4).cwiseAbs().maxCoeff() == 0.0 ? 1 : 0;
    }
    return exact / 200.0;
}

Verdict sparsity() {
    const double large = sparsity_fraction(500, 505);
    const double small = sparsity_fraction(50, 506);
    return {large >= 0.9 && large > small, "fraction with all true zeros estimated exactly 0: n=500 " + fmt(large, 3) +
                                               " (>= 0.9), n=50 " + fmt(small, 3) + " (must be smaller)"};
}

// ---------------------------------------------------------------------------

bool newton_mle_oracle(const Dataset& d, Vector& beta) {
    // undamped Newton-Raphson on the logistic log-likelihood
    beta = Vector::Zero(d.p());
    for (int it = 0; it < 100; ++it) {
        const Vector eta = d.X() * beta;
        Vector mu(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        const Matrix H = d.X().transpose() * w.asDiagonal() * d.X();
        const Vector step = H.ldlt().solve(d.X().transpose() * (d.y() - mu));
        beta += step;
        if (step.cwiseAbs().maxCoeff() < 1e-13) return true;
    }
    return false;
}

Verdict zero_lambda_mle() {
    RngStream rng(707);
    double worst_linear = 0.0, worst_logistic = 0.0;
    int oracle_failures = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const Eigen::Index p = 2 + inst % 4;
        const Eigen::Index n = 40 + 5 * inst;
        Vector star(p);
        for (Eigen::Index j = 0; j < p; ++j) star[j] = 0.5 * rng.normal();

        const Matrix X = generate_design(p, n, rng);
        const Dataset lin(X, generate_response(Family::gaussian(), X, star, rng));
        const Vector normal_eq = (X.transpose() * X).ldlt().solve(X.transpose() * lin.y());
        const Dataset logi(X, generate_response(Family::logistic(), X, star, rng), Family::logistic());
        Vector newton;
        if (!newton_mle_oracle(logi, newton)) ++oracle_failures;

        for (const auto& shape : {PenaltyShape{PenaltyKind::bridge, 0.2, 3}, PenaltyShape{PenaltyKind::scad, 1, 2.7},
                                  PenaltyShape{PenaltyKind::mcp, 1, 3}}) {
            const PenaltySpec pen(shape, 0.0);
            worst_linear = std::max(
                worst_linear, (fit(Family::gaussian(), lin, pen).beta_hat - normal_eq).cwiseAbs().maxCoeff());
            worst_logistic = std::max(
                worst_logistic, (fit(Family::logistic(), logi, pen).beta_hat - newton).cwiseAbs().maxCoeff());
        }
    }
    const bool pass = worst_linear <= 1e-6 && worst_logistic <= 1e-6 && oracle_failures == 0;
    return {pass, "max deviation linear " + fmt(worst_linear) + ", logistic " + fmt(worst_logistic) +
                      " (<= 1e-6) over 20 datasets x 3 penalties"};
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict bench_determinism() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "pqs_acceptance_bench";
    fs::remove_all(base);
    auto run = [&](const std::string& name, const std::string& threads) {
        const std::string out = (base / name).string();
        const std::vector<std::string> args{"pqs",  "bench", "--reps", "5",       "--seed",
                                            "7",    "--threads", threads, "--out", out};
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream sink;
        return cli::run(static_cast<int>(argv.size()), argv.data(), sink, sink);
    };
    const int codes = run("a", "1") + run("b", "1") + run("c", "4");
    bool same = codes == 0;
    for (const char* file : {"per_rep.csv", "summary.csv"}) {
        const std::string ref = slurp(base / "a" / file);
        same = same && !ref.empty() && ref == slurp(base / "b" / file) && ref == slurp(base / "c" / file);
    }
    fs::remove_all(base);
    return {same, same ? "per_rep.csv and summary.csv byte-identical across two runs and 1 vs 4 threads"
                       : "outputs differ or a run failed"};
}

// ---------------------------------------------------------------------------

Verdict table_direction() {
    struct Row {
        const char* label;
        PenaltyShape shape;
    };
    const std::vector<Row> rows{{"bridge q=0.2", {PenaltyKind::bridge, 0.2, 3.0}},
                                {"scad", {PenaltyKind::scad, 1.0, 2.7}},
                                {"mcp", {PenaltyKind::mcp, 1.0, 3.0}}};
    bool pass = true;
    std::string detail;
    for (const auto& row : rows) {
        int wins = 0;
        std::string seeds;
        for (std::uint64_t seed : {1, 2, 3}) {
            SimulationConfig c;
            c.model = Family::logistic();
            c.penalty = row.shape;
            c.case_id = 1;
            c.beta1 = 0.5;
            c.beta2 = 1.5;
            c.design = {8, 3, 100};
            c.reps = 50;
            c.kl_copies = 500;
            c.seed = seed;
            c.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
            const auto res = run_experiment(c);
            double aic = 0.0, cv = 0.0;
            for (const auto& m : res.summary) (m.selector == Selector::aic ? aic : cv) = m.kl_mean;
            wins += aic < cv ? 1 : 0;
            seeds += " " + fmt(aic) + "/" + fmt(cv);
        }
        pass = pass && wins >= 2;
        detail += std::string(row.label) + " AIC<CV in " + std::to_string(wins) + "/3 (aic/cv:" + seeds + "); ";
    }
    detail += ">= 2/3 per penalty required";
    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"penalty regularity", penalty_regularity},
        {"solve_u1 oracle equivalence", solve_u1_oracle},
        {"K closed form", k_closed_form},
        {"bias bracket equals active-set size", bias_bracket},
        {"sparsity of the bridge estimator", sparsity},
        {"AIC beats CV in the logistic (8,3,100) case", table_direction},
        {"lambda = 0 equals the MLE", zero_lambda_mle},
        {"bench determinism", bench_determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(number)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d %s: %s [%s] (%.1f s)\n", number, v.pass ? "PASS" : "FAIL", criteria[i].first,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
