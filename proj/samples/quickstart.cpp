// Simulate a sparse logistic model, fit a SCAD path and pick lambda by AIC.

#include <cstdio>

#include "pqs/criterion.hpp"
#include "pqs/fitter.hpp"
#include "pqs/simbench.hpp"

int main() {
    using namespace pqs;

    RngStream rng(2024);
    const Family family = Family::logistic();
    const Vector truth = true_beta(8, 2, 0.5, 1.5);
    Matrix X = generate_design(8, 200, rng);
    Vector y = generate_response(family, X, truth, rng);
    const Dataset data(std::move(X), std::move(y), family);

    const PenaltyShape scad{PenaltyKind::scad, 1.0, 2.7};
    const auto grid = default_lambda_grid(family, data, 30);
    const auto path = fit_path(family, data, scad, grid);
    const auto scores = aic_path(path, family, data, scad, 1000, rng.split(1));

    std::vector<std::pair<double, double>> scored;
    std::printf("%10s %8s %6s %8s %10s\n", "lambda", "loglik", "active", "K", "AIC");
    for (const auto& s : scores) {
        std::printf("%10.5f %8.3f %6ld %8.4f %10.4f\n", s.lambda, s.loglik, static_cast<long>(s.active_count),
                    s.k_hat, s.aic);
        scored.emplace_back(s.lambda, s.aic);
    }

    const double best = select_lambda(scored);
    for (const auto& f : path) {
        if (f.lambda != best) continue;
        std::printf("\nselected lambda %.5f\n%6s %10s %10s\n", best, "j", "estimate", "truth");
        for (Eigen::Index j = 0; j < f.beta_hat.size(); ++j)
            std::printf("%6ld %10.4f %10.4f\n", static_cast<long>(j), f.beta_hat[j], truth[j]);
    }
}
