#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pqs/penalty.hpp"
#include "pqs/rng.hpp"

using namespace pqs;

namespace {

std::vector<PenaltySpec> random_specs(int count, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<PenaltySpec> out;
    for (int i = 0; i < count; ++i) {
        const double lambda = 0.5 + 3.0 * rng.uniform();
        const double r = 1.05 + 5.0 * rng.uniform();
        const double q = 0.05 + 0.95 * rng.uniform();
        out.push_back(PenaltySpec::scad(lambda, r));
        out.push_back(PenaltySpec::mcp(lambda, r));
        out.push_back(PenaltySpec::bridge(lambda, q));
    }
    return out;
}

double fd_derivative(const PenaltySpec& s, double b, double h = 1e-6) {
    return (s.value(b + h) - s.value(b - h)) / (2 * h);
}

}  // namespace

TEST(Penalty, ValueExamples) {
    for (const auto& s : {PenaltySpec::bridge(1, 0.5), PenaltySpec::scad(1, 2), PenaltySpec::mcp(1, 2)})
        EXPECT_EQ(s.value(0.0), 0.0);
    EXPECT_DOUBLE_EQ(PenaltySpec::bridge(1, 0.5).value(4.0), 2.0);

    // scad at the (r+1) lambda boundary: middle formula and constant agree
    const double middle = 1.0 * 3.0 - (3.0 - 1.0) * (3.0 - 1.0) / (2.0 * 2.0);
    const double outer = 1.0 * (1.0 + 2.0 / 2.0);
    EXPECT_DOUBLE_EQ(middle, 2.0);
    EXPECT_DOUBLE_EQ(outer, 2.0);
    EXPECT_DOUBLE_EQ(PenaltySpec::scad(1, 2).value(3.0), 2.0);
    EXPECT_DOUBLE_EQ(PenaltySpec::scad(1, 2).value(3.0 + 1e-9), 2.0);

    EXPECT_DOUBLE_EQ(PenaltySpec::mcp(1, 2).value(5.0), 1.0);
}

TEST(Penalty, DerivativeExamples) {
    EXPECT_DOUBLE_EQ(PenaltySpec::bridge(0.7, 1.0).derivative(2.5), 0.7);
    EXPECT_DOUBLE_EQ(PenaltySpec::scad(1, 2).derivative(1.5), 0.75);
    EXPECT_NEAR(fd_derivative(PenaltySpec::scad(1, 2), 1.5), 0.75, 1e-8);
    EXPECT_DOUBLE_EQ(PenaltySpec::mcp(1, 2).derivative(1.0), 0.5);
    EXPECT_NEAR(fd_derivative(PenaltySpec::mcp(1, 2), 1.0), 0.5, 1e-8);
    EXPECT_DOUBLE_EQ(PenaltySpec::mcp(1, 2).derivative(3.0), 0.0);
    EXPECT_NEAR(fd_derivative(PenaltySpec::mcp(1, 2), 3.0), 0.0, 1e-8);
}

TEST(Penalty, DerivativeAtOriginIsAnError) {
    try {
        PenaltySpec::scad(1, 2).derivative(0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::undefined_derivative);
    }
}

TEST(Penalty, BranchPointConvention) {
    // closed on the left: the piece whose indicator includes the point wins
    const auto scad = PenaltySpec::scad(1, 2);
    EXPECT_DOUBLE_EQ(scad.derivative(1.0), 1.0);
    EXPECT_DOUBLE_EQ(scad.derivative(3.0), 0.0);
    EXPECT_DOUBLE_EQ(PenaltySpec::mcp(1, 2).derivative(2.0), 0.0);
}

TEST(Penalty, QType) {
    EXPECT_DOUBLE_EQ(PenaltySpec::bridge(1, 0.2).q_type(), 0.2);
    EXPECT_DOUBLE_EQ(PenaltySpec::scad(0.3, 2.7).q_type(), 1.0);
    EXPECT_DOUBLE_EQ(PenaltySpec::mcp(5.0, 1.5).q_type(), 1.0);
    EXPECT_TRUE(PenaltySpec::bridge(1, 1.0).is_l1_type());
    EXPECT_FALSE(PenaltySpec::bridge(1, 0.9).is_l1_type());
}

TEST(Penalty, InvalidParameters) {
    EXPECT_THROW(PenaltySpec::bridge(-1.0, 0.5), Error);
    EXPECT_THROW(PenaltySpec::bridge(1.0, 0.0), Error);
    EXPECT_THROW(PenaltySpec::bridge(1.0, 1.5), Error);
    EXPECT_THROW(PenaltySpec::scad(1.0, 1.0), Error);
    EXPECT_THROW(PenaltySpec::mcp(1.0, 0.5), Error);
    EXPECT_THROW(PenaltySpec::mcp(std::nan(""), 2.0), Error);
}

TEST(Penalty, ZeroLambdaIsIdenticallyZero) {
    for (const auto& s : {PenaltySpec::bridge(0, 0.3), PenaltySpec::scad(0, 2), PenaltySpec::mcp(0, 2)}) {
        for (double b : {-3.0, -0.1, 0.5, 10.0}) {
            EXPECT_EQ(s.value(b), 0.0);
            EXPECT_EQ(s.derivative(b), 0.0);
        }
    }
}

TEST(Penalty, LassoMatchesBridgeQOne) {
    const auto lasso = PenaltySpec::bridge(0.8, 1.0);
    for (double b : {-2.0, -0.3, 0.1, 4.0}) EXPECT_DOUBLE_EQ(lasso.value(b), 0.8 * std::abs(b));
}

TEST(PenaltyProperties, SymmetryAndOddDerivative) {
    for (const auto& s : random_specs(50, 21)) {
        for (double b = 0.01; b < 20.0; b *= 1.37) {
            EXPECT_EQ(s.value(b), s.value(-b));
            EXPECT_EQ(s.derivative(b), -s.derivative(-b));
        }
    }
}

TEST(PenaltyProperties, NonDecreasingInMagnitude) {
    for (const auto& s : random_specs(50, 22)) {
        double prev = 0.0;
        for (int i = 1; i <= 4000; ++i) {
            const double v = s.value(i * 0.005);
            EXPECT_GE(v, prev);
            prev = v;
        }
    }
}

TEST(PenaltyProperties, ContinuousAtBranchPoints) {
    const double eps = 1e-8;
    for (const auto& s : random_specs(50, 23)) {
        std::vector<double> points;
        if (s.kind() == PenaltyKind::scad) points = {s.lambda(), (s.r() + 1) * s.lambda()};
        if (s.kind() == PenaltyKind::mcp) points = {s.r() * s.lambda()};
        for (double b : points) {
            EXPECT_LE(std::abs(s.value(b + eps) - s.value(b)), 1e-6);
            EXPECT_LE(std::abs(s.value(b - eps) - s.value(b)), 1e-6);
        }
    }
}

TEST(PenaltyProperties, OriginLimitRatio) {
    for (const auto& s : random_specs(50, 24)) {
        for (double b : {1e-3, 1e-5, 1e-7}) {
            const double ratio = s.value(b) / std::pow(b, s.q_type());
            // scad is exactly linear near 0; mcp deviates by b / (2r)
            EXPECT_NEAR(ratio / s.lambda(), 1.0, 1e-3) << to_string(s.kind()) << " b=" << b;
        }
    }
}

TEST(PenaltyProperties, DerivativeMatchesFiniteDifferences) {
    for (const auto& s : random_specs(50, 25)) {
        for (double b = 0.013; b < 25.0; b *= 1.29) {
            const bool near_branch =
                (s.kind() == PenaltyKind::scad &&
                 (std::abs(b - s.lambda()) < 1e-4 || std::abs(b - (s.r() + 1) * s.lambda()) < 1e-4)) ||
                (s.kind() == PenaltyKind::mcp && std::abs(b - s.r() * s.lambda()) < 1e-4);
            if (near_branch) continue;
            EXPECT_NEAR(s.derivative(b), fd_derivative(s, b), 1e-6 * std::max(1.0, std::abs(s.derivative(b))));
        }
    }
}
