#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "pqs/error.hpp"

namespace pqs {

enum class PenaltyKind { bridge, scad, mcp };

inline std::string_view to_string(PenaltyKind kind) {
    switch (kind) {
    case PenaltyKind::bridge: return "bridge";
    case PenaltyKind::scad: return "scad";
    case PenaltyKind::mcp: return "mcp";
    }
    return "unknown";
}

inline PenaltyKind penalty_kind_from_name(std::string_view name) {
    if (name == "bridge") return PenaltyKind::bridge;
    if (name == "scad") return PenaltyKind::scad;
    if (name == "mcp") return PenaltyKind::mcp;
    throw Error(ErrorKind::invalid_argument, "unknown penalty '" + std::string(name) + "'");
}

/// Penalty family with its shape parameter but without a level; a path over
/// lambda is a PenaltyShape combined with each grid value.
struct PenaltyShape {
    PenaltyKind kind = PenaltyKind::bridge;
    double q = 1.0;  // bridge exponent
    double r = 3.0;  // scad / mcp concavity

    void validate() const {
        if (kind == PenaltyKind::bridge && !(q > 0.0 && q <= 1.0))
            throw Error(ErrorKind::invalid_argument, "q must lie in (0,1]");
        if (kind != PenaltyKind::bridge && !(r > 1.0 && std::isfinite(r)))
            throw Error(ErrorKind::invalid_argument, "r must be greater than 1");
    }
};

/// A fully specified penalty p_lambda. Bridge with q = 1 is the Lasso.
/// The scad breakpoints are lambda and (r+1) lambda; mcp flattens at r lambda.
class PenaltySpec {
public:
    PenaltySpec(PenaltyShape shape, double lambda) : shape_(shape), lambda_(lambda) {
        shape_.validate();
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_))
            throw Error(ErrorKind::invalid_argument, "lambda must be nonnegative");
    }

    static PenaltySpec bridge(double lambda, double q) {
        return PenaltySpec({PenaltyKind::bridge, q, 3.0}, lambda);
    }
    static PenaltySpec scad(double lambda, double r) {
        return PenaltySpec({PenaltyKind::scad, 1.0, r}, lambda);
    }
    static PenaltySpec mcp(double lambda, double r) {
        return PenaltySpec({PenaltyKind::mcp, 1.0, r}, lambda);
    }

    PenaltyKind kind() const noexcept { return shape_.kind; }
    const PenaltyShape& shape() const noexcept { return shape_; }
    double lambda() const noexcept { return lambda_; }
    double q() const noexcept { return shape_.q; }
    double r() const noexcept { return shape_.r; }

    PenaltySpec with_lambda(double lambda) const { return PenaltySpec(shape_, lambda); }

    /// Exponent of the |beta|^q behaviour at the origin; 1 for scad and mcp.
    double q_type() const noexcept { return shape_.kind == PenaltyKind::bridge ? shape_.q : 1.0; }

    bool is_l1_type() const noexcept { return q_type() == 1.0; }

    double value(double beta) const {
        const double b = std::abs(beta);
        const double lam = lambda_;
        const double r = shape_.r;
        if (lam == 0.0 || b == 0.0) return 0.0;
        switch (shape_.kind) {
        case PenaltyKind::bridge:
            return lam * std::pow(b, shape_.q);
        case PenaltyKind::scad:
            if (b <= lam) return lam * b;
            if (b <= (r + 1.0) * lam) return lam * b - (b - lam) * (b - lam) / (2.0 * r);
            return lam * lam * (1.0 + r / 2.0);
        case PenaltyKind::mcp:
            if (b <= r * lam) return r * lam * lam / 2.0 - (r * lam - b) * (r * lam - b) / (2.0 * r);
            return r * lam * lam / 2.0;
        }
        return 0.0;
    }

    /// dp/d|beta| for |beta| > 0, using the closed pieces at each breakpoint.
    double magnitude_derivative(double b) const {
        const double lam = lambda_;
        const double r = shape_.r;
        if (lam == 0.0) return 0.0;
        switch (shape_.kind) {
        case PenaltyKind::bridge:
            return lam * shape_.q * std::pow(b, shape_.q - 1.0);
        case PenaltyKind::scad:
            if (b <= lam) return lam;
            if (b <= (r + 1.0) * lam) return lam - (b - lam) / r;
            return 0.0;
        case PenaltyKind::mcp:
            if (b <= r * lam) return lam - b / r;
            return 0.0;
        }
        return 0.0;
    }

    /// dp/dbeta; odd in beta and undefined at the origin.
    double derivative(double beta) const {
        if (beta == 0.0)
            throw Error(ErrorKind::undefined_derivative, "penalty derivative is undefined at 0");
        const double d = magnitude_derivative(std::abs(beta));
        return beta > 0.0 ? d : -d;
    }

private:
    PenaltyShape shape_;
    double lambda_;
};

}  // namespace pqs
