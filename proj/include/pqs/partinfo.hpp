#pragma once

// Block partitioning of an information matrix by inactive/active coordinates,
// the Schur complement of the active block, and Gaussian sampling with a
// given covariance.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "pqs/error.hpp"
#include "pqs/family.hpp"
#include "pqs/rng.hpp"

namespace pqs {

using IndexList = std::vector<Eigen::Index>;

/// Ascending inactive (zero) and active (nonzero) coordinate lists.
struct ActiveSetPartition {
    IndexList inactive;
    IndexList active;

    Eigen::Index dimension() const noexcept {
        return static_cast<Eigen::Index>(inactive.size() + active.size());
    }

    static ActiveSetPartition from_coefficients(const Vector& beta) {
        ActiveSetPartition parts;
        for (Eigen::Index j = 0; j < beta.size(); ++j)
            (beta[j] != 0.0 ? parts.active : parts.inactive).push_back(j);
        return parts;
    }

    /// Partition of {0..p-1} with the listed coordinates active.
    static ActiveSetPartition with_active(Eigen::Index p, IndexList active) {
        std::sort(active.begin(), active.end());
        active.erase(std::unique(active.begin(), active.end()), active.end());
        ActiveSetPartition parts;
        for (auto j : active)
            if (j < 0 || j >= p)
                throw Error(ErrorKind::invalid_argument, "active index out of range");
        std::size_t k = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (k < active.size() && active[k] == j)
                ++k;
            else
                parts.inactive.push_back(j);
        }
        parts.active = std::move(active);
        return parts;
    }
};

namespace detail {

inline Matrix submatrix(const Matrix& M, const IndexList& rows, const IndexList& cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = M(rows[i], cols[j]);
    return out;
}

inline Vector subvector(const Vector& v, const IndexList& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

inline double min_eigenvalue(const Matrix& M) {
    if (M.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

}  // namespace detail

inline constexpr double kJitterStart = 1e-12;
inline constexpr double kJitterMax = 1e-8;

/// Lower Cholesky factor of a symmetric PSD matrix. The diagonal is inflated
/// by 1e-12, 1e-11, ... 1e-8 (times max(1, max diagonal)) until it factors.
inline Eigen::LLT<Matrix> factor_psd(const Matrix& M, const char* what = "matrix") {
    if (M.rows() != M.cols())
        throw Error(ErrorKind::dimension_mismatch, std::string(what) + " is not square");
    Eigen::LLT<Matrix> llt(M);
    if (M.rows() == 0 || llt.info() == Eigen::Success) return llt;
    const double scale = std::max(1.0, M.diagonal().maxCoeff());
    for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0001; jitter *= 10.0) {
        Matrix shifted = M;
        shifted.diagonal().array() += jitter * scale;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) return llt;
    }
    std::ostringstream msg;
    msg << what << " is not positive definite: smallest eigenvalue " << detail::min_eigenvalue(M)
        << " < -" << kJitterMax * scale << " (jitter limit)";
    throw Error(ErrorKind::not_positive_definite, msg.str());
}

/// Blocks of J under an inactive (1) / active (2) split, with the Schur
/// complement J11 - J12 J22^{-1} J21. Coordinate lists travel with the blocks.
class PartitionedInfo {
public:
    PartitionedInfo(const Matrix& J, ActiveSetPartition parts) : parts_(std::move(parts)) {
        if (J.rows() != J.cols() || J.rows() != parts_.dimension())
            throw Error(ErrorKind::dimension_mismatch, "information matrix does not match partition");
        J11_ = detail::submatrix(J, parts_.inactive, parts_.inactive);
        J12_ = detail::submatrix(J, parts_.inactive, parts_.active);
        J21_ = detail::submatrix(J, parts_.active, parts_.inactive);
        J22_ = detail::submatrix(J, parts_.active, parts_.active);
        J22_factor_ = factor_psd(J22_, "active information block");
        if (J22_.rows() == 0) {
            J1given2_ = J11_;
            gain_ = Matrix(J11_.rows(), 0);
        } else {
            // gain = J12 J22^{-1}
            gain_ = J22_factor_.solve(J21_).transpose();
            J1given2_ = J11_ - gain_ * J21_;
            J1given2_ = 0.5 * (J1given2_ + J1given2_.transpose());
        }
    }

    const ActiveSetPartition& parts() const noexcept { return parts_; }
    const Matrix& J11() const noexcept { return J11_; }
    const Matrix& J12() const noexcept { return J12_; }
    const Matrix& J21() const noexcept { return J21_; }
    const Matrix& J22() const noexcept { return J22_; }
    const Matrix& J1given2() const noexcept { return J1given2_; }
    const Eigen::LLT<Matrix>& J22_factor() const noexcept { return J22_factor_; }

    /// J12 J22^{-1}, an (inactive x active) matrix.
    const Matrix& gain() const noexcept { return gain_; }

    Vector inactive_part(const Vector& v) const { return detail::subvector(v, parts_.inactive); }
    Vector active_part(const Vector& v) const { return detail::subvector(v, parts_.active); }

private:
    ActiveSetPartition parts_;
    Matrix J11_, J12_, J21_, J22_, J1given2_, gain_;
    Eigen::LLT<Matrix> J22_factor_;
};

inline PartitionedInfo partition(const Matrix& J, const ActiveSetPartition& parts) {
    return PartitionedInfo(J, parts);
}

/// Draws `count` rows i.i.d. from N(0, J) as L z with L the Cholesky factor.
inline Matrix sample_gaussian(const Matrix& J, Eigen::Index count, RngStream& rng) {
    if (count < 1) throw Error(ErrorKind::invalid_argument, "sample count must be at least 1");
    const Eigen::LLT<Matrix> llt = factor_psd(J, "covariance");
    const Matrix L = llt.matrixL();
    const Eigen::Index p = J.rows();
    Matrix out(count, p);
    Vector z(p);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
        out.row(i) = (L * z).transpose();
    }
    return out;
}

}  // namespace pqs
