// Copyright 2026 The qest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "qest/quantum_model.hpp"

namespace qest {

/// How regression rows are weighted.
///  - shots:            W = n
///  - inverse_variance: W = n / (p (1 - p)), p clipped to [1/(2n), 1 - 1/(2n)]
enum class WeightPolicy { shots, inverse_variance };

inline WeightPolicy parse_weight_policy(const std::string &name) {
    if (name == "shots")
        return WeightPolicy::shots;
    if (name == "invvar")
        return WeightPolicy::inverse_variance;
    fail(ErrorKind::invalid_argument, "unknown weight policy '" + name + "' (expected shots|invvar)");
}

/// Weight for `shots` copies of an outcome with (observed or predicted)
/// probability p.
inline double regression_weight(double p, std::int64_t shots, WeightPolicy policy) {
    const auto n = static_cast<double>(shots);
    if (policy == WeightPolicy::shots)
        return n;
    const double lo = 1.0 / (2.0 * n);
    const double pc = std::clamp(p, lo, 1.0 - lo);
    return n / (pc * (1.0 - pc));
}

inline double record_weight(const MeasurementRecord &r, WeightPolicy policy) {
    return regression_weight(r.frequency(), r.shots, policy);
}

/// Weighted linear model  Y = X Theta + e  with row weights W.
struct RegressionProblem {
    int dim = 0;
    RVector y;
    RMatrix x;
    RVector w;
    std::string basis_id;

    Eigen::Index rows() const { return y.size(); }
};

/// Rows Y_j = n1/n - gamma0/d, X_j = Gamma^T.
inline RegressionProblem build_regression(std::span<const MeasurementRecord> records, int d,
                                          const HermitianBasis &basis,
                                          WeightPolicy policy = WeightPolicy::shots) {
    if (records.empty())
        fail(ErrorKind::invalid_argument, "build_regression: empty record list");
    check_basis(basis, d, "build_regression");
    const auto m = static_cast<Eigen::Index>(records.size());
    const auto p = static_cast<Eigen::Index>(basis.size());
    RegressionProblem prob{d, RVector(m), RMatrix(m, p), RVector(m), basis.id};
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto &r = records[static_cast<std::size_t>(j)];
        if (r.shots < 1)
            fail(ErrorKind::invalid_argument, "build_regression: record with zero shots");
        if (r.gamma.size() != p)
            fail(ErrorKind::dimension_mismatch, "build_regression: record parameterized in a different basis");
        prob.y(j) = r.frequency() - r.gamma0 / static_cast<double>(d);
        prob.x.row(j) = r.gamma.transpose();
        prob.w(j) = record_weight(r, policy);
    }
    return prob;
}

struct LeastSquaresFit {
    ThetaVector theta;
    /// Condition number of X^T W X.
    double condition_number = 0.0;
};

namespace detail {
inline constexpr double kMaxDesignCondition = 1e12;
}

/// argmin_Theta sum_j W_j (Y_j - X_j Theta)^2, solved by an orthogonal (SVD)
/// factorization of sqrt(W) X. Rank-deficient designs are reported, never
/// pseudo-inverted.
inline LeastSquaresFit fit_weighted_ls(const RegressionProblem &prob) {
    const Eigen::Index p = prob.x.cols();
    if (prob.x.rows() != prob.y.size() || prob.w.size() != prob.y.size())
        fail(ErrorKind::dimension_mismatch, "solve_weighted_ls: inconsistent problem shape");
    if ((prob.w.array() <= 0.0).any())
        fail(ErrorKind::invalid_argument, "solve_weighted_ls: weights must be positive");
    const RVector sw = prob.w.cwiseSqrt();
    const RMatrix a = sw.asDiagonal() * prob.x;
    const RVector b = sw.cwiseProduct(prob.y);

    Eigen::BDCSVD<RMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector &sigma = svd.singularValues();
    const double smax = sigma(0);
    // cond(X^T W X) = (smax / smin)^2 <= 1e12
    const double cutoff = smax / std::sqrt(detail::kMaxDesignCondition);
    Eigen::Index null_dim = p;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff)
            --null_dim;
    if (null_dim > 0 || !(smax > 0.0))
        fail(ErrorKind::singular_design, "solve_weighted_ls: design is rank deficient (null-space dimension " +
                                             std::to_string(std::max<Eigen::Index>(null_dim, 1)) + ")");

    LeastSquaresFit fit;
    fit.theta = ThetaVector{prob.dim, svd.solve(b), prob.basis_id};
    const double ratio = smax / sigma(sigma.size() - 1);
    fit.condition_number = ratio * ratio;
    return fit;
}

inline ThetaVector solve_weighted_ls(const RegressionProblem &prob) { return fit_weighted_ls(prob).theta; }

/// Factored solver for a fixed design and fixed weights, e.g. repeated
/// experiments with the same settings under shot-proportional weighting.
/// Holds (X^T W X)^-1 X^T W, so each solve is one P x M product.
struct PreparedDesign {
    int dim = 0;
    RMatrix solver;
    double condition_number = 0.0;
    std::string basis_id;

    static PreparedDesign from(const RegressionProblem &prob) {
        const Eigen::Index p = prob.x.cols();
        if (prob.x.rows() != prob.w.size())
            fail(ErrorKind::dimension_mismatch, "PreparedDesign: inconsistent problem shape");
        if ((prob.w.array() <= 0.0).any())
            fail(ErrorKind::invalid_argument, "PreparedDesign: weights must be positive");
        const RVector sw = prob.w.cwiseSqrt();
        Eigen::BDCSVD<RMatrix> svd(sw.asDiagonal() * prob.x, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVector &sigma = svd.singularValues();
        const double cutoff = sigma(0) / std::sqrt(detail::kMaxDesignCondition);
        Eigen::Index null_dim = p;
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            if (sigma(i) > cutoff)
                --null_dim;
        if (null_dim > 0 || !(sigma(0) > 0.0))
            fail(ErrorKind::singular_design, "PreparedDesign: design is rank deficient (null-space dimension " +
                                                 std::to_string(std::max<Eigen::Index>(null_dim, 1)) + ")");
        PreparedDesign pd;
        pd.dim = prob.dim;
        pd.basis_id = prob.basis_id;
        pd.solver = svd.matrixV() * sigma.cwiseInverse().asDiagonal() * svd.matrixU().transpose() * sw.asDiagonal();
        const double ratio = sigma(0) / sigma(sigma.size() - 1);
        pd.condition_number = ratio * ratio;
        return pd;
    }

    ThetaVector solve(const RVector &y) const {
        if (y.size() != solver.cols())
            fail(ErrorKind::dimension_mismatch, "PreparedDesign::solve: expected " +
                                                    std::to_string(solver.cols()) + " rows");
        return ThetaVector{dim, solver * y, basis_id};
    }
};

// ---------------------------------------------------------------------------
// Physical projection
// ---------------------------------------------------------------------------

/// Euclidean projection of a unit-sum vector onto the probability simplex,
/// by zeroing the most negative entries in turn and spreading the deficit
/// evenly over the rest. Output keeps the input ordering.
inline RVector project_to_simplex(const RVector &values) {
    const Eigen::Index d = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    // i counts the entries still in play (the largest i values).
    Eigen::Index i = d;
    double deficit = 0.0;
    while (i > 0 && values(order[static_cast<std::size_t>(i - 1)]) + deficit / static_cast<double>(i) < 0.0) {
        deficit += values(order[static_cast<std::size_t>(i - 1)]);
        --i;
    }
    RVector out = RVector::Zero(d);
    for (Eigen::Index k = 0; k < i; ++k) {
        const auto idx = order[static_cast<std::size_t>(k)];
        out(idx) = values(idx) + deficit / static_cast<double>(i);
    }
    return out;
}

/// Closest density matrix to a Hermitian unit-trace estimate among those
/// sharing its eigenvectors.
inline DensityMatrix project_physical(const CMatrix &rho_tilde) {
    if (!is_hermitian(rho_tilde, 1e-8))
        fail(ErrorKind::contract_violation, "project_physical: input is not Hermitian");
    if (std::abs(rho_tilde.trace() - Complex(1.0, 0.0)) > 1e-8)
        fail(ErrorKind::contract_violation, "project_physical: input trace is not 1");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(rho_tilde));
    RVector lambda = es.eigenvalues();
    lambda /= lambda.sum();
    const RVector projected = project_to_simplex(lambda);
    const CMatrix &v = es.eigenvectors();
    CMatrix rho = v * projected.cast<Complex>().asDiagonal() * v.adjoint();
    return DensityMatrix(hermitian_part(rho));
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

struct TomographyDiagnostics {
    double residual_norm = 0.0;     ///< ||Y - X Theta_hat||_2
    double condition_number = 0.0;  ///< of X^T W X
    bool projection_engaged = false;
    double min_eigenvalue = 0.0;    ///< of the unprojected estimate
};

struct TomographyResult {
    DensityMatrix rho;
    ThetaVector theta;
    TomographyDiagnostics diagnostics;
};

inline TomographyResult tomography_pipeline(std::span<const MeasurementRecord> records, int d,
                                            const HermitianBasis &basis,
                                            WeightPolicy policy = WeightPolicy::shots) {
    const RegressionProblem prob = build_regression(records, d, basis, policy);
    const LeastSquaresFit fit = fit_weighted_ls(prob);
    const CMatrix rho_tilde = rho_from_theta(fit.theta, basis);

    TomographyDiagnostics diag;
    diag.residual_norm = (prob.y - prob.x * fit.theta.values).norm();
    diag.condition_number = fit.condition_number;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_tilde, Eigen::EigenvaluesOnly);
    diag.min_eigenvalue = es.eigenvalues().minCoeff();
    diag.projection_engaged = diag.min_eigenvalue < 0.0;

    return TomographyResult{project_physical(rho_tilde), fit.theta, diag};
}

/// Splits `total` copies as evenly as possible over `parts` settings, the first
/// `total % parts` settings receiving one extra copy.
inline std::vector<std::int64_t> split_copies(std::int64_t total, std::size_t parts) {
    std::vector<std::int64_t> out(parts, total / static_cast<std::int64_t>(parts));
    for (std::size_t i = 0; i < static_cast<std::size_t>(total % static_cast<std::int64_t>(parts)); ++i)
        ++out[i];
    return out;
}

/// Simulates `total_copies` spread over the POVM set, one seeded stream per POVM.
inline std::vector<MeasurementRecord> simulate_povm_set(const DensityMatrix &rho, std::span<const Povm> povms,
                                                        std::int64_t total_copies, std::uint64_t seed,
                                                        const HermitianBasis &basis) {
    const auto shares = split_copies(total_copies, povms.size());
    std::vector<MeasurementRecord> records;
    for (std::size_t i = 0; i < povms.size(); ++i) {
        if (shares[i] < 1)
            fail(ErrorKind::invalid_argument, "simulate_povm_set: fewer copies than measurement settings");
        auto rs = simulate_measurements(rho, povms[i], shares[i], derive_seed(seed, {i}), basis);
        records.insert(records.end(), std::make_move_iterator(rs.begin()), std::make_move_iterator(rs.end()));
    }
    return records;
}

} // namespace qest
