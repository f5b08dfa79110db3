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
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qest/errors.hpp"

namespace qest {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

/// Largest entrywise modulus, used to scale tolerances for large operators.
inline double max_abs(const CMatrix &a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline bool is_square(const CMatrix &a) { return a.rows() == a.cols(); }

inline bool is_hermitian(const CMatrix &a, double tol) {
    if (!is_square(a))
        return false;
    return max_abs(a - a.adjoint()) <= tol * std::max(1.0, max_abs(a));
}

inline bool is_unitary(const CMatrix &a, double tol) {
    if (!is_square(a))
        return false;
    const CMatrix residual = a.adjoint() * a - CMatrix::Identity(a.rows(), a.cols());
    return max_abs(residual) <= tol;
}

inline bool is_psd(const CMatrix &a, double tol) {
    if (!is_hermitian(a, tol))
        return false;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

inline CMatrix hermitian_part(const CMatrix &a) { return 0.5 * (a + a.adjoint()); }

/// Tr(A B) without forming the product.
inline Complex trace_product(const CMatrix &a, const CMatrix &b) {
    return a.cwiseProduct(b.transpose()).sum();
}

// ---------------------------------------------------------------------------
// Hermitian operator basis
// ---------------------------------------------------------------------------

/// Traceless orthonormal Hermitian basis {Omega_i}, i = 1..d^2-1, with
/// Tr(Omega_i Omega_j) = delta_ij.
struct HermitianBasis {
    int dim = 0;
    std::vector<CMatrix> elements;
    std::string id;

    std::size_t size() const { return elements.size(); }
    const CMatrix &operator[](std::size_t i) const { return elements[i]; }
};

/// Generalized Gell-Mann basis for dimension d.
///
/// Ordering: the d(d-1)/2 symmetric matrices (|j><k| + |k><j|)/sqrt(2), then the
/// d(d-1)/2 antisymmetric matrices (-i|j><k| + i|k><j|)/sqrt(2), each block
/// lexicographic in (j, k) with j < k, then the d-1 diagonal matrices
/// diag(1, ..., 1, -l, 0, ...)/sqrt(l(l+1)) for l = 1..d-1. For d = 2 this is
/// (sigma_x, sigma_y, sigma_z)/sqrt(2).
inline HermitianBasis gell_mann_basis(int d) {
    if (d < 2)
        fail(ErrorKind::invalid_dimension, "gell_mann_basis: dimension must be >= 2, got " + std::to_string(d));
    HermitianBasis basis;
    basis.dim = d;
    basis.id = "gell-mann-" + std::to_string(d);
    basis.elements.reserve(static_cast<std::size_t>(d * d - 1));
    const double s = 1.0 / std::sqrt(2.0);

    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            CMatrix m = CMatrix::Zero(d, d);
            m(j, k) = s;
            m(k, j) = s;
            basis.elements.push_back(std::move(m));
        }
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            CMatrix m = CMatrix::Zero(d, d);
            m(j, k) = -kI * s;
            m(k, j) = kI * s;
            basis.elements.push_back(std::move(m));
        }
    }
    for (int l = 1; l < d; ++l) {
        CMatrix m = CMatrix::Zero(d, d);
        const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int i = 0; i < l; ++i)
            m(i, i) = norm;
        m(l, l) = -static_cast<double>(l) * norm;
        basis.elements.push_back(std::move(m));
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Vectorization (column stacking)
// ---------------------------------------------------------------------------

/// vec(A) = [A11, A21, ..., Am1, A12, ..., Amn]^T.
inline CVector vec(const CMatrix &a) {
    return Eigen::Map<const CVector>(a.data(), a.size());
}

inline CMatrix vec_inv(const CVector &v, Eigen::Index rows, Eigen::Index cols) {
    if (rows <= 0 || cols <= 0 || v.size() != rows * cols)
        fail(ErrorKind::dimension_mismatch, "vec_inv: vector length " + std::to_string(v.size()) +
                                                " does not match " + std::to_string(rows) + "x" +
                                                std::to_string(cols));
    return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

/// Inverse of vec for a square result.
inline CMatrix vec_inv(const CVector &v) {
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    return vec_inv(v, n, n);
}

// ---------------------------------------------------------------------------
// Exponential / logarithm / polar factor
// ---------------------------------------------------------------------------

/// exp(-i s H) for Hermitian H, via the spectral decomposition of H.
inline CMatrix herm_expm(const CMatrix &h, double s) {
    if (!is_hermitian(h, 1e-10))
        fail(ErrorKind::contract_violation, "herm_expm: generator is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const RVector &lambda = es.eigenvalues();
    CVector phases(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        phases(i) = std::exp(-kI * (s * lambda(i)));
    const CMatrix &v = es.eigenvectors();
    return v * phases.asDiagonal() * v.adjoint();
}

/// Polar factor U V^dagger of S = U Sigma V^dagger: the unitary closest to S in
/// Frobenius norm.
inline CMatrix nearest_unitary(const CMatrix &s) {
    if (!is_square(s))
        fail(ErrorKind::dimension_mismatch, "nearest_unitary: matrix must be square");
    Eigen::JacobiSVD<CMatrix> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() <= 1e-12)
        fail(ErrorKind::ambiguity, "nearest_unitary: rank-deficient input, polar factor is not unique");
    return svd.matrixU() * svd.matrixV().adjoint();
}

struct UnitaryLog {
    CMatrix generator;
    /// Set when an eigenphase sits within 1e-6 of the branch cut at pi.
    bool branch_ambiguous = false;
};

/// Traceless Hermitian H with exp(-i t H) equal to U up to a global phase,
/// taking eigenphases of U in (-pi, pi]. Unique recovery needs ||H||_2 t < pi.
///
/// U is normal, so its Schur form is diagonal and the Schur vectors are an
/// orthonormal eigenbasis even for degenerate spectra.
inline UnitaryLog unitary_log(const CMatrix &u, double t) {
    if (!(t > 0.0))
        fail(ErrorKind::invalid_argument, "unitary_log: time must be positive");
    if (!is_unitary(u, 1e-8))
        fail(ErrorKind::contract_violation, "unitary_log: input is not unitary");
    const Eigen::Index d = u.rows();
    Eigen::ComplexSchur<CMatrix> schur(u);
    const CMatrix &z = schur.matrixU();
    const CMatrix &tri = schur.matrixT();

    UnitaryLog out;
    RVector energies(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        double phi = std::arg(tri(k, k));
        if (phi <= -std::numbers::pi)
            phi += 2.0 * std::numbers::pi;
        if (std::numbers::pi - std::abs(phi) < 1e-6)
            out.branch_ambiguous = true;
        energies(k) = -phi / t;
    }
    CMatrix h = z * energies.cast<Complex>().asDiagonal() * z.adjoint();
    h = hermitian_part(h);
    const Complex shift = h.trace() / static_cast<double>(d);
    h -= shift.real() * CMatrix::Identity(d, d);
    out.generator = std::move(h);
    return out;
}

// ---------------------------------------------------------------------------
// Random matrices (test fixtures and experiment ensembles)
// ---------------------------------------------------------------------------

/// Complex Ginibre matrix with i.i.d. standard normal real and imaginary parts.
template <class Rng> CMatrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    CMatrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            g(i, j) = Complex(re, im);
        }
    return g;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
template <class Rng> CMatrix random_unitary(Eigen::Index d, Rng &rng) {
    const CMatrix g = ginibre(d, d, rng);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < d; ++k) {
        const Complex rkk = r(k, k);
        const double mag = std::abs(rkk);
        if (mag > 0.0)
            q.col(k) *= rkk / mag;
    }
    return q;
}

/// Random Hermitian matrix (GUE-like), not normalized.
template <class Rng> CMatrix random_hermitian(Eigen::Index d, Rng &rng) {
    return hermitian_part(ginibre(d, d, rng));
}

/// Random traceless Hermitian matrix rescaled to spectral norm `norm`.
template <class Rng> CMatrix random_traceless_hermitian(Eigen::Index d, double norm, Rng &rng) {
    CMatrix h = random_hermitian(d, rng);
    h -= (h.trace().real() / static_cast<double>(d)) * CMatrix::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    const double spectral = es.eigenvalues().cwiseAbs().maxCoeff();
    return h * (norm / spectral);
}

} // namespace qest
