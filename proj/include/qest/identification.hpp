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
#include <chrono>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "qest/lre_tomography.hpp"

namespace qest {

// Index conventions
// -----------------
// Natural operator bases are enumerated lexicographically in (row, col):
// element j = a*d + b is |a><b|. The transfer matrix Lambda has entry (m, n) =
// coefficient of rho_n in eps(rho_m). B maps vec(X) to vec(Lambda) with
// row (m, n) -> n*d^2 + m and column (j, k) -> k*d^2 + j, i.e. the same column
// stacking as `vec`.

inline Eigen::Index natural_index(Eigen::Index a, Eigen::Index b, Eigen::Index d) { return a * d + b; }

/// Coefficients of M in the natural matrix-unit basis (row-major entries).
inline CVector natural_coefficients(const CMatrix &m) {
    const CMatrix mt = m.transpose();
    return vec(mt);
}

// ---------------------------------------------------------------------------
// Bases
// ---------------------------------------------------------------------------

/// Natural matrix units together with d^2 physical probe states and the exact
/// map between them: probes[p] = sum_m probe_to_unit(p, m) * units[m].
struct NaturalBases {
    int dim = 0;
    std::vector<CMatrix> units;
    std::vector<CMatrix> probes;
    CMatrix probe_to_unit;
};

inline std::vector<CMatrix> natural_units(int d) {
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(d * d));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            CMatrix e = CMatrix::Zero(d, d);
            e(a, b) = 1.0;
            out.push_back(std::move(e));
        }
    return out;
}

/// Probes: |k><k| for each k, then for each j < k the projectors onto
/// (|j> + |k>)/sqrt(2) and (|j> + i|k>)/sqrt(2).
inline NaturalBases natural_state_basis(int d) {
    if (d < 2)
        fail(ErrorKind::invalid_dimension, "natural_state_basis: dimension must be >= 2");
    NaturalBases nb;
    nb.dim = d;
    nb.units = natural_units(d);
    for (int k = 0; k < d; ++k) {
        CMatrix p = CMatrix::Zero(d, d);
        p(k, k) = 1.0;
        nb.probes.push_back(std::move(p));
    }
    const double s = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k)
            for (const Complex phase : {Complex(1.0, 0.0), kI}) {
                CVector v = CVector::Zero(d);
                v(j) = s;
                v(k) = s * phase;
                nb.probes.push_back(v * v.adjoint());
            }
    const auto n = static_cast<Eigen::Index>(d * d);
    nb.probe_to_unit.resize(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        nb.probe_to_unit.row(p) = natural_coefficients(nb.probes[static_cast<std::size_t>(p)]).transpose();
    return nb;
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

/// Trace-preserving Kraus decomposition, sum_i A_i^dagger A_i = I.
struct KrausSet {
    int dim = 0;
    std::vector<CMatrix> operators;

    static KrausSet unitary(const CMatrix &u) {
        KrausSet k{static_cast<int>(u.rows()), {u}};
        k.validate();
        return k;
    }

    void validate() const {
        if (operators.empty())
            fail(ErrorKind::contract_violation, "KrausSet: no operators");
        CMatrix sum = CMatrix::Zero(dim, dim);
        for (const auto &a : operators) {
            if (a.rows() != dim || a.cols() != dim)
                fail(ErrorKind::dimension_mismatch, "KrausSet: operator has wrong shape");
            sum += a.adjoint() * a;
        }
        if (max_abs(sum - CMatrix::Identity(dim, dim)) > 1e-9)
            fail(ErrorKind::contract_violation, "KrausSet: completeness relation violated");
    }
};

/// sum_i A_i M A_i^dagger for any (not necessarily physical) M.
inline CMatrix apply_kraus(const KrausSet &kraus, const CMatrix &m) {
    if (m.rows() != kraus.dim || m.cols() != kraus.dim)
        fail(ErrorKind::dimension_mismatch, "apply_channel: dimension mismatch");
    CMatrix out = CMatrix::Zero(kraus.dim, kraus.dim);
    for (const auto &a : kraus.operators)
        out.noalias() += a * m * a.adjoint();
    return out;
}

inline DensityMatrix apply_channel(const KrausSet &kraus, const DensityMatrix &rho) {
    return DensityMatrix(hermitian_part(apply_kraus(kraus, rho.matrix())));
}

// ---------------------------------------------------------------------------
// B matrix
// ---------------------------------------------------------------------------

using SparseCMatrix = Eigen::SparseMatrix<Complex>;

struct BMatrix {
    int dim = 0;
    SparseCMatrix b;

    Eigen::Index row_index(Eigen::Index m, Eigen::Index n) const {
        return n * static_cast<Eigen::Index>(dim) * dim + m;
    }
    Eigen::Index col_index(Eigen::Index j, Eigen::Index k) const {
        return k * static_cast<Eigen::Index>(dim) * dim + j;
    }
    CMatrix dense() const { return CMatrix(b); }
};

/// B for natural {F_j} and natural {rho_m}. With F_j = |a><b|, rho_m = |c><e|,
/// F_k = |f><g|:  F_j rho_m F_k^dagger = delta_bc delta_eg |a><f|, so B is a
/// permutation matrix.
inline BMatrix build_B_natural(int d) {
    if (d < 2)
        fail(ErrorKind::invalid_dimension, "build_B: dimension must be >= 2");
    BMatrix bm;
    bm.dim = d;
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    std::vector<Eigen::Triplet<Complex>> entries;
    entries.reserve(static_cast<std::size_t>(d2 * d2));
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
            for (Eigen::Index f = 0; f < d; ++f)
                for (Eigen::Index g = 0; g < d; ++g) {
                    const auto j = natural_index(a, b, d);
                    const auto k = natural_index(f, g, d);
                    const auto m = natural_index(b, g, d);
                    const auto n = natural_index(a, f, d);
                    entries.emplace_back(bm.row_index(m, n), bm.col_index(j, k), Complex(1.0, 0.0));
                }
    bm.b.resize(d2 * d2, d2 * d2);
    bm.b.setFromTriplets(entries.begin(), entries.end());
    return bm;
}

/// B for arbitrary complete bases: expands F_j rho_m F_k^dagger in {rho_n} by
/// an exact linear solve. Cost grows as d^10; intended for small d.
inline BMatrix build_B(std::span<const CMatrix> f_basis, std::span<const CMatrix> rho_basis) {
    if (f_basis.empty() || f_basis.size() != rho_basis.size())
        fail(ErrorKind::invalid_basis, "build_B: bases must both have d^2 elements");
    const auto d = static_cast<int>(f_basis.front().rows());
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    if (static_cast<Eigen::Index>(f_basis.size()) != d2)
        fail(ErrorKind::invalid_basis, "build_B: bases must both have d^2 elements");
    CMatrix r(d2, d2);
    for (Eigen::Index n = 0; n < d2; ++n)
        r.col(n) = vec(rho_basis[static_cast<std::size_t>(n)]);
    Eigen::FullPivLU<CMatrix> lu(r);
    if (lu.rank() < d2)
        fail(ErrorKind::invalid_basis, "build_B: state basis is not linearly independent");

    BMatrix bm;
    bm.dim = d;
    std::vector<Eigen::Triplet<Complex>> entries;
    for (Eigen::Index j = 0; j < d2; ++j)
        for (Eigen::Index k = 0; k < d2; ++k)
            for (Eigen::Index m = 0; m < d2; ++m) {
                const CMatrix prod = f_basis[static_cast<std::size_t>(j)] * rho_basis[static_cast<std::size_t>(m)] *
                                     f_basis[static_cast<std::size_t>(k)].adjoint();
                const CVector coeff = lu.solve(vec(prod));
                for (Eigen::Index n = 0; n < d2; ++n)
                    if (std::abs(coeff(n)) > 1e-14)
                        entries.emplace_back(bm.row_index(m, n), bm.col_index(j, k), coeff(n));
            }
    bm.b.resize(d2 * d2, d2 * d2);
    bm.b.setFromTriplets(entries.begin(), entries.end());
    return bm;
}

inline double unitarity_residual(const BMatrix &bm) {
    SparseCMatrix id(bm.b.rows(), bm.b.cols());
    id.setIdentity();
    const SparseCMatrix r = SparseCMatrix(bm.b.adjoint()) * bm.b - id;
    return r.norm();
}

// ---------------------------------------------------------------------------
// Transfer matrix estimation
// ---------------------------------------------------------------------------

struct TransferMatrix {
    int dim = 0;
    CMatrix lambda; ///< (m, n): coefficient of rho_n in eps(rho_m)
    std::string rho_basis_id = "natural";
};

enum class LambdaMode { noiseless, sampled };

/// Noiseless: eps applied to each matrix unit. Sampled: each probe output is
/// reconstructed by LRE tomography from `shots_per_output` simulated copies
/// spread over the default measurement set, then mapped from the probe
/// expansion to the matrix-unit expansion.
inline TransferMatrix estimate_lambda(const KrausSet &channel, const NaturalBases &bases, std::int64_t shots_per_output,
                                      std::uint64_t seed, LambdaMode mode,
                                      WeightPolicy policy = WeightPolicy::shots) {
    channel.validate();
    const int d = channel.dim;
    if (bases.dim != d)
        fail(ErrorKind::dimension_mismatch, "estimate_lambda: basis dimension mismatch");
    const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
    TransferMatrix tm{d, CMatrix(d2, d2)};

    if (mode == LambdaMode::noiseless) {
        for (Eigen::Index m = 0; m < d2; ++m)
            tm.lambda.row(m) =
                natural_coefficients(apply_kraus(channel, bases.units[static_cast<std::size_t>(m)])).transpose();
        return tm;
    }

    if (shots_per_output < 1)
        fail(ErrorKind::invalid_argument, "estimate_lambda: shots must be >= 1 in sampled mode");
    const HermitianBasis basis = gell_mann_basis(d);
    const auto povms = measurement_catalog(d);
    CMatrix outputs(d2, d2);
    for (Eigen::Index p = 0; p < d2; ++p) {
        const DensityMatrix out =
            apply_channel(channel, DensityMatrix(bases.probes[static_cast<std::size_t>(p)]));
        const auto records =
            simulate_povm_set(out, povms, shots_per_output, derive_seed(seed, {static_cast<std::uint64_t>(p)}), basis);
        const auto rec = tomography_pipeline(records, d, basis, policy);
        outputs.row(p) = natural_coefficients(rec.rho.matrix()).transpose();
    }
    tm.lambda = bases.probe_to_unit.partialPivLu().solve(outputs);
    return tm;
}

// ---------------------------------------------------------------------------
// Process matrix
// ---------------------------------------------------------------------------

struct ProcessMatrix {
    int dim = 0;
    CMatrix x;
    std::string f_basis_id = "natural";
    double completeness_residual = 0.0; ///< ||sum_jk x_jk F_k^dag F_j - I||_F
};

/// sum_{jk} x_jk F_k^dagger F_j for natural F: F_k^dag F_j = delta_fa |g><b|
/// with j = (a, b), k = (f, g).
inline double natural_completeness_residual(const CMatrix &x, int d) {
    CMatrix sum = CMatrix::Zero(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
            for (Eigen::Index g = 0; g < d; ++g)
                sum(g, b) += x(natural_index(a, b, d), natural_index(a, g, d));
    return (sum - CMatrix::Identity(d, d)).norm();
}

namespace detail {

inline CMatrix raw_process_estimate(const BMatrix &bm, const TransferMatrix &lam) {
    if (bm.dim != lam.dim)
        fail(ErrorKind::dimension_mismatch, "process estimate: B and Lambda dimensions differ");
    const CVector rhs = vec(lam.lambda);
    CVector x;
    if (unitarity_residual(bm) <= 1e-9) {
        x = bm.b.adjoint() * rhs;
    } else {
        Eigen::SparseLU<SparseCMatrix> lu;
        lu.compute(bm.b);
        if (lu.info() != Eigen::Success)
            fail(ErrorKind::singular_design, "solve_process_matrix: B is not invertible");
        x = lu.solve(rhs);
    }
    const Eigen::Index d2 = static_cast<Eigen::Index>(lam.dim) * lam.dim;
    return hermitian_part(vec_inv(x, d2, d2));
}

} // namespace detail

/// X = vec^-1(B^-1 vec(Lambda)), Hermitized, with negative eigenvalues zeroed.
/// The trace is left alone; completeness is reported, not enforced.
inline ProcessMatrix solve_process_matrix(const BMatrix &bm, const TransferMatrix &lam) {
    const CMatrix raw = detail::raw_process_estimate(bm, lam);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(raw);
    const RVector clipped = es.eigenvalues().cwiseMax(0.0);
    CMatrix x = es.eigenvectors() * clipped.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    ProcessMatrix pm{lam.dim, hermitian_part(x)};
    pm.completeness_residual = natural_completeness_residual(pm.x, lam.dim);
    return pm;
}

// ---------------------------------------------------------------------------
// Hamiltonian identification
// ---------------------------------------------------------------------------

struct PhaseAlignment {
    CMatrix unitary;   ///< input times exp(-i beta)
    double arc = 0.0;  ///< smallest arc containing every eigenphase
};

/// Removes the global phase of U by centering its eigenphases on the smallest
/// arc that contains them all. When that arc is shorter than pi, the traceless
/// generator with this spectrum is the unique one of minimal spread.
inline PhaseAlignment align_global_phase(const CMatrix &u) {
    Eigen::ComplexSchur<CMatrix> schur(u);
    const Eigen::Index d = u.rows();
    std::vector<double> phases(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k)
        phases[static_cast<std::size_t>(k)] = std::arg(schur.matrixT()(k, k));
    std::sort(phases.begin(), phases.end());

    const double two_pi = 2.0 * std::numbers::pi;
    std::size_t gap_end = 0; // arc starts at phases[gap_end]
    double widest = phases.front() + two_pi - phases.back();
    for (std::size_t i = 1; i < phases.size(); ++i) {
        const double gap = phases[i] - phases[i - 1];
        if (gap > widest) {
            widest = gap;
            gap_end = i;
        }
    }
    const double arc = two_pi - widest;
    const double beta = phases[gap_end] + 0.5 * arc;
    return PhaseAlignment{u * std::exp(-kI * beta), arc};
}

struct HamiltonianEstimate {
    CMatrix h;
    CMatrix g;                       ///< fitted unitary, exp(-i H t) = G^T up to phase
    double rank1_dominance = 0.0;    ///< lambda_1 / sum of positive eigenvalues of D
    double unitary_fit_residual = 0.0; ///< ||G - S||_F
    double phase_arc = 0.0;          ///< eigenphase spread of G^T
    bool branch_ambiguous = false;
};

/// Two-step fit: D = vec^-1(B^dag vec(Lambda)); S from the top eigenpair of D
/// (best rank-1 fit vec(S) vec(S)^dag); G = nearest unitary to S; H from
/// exp(-i H t) = G^T with the traceless convention.
inline HamiltonianEstimate identify_hamiltonian(const TransferMatrix &lam, const BMatrix &bm, double t) {
    if (!(t > 0.0))
        fail(ErrorKind::invalid_argument, "identify_hamiltonian: time must be positive");
    const int d = lam.dim;
    const CMatrix dhat = detail::raw_process_estimate(bm, lam);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(dhat);
    const RVector &ev = es.eigenvalues();
    const Eigen::Index top = ev.size() - 1;
    const double lambda1 = ev(top);
    if (!(lambda1 > 0.0))
        fail(ErrorKind::degenerate_data, "identify_hamiltonian: process estimate has no positive eigenvalue");

    HamiltonianEstimate est;
    est.rank1_dominance = lambda1 / ev.cwiseMax(0.0).sum();
    const CMatrix s = vec_inv(CVector(std::sqrt(lambda1) * es.eigenvectors().col(top)),
                              static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    est.g = nearest_unitary(s);
    est.unitary_fit_residual = (est.g - s).norm();

    const PhaseAlignment aligned = align_global_phase(est.g.transpose());
    est.phase_arc = aligned.arc;
    const UnitaryLog log = unitary_log(aligned.unitary, t);
    est.h = log.generator;
    est.branch_ambiguous = log.branch_ambiguous || aligned.arc >= std::numbers::pi - 1e-6;
    return est;
}

// ---------------------------------------------------------------------------
// Complexity probes
// ---------------------------------------------------------------------------

struct ComplexityRow {
    int dim = 0;
    double median_seconds = 0.0;
    double min_seconds = 0.0;
    double max_seconds = 0.0;
};

struct ComplexityTable {
    std::vector<ComplexityRow> rows;
    double slope = 0.0; ///< least-squares slope of log(time) against log(d)
};

inline double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Per-call time of `run(d)`: after one warm-up call, each repetition repeats
/// the call until `min_seconds` have elapsed and records the average. The
/// log-log slope is fitted to the medians.
template <class Fn>
ComplexityTable complexity_probe(std::span<const int> dims, int repetitions, Fn &&run, double min_seconds = 0.02) {
    using clock = std::chrono::steady_clock;
    ComplexityTable table;
    std::vector<double> xs, ys;
    for (int d : dims) {
        run(d);
        std::vector<double> times;
        for (int r = 0; r < std::max(1, repetitions); ++r) {
            std::int64_t calls = 0;
            double elapsed = 0.0;
            const auto start = clock::now();
            do {
                run(d);
                ++calls;
                elapsed = std::chrono::duration<double>(clock::now() - start).count();
            } while (elapsed < min_seconds);
            times.push_back(elapsed / static_cast<double>(calls));
        }
        std::sort(times.begin(), times.end());
        const ComplexityRow row{d, times[times.size() / 2], times.front(), times.back()};
        table.rows.push_back(row);
        xs.push_back(d);
        ys.push_back(row.median_seconds);
    }
    table.slope = loglog_slope(xs, ys);
    return table;
}

} // namespace qest
