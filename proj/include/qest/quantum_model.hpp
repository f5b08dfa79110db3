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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "qest/linalg.hpp"
#include "qest/seed.hpp"

namespace qest {

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Hermitian, positive semidefinite, unit-trace matrix. Construction validates.
class DensityMatrix {
  public:
    static constexpr double kTolerance = 1e-10;

    DensityMatrix() = default;

    explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {
        if (!is_square(m_) || m_.rows() < 1)
            fail(ErrorKind::dimension_mismatch, "DensityMatrix: matrix must be square");
        if (!is_hermitian(m_, kTolerance))
            fail(ErrorKind::contract_violation, "DensityMatrix: matrix is not Hermitian");
        if (std::abs(m_.trace() - Complex(1.0, 0.0)) > kTolerance)
            fail(ErrorKind::contract_violation, "DensityMatrix: trace is not 1");
        Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kTolerance)
            fail(ErrorKind::contract_violation, "DensityMatrix: matrix is not positive semidefinite");
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMatrix &matrix() const { return m_; }

    double purity() const { return (m_ * m_).trace().real(); }

  private:
    CMatrix m_;
};

class PureState {
  public:
    PureState() = default;

    explicit PureState(CVector amplitudes) : psi_(std::move(amplitudes)) {
        if (psi_.size() < 1)
            fail(ErrorKind::dimension_mismatch, "PureState: empty amplitude vector");
        if (std::abs(psi_.norm() - 1.0) > 1e-10)
            fail(ErrorKind::contract_violation, "PureState: amplitudes are not unit norm");
    }

    /// Computational basis state |k>.
    static PureState basis(int d, int k) {
        if (k < 0 || k >= d)
            fail(ErrorKind::invalid_argument, "PureState::basis: index out of range");
        CVector v = CVector::Zero(d);
        v(k) = 1.0;
        return PureState(std::move(v));
    }

    /// Normalizes before validating.
    static PureState normalized(const CVector &v) {
        const double n = v.norm();
        if (!(n > 0.0))
            fail(ErrorKind::invalid_argument, "PureState::normalized: zero vector");
        return PureState(v / n);
    }

    int dim() const { return static_cast<int>(psi_.size()); }
    const CVector &amplitudes() const { return psi_; }

    DensityMatrix density() const { return DensityMatrix(psi_ * psi_.adjoint()); }

  private:
    CVector psi_;
};

// ---------------------------------------------------------------------------
// Theta parameterization  rho = I/d + sum_i theta_i Omega_i
// ---------------------------------------------------------------------------

struct ThetaVector {
    int dim = 0;
    RVector values;
    std::string basis_id;
};

inline void check_basis(const HermitianBasis &basis, int d, const char *where) {
    if (basis.dim != d || static_cast<int>(basis.size()) != d * d - 1)
        fail(ErrorKind::dimension_mismatch, std::string(where) + ": basis dimension " +
                                                std::to_string(basis.dim) + " does not match " +
                                                std::to_string(d));
}

/// Hermitian with unit trace by construction; not necessarily PSD.
inline CMatrix rho_from_theta(const ThetaVector &theta, const HermitianBasis &basis) {
    check_basis(basis, theta.dim, "rho_from_theta");
    if (theta.values.size() != static_cast<Eigen::Index>(basis.size()) || theta.basis_id != basis.id)
        fail(ErrorKind::dimension_mismatch, "rho_from_theta: theta does not belong to basis " + basis.id);
    const int d = theta.dim;
    CMatrix rho = CMatrix::Identity(d, d) / static_cast<double>(d);
    for (std::size_t i = 0; i < basis.size(); ++i)
        rho += theta.values(static_cast<Eigen::Index>(i)) * basis[i];
    return rho;
}

/// theta_i = Tr(rho Omega_i); accepts any square matrix of the right size.
inline ThetaVector theta_from_matrix(const CMatrix &rho, const HermitianBasis &basis) {
    const int d = static_cast<int>(rho.rows());
    if (!is_square(rho))
        fail(ErrorKind::dimension_mismatch, "theta_from_rho: matrix is not square");
    check_basis(basis, d, "theta_from_rho");
    ThetaVector theta{d, RVector(static_cast<Eigen::Index>(basis.size())), basis.id};
    for (std::size_t i = 0; i < basis.size(); ++i)
        theta.values(static_cast<Eigen::Index>(i)) = trace_product(rho, basis[i]).real();
    return theta;
}

inline ThetaVector theta_from_rho(const DensityMatrix &rho, const HermitianBasis &basis) {
    return theta_from_matrix(rho.matrix(), basis);
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

struct Povm {
    int dim = 0;
    std::vector<CMatrix> elements;
    std::string label;

    std::size_t size() const { return elements.size(); }
};

/// Throws contract_violation unless every element is Hermitian PSD and the
/// elements sum to the identity.
inline void validate_povm(const Povm &povm) {
    if (povm.elements.empty())
        fail(ErrorKind::contract_violation, "POVM " + povm.label + " has no elements");
    CMatrix sum = CMatrix::Zero(povm.dim, povm.dim);
    for (const auto &e : povm.elements) {
        if (e.rows() != povm.dim || e.cols() != povm.dim)
            fail(ErrorKind::dimension_mismatch, "POVM " + povm.label + ": element has wrong shape");
        if (!is_psd(e, 1e-10))
            fail(ErrorKind::contract_violation, "POVM " + povm.label + ": element is not Hermitian PSD");
        sum += e;
    }
    if (max_abs(sum - CMatrix::Identity(povm.dim, povm.dim)) > 1e-9)
        fail(ErrorKind::contract_violation, "POVM " + povm.label + ": elements do not sum to identity");
}

/// One POVM element's tally. gamma0 = Tr(E), gamma_i = Tr(E Omega_i).
struct MeasurementRecord {
    std::string povm;
    std::size_t element = 0;
    std::int64_t shots = 0;
    std::int64_t successes = 0;
    double gamma0 = 0.0;
    RVector gamma;
    /// Set for noiseless records; overrides successes/shots.
    std::optional<double> exact_probability;

    double frequency() const {
        if (exact_probability)
            return *exact_probability;
        return static_cast<double>(successes) / static_cast<double>(shots);
    }
};

/// Parameterization (gamma0, Gamma) of an operator against the basis.
inline std::pair<double, RVector> operator_coordinates(const CMatrix &e, const HermitianBasis &basis) {
    RVector gamma(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i)
        gamma(static_cast<Eigen::Index>(i)) = trace_product(e, basis[i]).real();
    return {e.trace().real(), std::move(gamma)};
}

inline MeasurementRecord make_record(const Povm &povm, std::size_t element, std::int64_t shots,
                                     std::int64_t successes, const HermitianBasis &basis) {
    check_basis(basis, povm.dim, "make_record");
    if (element >= povm.size())
        fail(ErrorKind::invalid_argument, "make_record: element index out of range for " + povm.label);
    if (shots < 1 || successes < 0 || successes > shots)
        fail(ErrorKind::invalid_argument, "make_record: need 0 <= successes <= shots and shots >= 1");
    auto [g0, g] = operator_coordinates(povm.elements[element], basis);
    return MeasurementRecord{povm.label, element, shots, successes, g0, std::move(g), std::nullopt};
}

/// Born-rule probabilities Tr(rho P_i), clamped to [0, 1].
inline std::vector<double> born_probabilities(const DensityMatrix &rho, const Povm &povm) {
    if (rho.dim() != povm.dim)
        fail(ErrorKind::dimension_mismatch, "born_probabilities: state dimension " +
                                                std::to_string(rho.dim()) + " vs POVM dimension " +
                                                std::to_string(povm.dim));
    std::vector<double> p;
    p.reserve(povm.size());
    for (const auto &e : povm.elements)
        p.push_back(std::clamp(trace_product(rho.matrix(), e).real(), 0.0, 1.0));
    return p;
}

/// Multinomial counts over the POVM outcomes, drawn as a chain of conditional
/// binomials from a generator seeded with `seed`.
inline std::vector<std::int64_t> sample_counts(std::span<const double> probabilities, std::int64_t shots,
                                               std::uint64_t seed) {
    Rng rng(seed);
    double total = 0.0;
    for (double p : probabilities)
        total += p;
    std::vector<std::int64_t> counts(probabilities.size(), 0);
    std::int64_t remaining = shots;
    double mass_left = total;
    for (std::size_t j = 0; j < probabilities.size() && remaining > 0; ++j) {
        if (j + 1 == probabilities.size()) {
            counts[j] = remaining;
            break;
        }
        const double q = mass_left > 0.0 ? std::clamp(probabilities[j] / mass_left, 0.0, 1.0) : 0.0;
        std::int64_t c = 0;
        if (q >= 1.0)
            c = remaining;
        else if (q > 0.0)
            c = std::binomial_distribution<std::int64_t>(remaining, q)(rng);
        counts[j] = c;
        remaining -= c;
        mass_left -= probabilities[j];
    }
    return counts;
}

inline std::vector<MeasurementRecord> simulate_measurements(const DensityMatrix &rho, const Povm &povm,
                                                            std::int64_t shots, std::uint64_t seed,
                                                            const HermitianBasis &basis) {
    if (shots < 1)
        fail(ErrorKind::invalid_argument, "simulate_measurements: shots must be >= 1");
    const auto p = born_probabilities(rho, povm);
    const auto counts = sample_counts(p, shots, seed);
    std::vector<MeasurementRecord> records;
    records.reserve(povm.size());
    for (std::size_t j = 0; j < povm.size(); ++j)
        records.push_back(make_record(povm, j, shots, counts[j], basis));
    return records;
}

/// Records whose frequency is the exact Born probability. `shots` is kept as
/// the nominal weight; `successes` holds the rounded tally for serialization.
inline std::vector<MeasurementRecord> noiseless_records(const DensityMatrix &rho, const Povm &povm,
                                                        std::int64_t shots, const HermitianBasis &basis) {
    if (shots < 1)
        fail(ErrorKind::invalid_argument, "noiseless_records: shots must be >= 1");
    const auto p = born_probabilities(rho, povm);
    std::vector<MeasurementRecord> records;
    records.reserve(povm.size());
    for (std::size_t j = 0; j < povm.size(); ++j) {
        const auto tally = std::llround(p[j] * static_cast<double>(shots));
        auto r = make_record(povm, j, shots, std::clamp<std::int64_t>(tally, 0, shots), basis);
        r.exact_probability = p[j];
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Standard measurement sets
// ---------------------------------------------------------------------------

namespace detail {

inline int qubit_count(int d) {
    int q = 0;
    while ((1 << q) < d)
        ++q;
    return (1 << q) == d ? q : -1;
}

/// Eigenprojectors (+1 first) of sigma_x, sigma_y, sigma_z.
inline std::array<CMatrix, 2> pauli_projectors(char axis) {
    CVector plus(2), minus(2);
    const double s = 1.0 / std::sqrt(2.0);
    switch (axis) {
    case 'x':
        plus << s, s;
        minus << s, -s;
        break;
    case 'y':
        plus << s, kI * s;
        minus << s, -kI * s;
        break;
    default:
        plus << 1.0, 0.0;
        minus << 0.0, 1.0;
        break;
    }
    return {plus * plus.adjoint(), minus * minus.adjoint()};
}

} // namespace detail

/// Cube measurement bases: the sigma_x, sigma_y, sigma_z eigenbases and, for
/// q qubits, all 3^q tensor products. Labels are axis strings such as "xz"
/// (first qubit first); element k has outcome bits of k with the first qubit
/// most significant, bit 0 meaning the +1 eigenvector.
inline std::vector<Povm> cube_povms(int d) {
    const int q = detail::qubit_count(d);
    if (q < 1 || q > 4)
        fail(ErrorKind::unsupported, "cube_povms: dimension " + std::to_string(d) +
                                         " is not 2^q with 1 <= q <= 4");
    static constexpr char axes[3] = {'x', 'y', 'z'};
    int combos = 1;
    for (int i = 0; i < q; ++i)
        combos *= 3;
    std::vector<Povm> out;
    out.reserve(static_cast<std::size_t>(combos));
    for (int c = 0; c < combos; ++c) {
        std::string label(static_cast<std::size_t>(q), 'x');
        int rest = c;
        for (int i = q - 1; i >= 0; --i) {
            label[static_cast<std::size_t>(i)] = axes[rest % 3];
            rest /= 3;
        }
        Povm povm{d, {}, label};
        povm.elements.reserve(static_cast<std::size_t>(d));
        for (int outcome = 0; outcome < d; ++outcome) {
            CMatrix e = CMatrix::Ones(1, 1);
            for (int i = 0; i < q; ++i) {
                const int bit = (outcome >> (q - 1 - i)) & 1;
                const CMatrix factor = detail::pauli_projectors(label[static_cast<std::size_t>(i)])[bit];
                e = Eigen::kroneckerProduct(e, factor).eval();
            }
            povm.elements.push_back(std::move(e));
        }
        out.push_back(std::move(povm));
    }
    return out;
}

/// Informationally complete projective set for any d >= 2: the computational
/// basis ("z"), and for each pair j < k the bases ("r<j><k>", "i<j><k>") made
/// of (|j> +- |k>)/sqrt(2) or (|j> +- i|k>)/sqrt(2) completed by |l><l|, l != j,k.
inline std::vector<Povm> pair_povms(int d) {
    if (d < 2)
        fail(ErrorKind::invalid_dimension, "pair_povms: dimension must be >= 2");
    std::vector<Povm> out;
    Povm z{d, {}, "z"};
    for (int k = 0; k < d; ++k) {
        CMatrix e = CMatrix::Zero(d, d);
        e(k, k) = 1.0;
        z.elements.push_back(std::move(e));
    }
    out.push_back(std::move(z));
    const double s = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
            for (const Complex phase : {Complex(1.0, 0.0), kI}) {
                Povm povm{d, {}, std::string(phase == kI ? "i" : "r") + std::to_string(j) + "-" + std::to_string(k)};
                CVector plus = CVector::Zero(d), minus = CVector::Zero(d);
                plus(j) = s;
                plus(k) = s * phase;
                minus(j) = s;
                minus(k) = -s * phase;
                povm.elements.push_back(plus * plus.adjoint());
                povm.elements.push_back(minus * minus.adjoint());
                for (int l = 0; l < d; ++l) {
                    if (l == j || l == k)
                        continue;
                    CMatrix e = CMatrix::Zero(d, d);
                    e(l, l) = 1.0;
                    povm.elements.push_back(std::move(e));
                }
                out.push_back(std::move(povm));
            }
        }
    }
    return out;
}

/// Default tomographic set: cube bases when d is a small power of two,
/// otherwise the pairwise set.
inline std::vector<Povm> measurement_catalog(int d) {
    const int q = detail::qubit_count(d);
    if (q >= 1 && q <= 4)
        return cube_povms(d);
    return pair_povms(d);
}

// ---------------------------------------------------------------------------
// Error metric and random states
// ---------------------------------------------------------------------------

/// Tr((est - truth)^2) for a single trial.
inline double mse(const DensityMatrix &est, const DensityMatrix &truth) {
    if (est.dim() != truth.dim())
        fail(ErrorKind::dimension_mismatch, "mse: dimension mismatch");
    const CMatrix diff = est.matrix() - truth.matrix();
    return (diff * diff).trace().real();
}

template <class R> PureState haar_pure_state(int d, R &rng) {
    return PureState::normalized(ginibre(d, 1, rng).col(0));
}

/// Hilbert-Schmidt random mixed state G G^dagger / Tr(G G^dagger) (normalized
/// Wishart draw).
template <class R> DensityMatrix random_mixed_state(int d, R &rng) {
    const CMatrix g = ginibre(d, d, rng);
    CMatrix w = g * g.adjoint();
    w /= w.trace().real();
    return DensityMatrix(hermitian_part(w));
}

} // namespace qest
