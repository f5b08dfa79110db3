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

#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "qest/lre_tomography.hpp"

namespace qest {

/// Running recursive least-squares state (Q_n, Theta_n). Q approximates the
/// estimator covariance once enough copies are used.
struct RecursiveState {
    RMatrix q;
    ThetaVector theta_hat;
    std::int64_t step = 0;
    std::int64_t copies_used = 0;

    int dim() const { return theta_hat.dim; }
};

/// Total copies N = N1 + K * N2.
struct AdaptiveSchedule {
    std::int64_t total = 0;
    std::int64_t stage1 = 0;
    std::int64_t per_step = 0;
    std::int64_t steps = 0;

    static AdaptiveSchedule from_totals(std::int64_t total, std::int64_t stage1, std::int64_t steps) {
        if (total < 1 || stage1 < 1 || steps < 0 || stage1 > total)
            fail(ErrorKind::invalid_argument, "AdaptiveSchedule: need N >= N1 >= 1 and K >= 0");
        if (steps == 0) {
            if (stage1 != total)
                fail(ErrorKind::invalid_argument, "AdaptiveSchedule: K = 0 requires N = N1");
            return {total, stage1, 0, 0};
        }
        if ((total - stage1) % steps != 0)
            fail(ErrorKind::invalid_argument, "AdaptiveSchedule: N - N1 is not divisible by K");
        AdaptiveSchedule s{total, stage1, (total - stage1) / steps, steps};
        s.validate();
        return s;
    }

    void validate() const {
        if (stage1 < 1 || steps < 0 || (steps > 0 && per_step < 1) || total != stage1 + steps * per_step)
            fail(ErrorKind::invalid_argument, "AdaptiveSchedule: requires N = N1 + K*N2 with positive parts");
    }
};

/// Q0 = (sum_k W_k Gamma_k Gamma_k^T)^-1, Theta0 = batch estimate.
inline RecursiveState rls_init_from_batch(const RegressionProblem &prob, const ThetaVector &theta_hat) {
    const RMatrix info = prob.x.transpose() * prob.w.asDiagonal() * prob.x;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(info);
    const RVector &ev = es.eigenvalues();
    const double top = ev(ev.size() - 1);
    if (!(top > 0.0) || ev(0) <= top / detail::kMaxDesignCondition) {
        Eigen::Index null_dim = 0;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev(i) <= top / detail::kMaxDesignCondition)
                ++null_dim;
        fail(ErrorKind::singular_design, "rls_init_from_batch: information matrix is singular (null-space dimension " +
                                             std::to_string(std::max<Eigen::Index>(null_dim, 1)) + ")");
    }
    RecursiveState s;
    s.q = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    s.theta_hat = theta_hat;
    return s;
}

/// One recursive update with a single record:
///   a  = (1/W + Gamma^T Q Gamma)^-1
///   Q' = Q - a Q Gamma Gamma^T Q
///   Theta' = Theta + a Q Gamma (p_hat - gamma0/d - Gamma^T Theta)
inline RecursiveState rls_update(const RecursiveState &state, const MeasurementRecord &record, double weight) {
    if (!(weight > 0.0))
        fail(ErrorKind::invalid_argument, "rls_update: weight must be positive");
    if (record.gamma.size() != state.q.rows())
        fail(ErrorKind::dimension_mismatch, "rls_update: record dimension does not match state");
    const RVector qg = state.q * record.gamma;
    const double a = 1.0 / (1.0 / weight + record.gamma.dot(qg));
    const double innovation = record.frequency() - record.gamma0 / static_cast<double>(state.dim()) -
                              record.gamma.dot(state.theta_hat.values);
    RecursiveState next = state;
    next.q.noalias() -= a * qg * qg.transpose();
    next.q = 0.5 * (next.q + next.q.transpose()).eval();
    next.theta_hat.values += a * innovation * qg;
    next.step += 1;
    return next;
}

/// Tr Q_s - Tr Q_{s+1} for one planned record, in closed form a ||Q Gamma||^2.
inline double trace_gain(const RecursiveState &state, const RVector &gamma, double weight) {
    if (gamma.size() != state.q.rows())
        fail(ErrorKind::dimension_mismatch, "trace_gain: candidate dimension does not match state");
    const RVector qg = state.q * gamma;
    const double a = 1.0 / (1.0 / weight + gamma.dot(qg));
    return a * qg.squaredNorm();
}

namespace detail {

inline double predicted_probability(const RecursiveState &state, double gamma0, const RVector &gamma) {
    return std::clamp(gamma0 / static_cast<double>(state.dim()) + gamma.dot(state.theta_hat.values), 0.0, 1.0);
}

} // namespace detail

/// Trace decrease from measuring every element of `povm` on `shots` copies:
/// the element-wise gains summed in element order, each evaluated after the
/// preceding elements' updates (this equals the exact Tr Q decrease of the
/// whole round). Planned weights use probabilities predicted from Theta_hat.
inline double povm_gain(const RecursiveState &state, const Povm &povm, std::int64_t shots, WeightPolicy policy,
                        const HermitianBasis &basis) {
    RMatrix q = state.q;
    double total = 0.0;
    for (const auto &e : povm.elements) {
        const auto [g0, gamma] = operator_coordinates(e, basis);
        const double w = regression_weight(detail::predicted_probability(state, g0, gamma), shots, policy);
        const RVector qg = q * gamma;
        const double a = 1.0 / (1.0 / w + gamma.dot(qg));
        total += a * qg.squaredNorm();
        q.noalias() -= a * qg * qg.transpose();
    }
    return total;
}

/// Index of the candidate with the largest gain; ties go to the lowest index.
inline std::size_t select_next_povm_index(const RecursiveState &state, std::span<const Povm> candidates,
                                          std::int64_t shots, WeightPolicy policy, const HermitianBasis &basis) {
    if (candidates.empty())
        fail(ErrorKind::invalid_argument, "select_next_povm: empty candidate set");
    std::size_t best = 0;
    double best_gain = povm_gain(state, candidates[0], shots, policy, basis);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double g = povm_gain(state, candidates[i], shots, policy, basis);
        if (g > best_gain) {
            best_gain = g;
            best = i;
        }
    }
    return best;
}

inline Povm select_next_povm(const RecursiveState &state, std::span<const Povm> candidates, std::int64_t shots,
                             WeightPolicy policy, const HermitianBasis &basis) {
    return candidates[select_next_povm_index(state, candidates, shots, policy, basis)];
}

/// Projective qubit measurement along Bloch direction n: {(I + n.sigma)/2, (I - n.sigma)/2}.
inline Povm bloch_povm(const Eigen::Vector3d &n) {
    const Eigen::Vector3d u = n.normalized();
    CMatrix ns(2, 2);
    ns << u(2), Complex(u(0), -u(1)), Complex(u(0), u(1)), -u(2);
    const CMatrix id = CMatrix::Identity(2, 2);
    char label[96];
    std::snprintf(label, sizeof(label), "bloch(%.6f,%.6f,%.6f)", u(0), u(1), u(2));
    return Povm{2, {0.5 * (id + ns), 0.5 * (id - ns)}, label};
}

/// Continuum-optimal qubit basis: the Bloch direction along the top
/// eigenvector of Q. In the Gell-Mann parameterization Gamma = +-n/sqrt(2), so
/// with direction-independent planned weights the round gain is the quotient
/// n^T Q^2 n / n^T (Q + cI) n, which peaks on the top eigenvector. When the top
/// eigenvalue is degenerate, the first cube axis (x, y, z) with the largest
/// component in the top eigenspace is returned.
inline Povm optimal_qubit_basis(const RecursiveState &state) {
    if (state.dim() != 2)
        fail(ErrorKind::unsupported, "optimal_qubit_basis: only defined for a single qubit");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(state.q);
    const RVector &ev = es.eigenvalues();
    const double top = ev(2);
    const double tol = 1e-9 * std::max(1.0, std::abs(top));
    int multiplicity = 1;
    while (multiplicity < 3 && top - ev(2 - multiplicity) <= tol)
        ++multiplicity;

    Eigen::Vector3d n;
    if (multiplicity == 1) {
        n = es.eigenvectors().col(2);
    } else {
        const RMatrix span = es.eigenvectors().rightCols(multiplicity);
        int best_axis = 0;
        double best_norm = -1.0;
        for (int axis = 0; axis < 3; ++axis) {
            const double weight = span.row(axis).squaredNorm();
            if (weight > best_norm + 1e-12) {
                best_norm = weight;
                best_axis = axis;
            }
        }
        n = span * span.row(best_axis).transpose();
    }
    // Sign convention: first significant component positive.
    for (int i = 0; i < 3; ++i) {
        if (std::abs(n(i)) > 1e-12) {
            if (n(i) < 0.0)
                n = -n;
            break;
        }
    }
    return bloch_povm(n);
}

// ---------------------------------------------------------------------------
// Two-stage protocol
// ---------------------------------------------------------------------------

enum class CandidateMode { cube, continuum };

inline CandidateMode parse_candidate_mode(const std::string &name) {
    if (name == "cube")
        return CandidateMode::cube;
    if (name == "continuum")
        return CandidateMode::continuum;
    fail(ErrorKind::invalid_argument, "unknown candidate set '" + name + "' (expected cube|continuum)");
}

struct AdaptiveStep {
    std::int64_t step = 0;
    std::int64_t copies_used = 0;
    double trace_q = 0.0;
    double mse = 0.0;
    std::string povm;
};

struct AdaptiveResult {
    DensityMatrix estimate;
    std::vector<AdaptiveStep> steps;
};

/// Stage 1: batch LRE on N1 copies spread over the cube bases. Stage 2: K
/// rounds of (pick the basis with the largest trace gain, measure N2 copies,
/// fold each outcome record into (Q, Theta) in element order). The final
/// estimate is projected to a physical state.
inline AdaptiveResult run_adaptive_protocol(const DensityMatrix &truth, const AdaptiveSchedule &schedule,
                                            CandidateMode candidates, std::uint64_t seed,
                                            WeightPolicy policy = WeightPolicy::inverse_variance) {
    schedule.validate();
    const int d = truth.dim();
    const HermitianBasis basis = gell_mann_basis(d);
    const std::vector<Povm> cube = cube_povms(d);
    if (candidates == CandidateMode::continuum && d != 2)
        fail(ErrorKind::unsupported, "run_adaptive_protocol: continuum candidates require d = 2");

    const auto stage1 = simulate_povm_set(truth, cube, schedule.stage1, derive_seed(seed, {0}), basis);
    const RegressionProblem prob = build_regression(stage1, d, basis, policy);
    const ThetaVector theta0 = solve_weighted_ls(prob);
    RecursiveState state = rls_init_from_batch(prob, theta0);
    state.copies_used = schedule.stage1;

    AdaptiveResult result;
    auto log_step = [&](const std::string &label) {
        const DensityMatrix est = project_physical(rho_from_theta(state.theta_hat, basis));
        result.steps.push_back(AdaptiveStep{static_cast<std::int64_t>(result.steps.size()), state.copies_used,
                                            state.q.trace(), mse(est, truth), label});
    };
    log_step("cube");

    for (std::int64_t k = 0; k < schedule.steps; ++k) {
        const Povm chosen = candidates == CandidateMode::cube
                                ? select_next_povm(state, cube, schedule.per_step, policy, basis)
                                : optimal_qubit_basis(state);
        const auto records = simulate_measurements(truth, chosen, schedule.per_step,
                                                   derive_seed(seed, {1, static_cast<std::uint64_t>(k)}), basis);
        for (const auto &r : records)
            state = rls_update(state, r, record_weight(r, policy));
        state.copies_used += schedule.per_step;
        log_step(chosen.label);
    }
    result.estimate = project_physical(rho_from_theta(state.theta_hat, basis));
    return result;
}

/// Non-adaptive baseline: all N copies spread over the cube bases.
inline DensityMatrix run_static_protocol(const DensityMatrix &truth, std::int64_t total_copies, std::uint64_t seed,
                                         WeightPolicy policy = WeightPolicy::inverse_variance) {
    const int d = truth.dim();
    const HermitianBasis basis = gell_mann_basis(d);
    const std::vector<Povm> cube = cube_povms(d);
    const auto records = simulate_povm_set(truth, cube, total_copies, derive_seed(seed, {0}), basis);
    return tomography_pipeline(records, d, basis, policy).rho;
}

} // namespace qest
