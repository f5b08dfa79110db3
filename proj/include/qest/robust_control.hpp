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
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qest/quantum_model.hpp"

namespace qest {

/// H(t) = omega H0 + theta sum_m u_m(t) H_m with omega in [1-Omega, 1+Omega]
/// and theta in [1-Theta, 1+Theta].
struct UncertainSystem {
    int dim = 0;
    CMatrix h0;
    std::vector<CMatrix> controls;
    double omega_halfwidth = 0.0;
    double theta_halfwidth = 0.0;

    UncertainSystem() = default;
    UncertainSystem(CMatrix drift, std::vector<CMatrix> hm, double omega_hw = 0.0, double theta_hw = 0.0)
        : dim(static_cast<int>(drift.rows())), h0(std::move(drift)), controls(std::move(hm)),
          omega_halfwidth(omega_hw), theta_halfwidth(theta_hw) {
        validate();
    }

    std::size_t channels() const { return controls.size(); }

    void validate() const {
        if (dim < 2 || !is_square(h0))
            fail(ErrorKind::invalid_dimension, "UncertainSystem: H0 must be square with d >= 2");
        if (!is_hermitian(h0, 1e-10))
            fail(ErrorKind::contract_violation, "UncertainSystem: H0 is not Hermitian");
        if (controls.empty())
            fail(ErrorKind::invalid_argument, "UncertainSystem: at least one control Hamiltonian is required");
        for (const auto &h : controls) {
            if (h.rows() != dim || h.cols() != dim)
                fail(ErrorKind::dimension_mismatch, "UncertainSystem: control Hamiltonian has wrong shape");
            if (!is_hermitian(h, 1e-10))
                fail(ErrorKind::contract_violation, "UncertainSystem: control Hamiltonian is not Hermitian");
        }
        for (double hw : {omega_halfwidth, theta_halfwidth})
            if (!(hw >= 0.0 && hw < 1.0))
                fail(ErrorKind::invalid_argument, "UncertainSystem: uncertainty halfwidths must lie in [0, 1)");
    }

    CMatrix hamiltonian(double omega, double theta, const RVector &u) const {
        CMatrix h = omega * h0;
        for (std::size_t m = 0; m < controls.size(); ++m)
            h += (theta * u(static_cast<Eigen::Index>(m))) * controls[m];
        return h;
    }
};

/// Piecewise-constant field; amplitudes(k, m) is u_m on interval k.
struct ControlField {
    double horizon = 1.0;
    RMatrix amplitudes;
    std::optional<double> bound; ///< |u| <= bound when set

    ControlField() = default;
    ControlField(double t, RMatrix amps, std::optional<double> b = std::nullopt)
        : horizon(t), amplitudes(std::move(amps)), bound(b) {
        validate();
    }

    static ControlField constant(double t, Eigen::Index intervals, Eigen::Index channels, double value) {
        return ControlField(t, RMatrix::Constant(intervals, channels, value));
    }

    Eigen::Index intervals() const { return amplitudes.rows(); }
    Eigen::Index channels() const { return amplitudes.cols(); }
    double dt() const { return horizon / static_cast<double>(intervals()); }

    void validate() const {
        if (!(horizon > 0.0))
            fail(ErrorKind::invalid_argument, "ControlField: horizon must be positive");
        if (amplitudes.rows() < 1 || amplitudes.cols() < 1)
            fail(ErrorKind::invalid_argument, "ControlField: need L >= 1 intervals and at least one channel");
        if (!amplitudes.allFinite())
            fail(ErrorKind::contract_violation, "ControlField: non-finite amplitude");
        if (bound && amplitudes.cwiseAbs().maxCoeff() > *bound + 1e-12)
            fail(ErrorKind::contract_violation, "ControlField: amplitude bound violated");
    }

    void clip() {
        if (bound)
            amplitudes = amplitudes.cwiseMax(-*bound).cwiseMin(*bound);
    }
};

struct UncertaintySample {
    double omega = 1.0;
    double theta = 1.0;
};

enum class SampleScheme { grid, random, stencil, nominal };

inline std::string to_string(SampleScheme s) {
    switch (s) {
    case SampleScheme::grid: return "grid";
    case SampleScheme::random: return "random";
    case SampleScheme::stencil: return "stencil";
    case SampleScheme::nominal: return "nominal";
    }
    return "unknown";
}

struct SampleSet {
    std::vector<UncertaintySample> pairs;
    SampleScheme scheme = SampleScheme::grid;

    std::size_t size() const { return pairs.size(); }

    /// Midpoint grid: n_omega x n_theta cell centres of the uncertainty rectangle.
    static SampleSet grid(const UncertainSystem &sys, int n_omega, int n_theta) {
        if (n_omega < 1 || n_theta < 1)
            fail(ErrorKind::invalid_argument, "SampleSet::grid: counts must be >= 1");
        SampleSet s;
        s.scheme = SampleScheme::grid;
        for (int i = 0; i < n_omega; ++i)
            for (int j = 0; j < n_theta; ++j)
                s.pairs.push_back({1.0 - sys.omega_halfwidth + sys.omega_halfwidth * (2.0 * i + 1.0) / n_omega,
                                   1.0 - sys.theta_halfwidth + sys.theta_halfwidth * (2.0 * j + 1.0) / n_theta});
        return s;
    }

    /// Centre plus the four corners of the rectangle.
    static SampleSet stencil(const UncertainSystem &sys) {
        SampleSet s;
        s.scheme = SampleScheme::stencil;
        const double a = sys.omega_halfwidth;
        const double b = sys.theta_halfwidth;
        s.pairs = {{1.0, 1.0}, {1.0 - a, 1.0 - b}, {1.0 - a, 1.0 + b}, {1.0 + a, 1.0 - b}, {1.0 + a, 1.0 + b}};
        return s;
    }

    static SampleSet random(const UncertainSystem &sys, int n, std::uint64_t seed) {
        if (n < 1)
            fail(ErrorKind::invalid_argument, "SampleSet::random: count must be >= 1");
        Rng rng(seed);
        std::uniform_real_distribution<double> uo(1.0 - sys.omega_halfwidth, 1.0 + sys.omega_halfwidth);
        std::uniform_real_distribution<double> ut(1.0 - sys.theta_halfwidth, 1.0 + sys.theta_halfwidth);
        SampleSet s;
        s.scheme = SampleScheme::random;
        for (int i = 0; i < n; ++i) {
            const double o = uo(rng);
            const double t = ut(rng);
            s.pairs.push_back({o, t});
        }
        return s;
    }

    static SampleSet nominal() { return SampleSet{{{1.0, 1.0}}, SampleScheme::nominal}; }

    void validate(const UncertainSystem &sys) const {
        if (pairs.empty())
            fail(ErrorKind::invalid_argument, "SampleSet: empty sample set");
        for (const auto &p : pairs)
            if (std::abs(p.omega - 1.0) > sys.omega_halfwidth + 1e-12 ||
                std::abs(p.theta - 1.0) > sys.theta_halfwidth + 1e-12)
                fail(ErrorKind::invalid_argument, "SampleSet: sample outside the uncertainty rectangle");
    }
};

// ---------------------------------------------------------------------------
// Propagation and performance
// ---------------------------------------------------------------------------

namespace detail {

inline void check_compatible(const UncertainSystem &sys, const ControlField &field, const CVector &psi) {
    if (psi.size() != sys.dim)
        fail(ErrorKind::dimension_mismatch, "propagate: state dimension does not match the system");
    if (field.channels() != static_cast<Eigen::Index>(sys.channels()))
        fail(ErrorKind::dimension_mismatch, "propagate: field channel count does not match the system");
    field.validate();
}

} // namespace detail

inline CVector propagate(const UncertainSystem &sys, UncertaintySample sample, const ControlField &field,
                         const CVector &psi0) {
    detail::check_compatible(sys, field, psi0);
    const double dt = field.dt();
    CVector psi = psi0;
    for (Eigen::Index k = 0; k < field.intervals(); ++k)
        psi = herm_expm(sys.hamiltonian(sample.omega, sample.theta, field.amplitudes.row(k).transpose()), dt) * psi;
    return psi;
}

inline PureState propagate(const UncertainSystem &sys, UncertaintySample sample, const ControlField &field,
                           const PureState &psi0) {
    const CVector out = propagate(sys, sample, field, psi0.amplitudes());
    if (std::abs(out.norm() - 1.0) > 1e-9)
        fail(ErrorKind::contract_violation, "propagate: norm drifted beyond 1e-9");
    return PureState::normalized(out);
}

inline double fidelity_J(const UncertainSystem &sys, UncertaintySample sample, const ControlField &field,
                         const PureState &psi0, const PureState &target) {
    const CVector out = propagate(sys, sample, field, psi0.amplitudes());
    return std::norm(target.amplitudes().dot(out));
}

inline double augmented_J(const UncertainSystem &sys, const SampleSet &samples, const ControlField &field,
                          const PureState &psi0, const PureState &target) {
    if (samples.pairs.empty())
        fail(ErrorKind::invalid_argument, "augmented_J: empty sample set");
    double sum = 0.0;
    for (const auto &s : samples.pairs)
        sum += fidelity_J(sys, s, field, psi0, target);
    return sum / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// fd: central differences. analytic: exact derivative of each step
/// propagator from the spectral (divided-difference) formula. first_order:
/// dU_k/du_m ~ -i dt theta H_m U_k.
enum class GradientMode { fd, analytic, first_order };

inline GradientMode parse_gradient_mode(const std::string &name) {
    if (name == "fd")
        return GradientMode::fd;
    if (name == "analytic")
        return GradientMode::analytic;
    if (name == "first-order")
        return GradientMode::first_order;
    fail(ErrorKind::invalid_argument, "unknown gradient mode '" + name + "' (expected fd|analytic|first-order)");
}

inline constexpr double kFiniteDifferenceStep = 1e-6;

namespace detail {

struct StepPropagator {
    CMatrix u;
    CMatrix v;     ///< eigenvectors of the step Hamiltonian
    CMatrix gamma; ///< divided differences of exp(-i dt x) on its spectrum
};

inline StepPropagator step_propagator(const CMatrix &h, double dt, bool with_derivative) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const RVector &lam = es.eigenvalues();
    const Eigen::Index d = lam.size();
    CVector ph(d);
    for (Eigen::Index i = 0; i < d; ++i)
        ph(i) = std::exp(-kI * (dt * lam(i)));
    StepPropagator sp;
    sp.u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
    if (with_derivative) {
        sp.v = es.eigenvectors();
        sp.gamma.resize(d, d);
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) {
                const double gap = lam(a) - lam(b);
                if (std::abs(gap) * dt < 1e-8)
                    sp.gamma(a, b) = -kI * dt * ph(a);
                else
                    sp.gamma(a, b) = (ph(a) - ph(b)) / gap;
            }
    }
    return sp;
}

/// dJ/du(k, m) for one sample by forward/backward caches.
inline RMatrix sample_gradient(const UncertainSystem &sys, UncertaintySample s, const ControlField &field,
                               const CVector &psi0, const CVector &target, GradientMode mode) {
    const Eigen::Index steps = field.intervals();
    const Eigen::Index chans = field.channels();
    const double dt = field.dt();
    const bool exact = mode == GradientMode::analytic;

    std::vector<StepPropagator> props;
    props.reserve(static_cast<std::size_t>(steps));
    std::vector<CVector> fwd(static_cast<std::size_t>(steps + 1));
    fwd[0] = psi0;
    for (Eigen::Index k = 0; k < steps; ++k) {
        props.push_back(
            step_propagator(sys.hamiltonian(s.omega, s.theta, field.amplitudes.row(k).transpose()), dt, exact));
        fwd[static_cast<std::size_t>(k + 1)] = props.back().u * fwd[static_cast<std::size_t>(k)];
    }
    const Complex overlap = target.dot(fwd[static_cast<std::size_t>(steps)]);

    RMatrix grad(steps, chans);
    CVector lambda = target; // (U_L ... U_{k+1})^dagger target
    for (Eigen::Index k = steps - 1; k >= 0; --k) {
        const auto &sp = props[static_cast<std::size_t>(k)];
        const CVector &before = fwd[static_cast<std::size_t>(k)];
        for (Eigen::Index m = 0; m < chans; ++m) {
            const CMatrix &hm = sys.controls[static_cast<std::size_t>(m)];
            Complex d_overlap;
            if (exact) {
                const CMatrix hv = sp.v.adjoint() * (s.theta * hm) * sp.v;
                const CMatrix du = sp.v * sp.gamma.cwiseProduct(hv) * sp.v.adjoint();
                d_overlap = lambda.dot(du * before);
            } else {
                d_overlap = lambda.dot(-kI * dt * s.theta * (hm * fwd[static_cast<std::size_t>(k + 1)]));
            }
            grad(k, m) = 2.0 * (std::conj(overlap) * d_overlap).real();
        }
        lambda = sp.u.adjoint() * lambda;
    }
    return grad;
}

} // namespace detail

inline RMatrix gradient_J(const UncertainSystem &sys, const SampleSet &samples, const ControlField &field,
                          const PureState &psi0, const PureState &target, GradientMode mode) {
    if (samples.pairs.empty())
        fail(ErrorKind::invalid_argument, "gradient_J: empty sample set");
    detail::check_compatible(sys, field, psi0.amplitudes());
    RMatrix grad = RMatrix::Zero(field.intervals(), field.channels());
    if (mode == GradientMode::fd) {
        ControlField probe = field;
        probe.bound.reset();
        const double h = kFiniteDifferenceStep;
        for (Eigen::Index k = 0; k < field.intervals(); ++k)
            for (Eigen::Index m = 0; m < field.channels(); ++m) {
                const double base = field.amplitudes(k, m);
                probe.amplitudes(k, m) = base + h;
                const double up = augmented_J(sys, samples, probe, psi0, target);
                probe.amplitudes(k, m) = base - h;
                const double down = augmented_J(sys, samples, probe, psi0, target);
                probe.amplitudes(k, m) = base;
                grad(k, m) = (up - down) / (2.0 * h);
            }
        return grad;
    }
    for (const auto &s : samples.pairs)
        grad += detail::sample_gradient(sys, s, field, psi0.amplitudes(), target.amplitudes(), mode);
    return grad / static_cast<double>(samples.size());
}

// ---------------------------------------------------------------------------
// Training and testing
// ---------------------------------------------------------------------------

struct TrainingConfig {
    double step = 1.0;
    int iterations = 500;
    double tolerance = 1e-10;
    int max_halvings = 40;
    GradientMode gradient = GradientMode::analytic;
};

struct TrainingResult {
    ControlField field;
    std::vector<double> log; ///< J_N after each accepted iteration, log[0] at field0
    bool converged = false;
};

/// Gradient ascent u <- u + eta grad J_N. Each iteration starts from the
/// configured eta and halves it until J_N does not decrease.
inline TrainingResult slc_train(const UncertainSystem &sys, const SampleSet &samples, const ControlField &field0,
                                const PureState &psi0, const PureState &target, const TrainingConfig &cfg) {
    if (!(cfg.step > 0.0) || cfg.iterations < 0 || !(cfg.tolerance >= 0.0))
        fail(ErrorKind::invalid_argument, "slc_train: step must be positive, iterations and tolerance >= 0");
    samples.validate(sys);
    TrainingResult res{field0, {}, false};
    double j = augmented_J(sys, samples, res.field, psi0, target);
    res.log.push_back(j);
    for (int it = 0; it < cfg.iterations; ++it) {
        const RMatrix g = gradient_J(sys, samples, res.field, psi0, target, cfg.gradient);
        double eta = cfg.step;
        bool accepted = false;
        ControlField trial = res.field;
        double jt = j;
        for (int h = 0; h <= cfg.max_halvings; ++h, eta *= 0.5) {
            trial.amplitudes = res.field.amplitudes + eta * g;
            trial.clip();
            jt = augmented_J(sys, samples, trial, psi0, target);
            if (jt >= j) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.converged = true;
            break;
        }
        res.field = trial;
        const double delta = jt - j;
        j = jt;
        res.log.push_back(j);
        if (std::abs(delta) < cfg.tolerance) {
            res.converged = true;
            break;
        }
    }
    return res;
}

struct TestStatistics {
    double mean = 0.0;
    double min = 0.0;
    std::vector<UncertaintySample> samples;
    std::vector<double> fidelities;
};

inline TestStatistics slc_test(const UncertainSystem &sys, const ControlField &field, const SampleSet &test,
                               const PureState &psi0, const PureState &target) {
    if (test.pairs.empty())
        fail(ErrorKind::invalid_argument, "slc_test: empty test set");
    TestStatistics st;
    st.samples = test.pairs;
    for (const auto &s : test.pairs)
        st.fidelities.push_back(fidelity_J(sys, s, field, psi0, target));
    double sum = 0.0;
    for (double f : st.fidelities)
        sum += f;
    st.mean = sum / static_cast<double>(st.fidelities.size());
    st.min = *std::min_element(st.fidelities.begin(), st.fidelities.end());
    return st;
}

// ---------------------------------------------------------------------------
// Sliding mode domain and periodic measurement
// ---------------------------------------------------------------------------

struct SlidingConfig {
    double p0 = 0.1;
    double tau = 0.1;

    void validate() const {
        if (!(p0 > 0.0 && p0 < 1.0))
            fail(ErrorKind::invalid_argument, "SlidingConfig: p0 must lie in (0, 1)");
        if (!(tau > 0.0))
            fail(ErrorKind::invalid_argument, "SlidingConfig: measurement period must be positive");
    }
};

/// |<0|psi>|^2 >= 1 - p0.
inline bool in_sliding_domain(const PureState &psi, const SlidingConfig &cfg) {
    if (psi.dim() != 2)
        fail(ErrorKind::unsupported, "in_sliding_domain: only two-level systems are supported");
    cfg.validate();
    return std::norm(psi.amplitudes()(0)) >= 1.0 - cfg.p0;
}

struct MeasurementPeriod {
    std::int64_t period = 0;
    double ground_population = 1.0; ///< |<0|psi>|^2 just before the measurement
    bool in_domain = true;           ///< of the pre-measurement state
    int outcome = 0;                 ///< sigma_z outcome, 0 -> |0>, 1 -> |1>
};

struct MeasurementDemoResult {
    std::vector<MeasurementPeriod> periods;
    std::int64_t collapses_out = 0;
    double collapse_frequency = 0.0;
};

/// psi(0) = |0>. Each period evolves by exp(-i tau (H0 + H_delta)), then
/// measures sigma_z. A collapse to |1> leaves D; the corrective flip that the
/// sliding-mode controller would apply is idealized as a reset to |0>.
inline MeasurementDemoResult periodic_measurement_demo(const CMatrix &h0, const CMatrix &h_delta,
                                                       const SlidingConfig &cfg, std::int64_t periods,
                                                       std::uint64_t seed) {
    if (h_delta.rows() != 2 || h_delta.cols() != 2 || h0.rows() != 2 || h0.cols() != 2)
        fail(ErrorKind::unsupported, "periodic_measurement_demo: only two-level systems are supported");
    cfg.validate();
    if (periods < 0)
        fail(ErrorKind::invalid_argument, "periodic_measurement_demo: period count must be >= 0");
    const CMatrix step = herm_expm(h0 + h_delta, cfg.tau);
    Rng rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    MeasurementDemoResult res;
    CVector psi = PureState::basis(2, 0).amplitudes();
    for (std::int64_t k = 0; k < periods; ++k) {
        psi = step * psi;
        MeasurementPeriod rec;
        rec.period = k;
        rec.ground_population = std::clamp(std::norm(psi(0)), 0.0, 1.0);
        rec.in_domain = rec.ground_population >= 1.0 - cfg.p0;
        rec.outcome = uniform(rng) < rec.ground_population ? 0 : 1;
        if (rec.outcome == 1)
            ++res.collapses_out;
        psi = PureState::basis(2, 0).amplitudes(); // |0>, directly or after the flip
        res.periods.push_back(rec);
    }
    res.collapse_frequency = periods > 0 ? static_cast<double>(res.collapses_out) / static_cast<double>(periods) : 0.0;
    return res;
}

inline MeasurementDemoResult periodic_measurement_demo(const CMatrix &h_delta, const SlidingConfig &cfg,
                                                       std::int64_t periods, std::uint64_t seed) {
    return periodic_measurement_demo(CMatrix::Zero(2, 2), h_delta, cfg, periods, seed);
}

} // namespace qest
