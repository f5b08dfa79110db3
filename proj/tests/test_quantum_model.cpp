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


#include "test_support.hpp"

namespace qest {
namespace {

using testing::max_diff;

DensityMatrix ket_density(const CVector &v) { return PureState::normalized(v).density(); }

TEST(DensityMatrix, ValidatesInvariants) {
    EXPECT_NO_THROW(DensityMatrix(CMatrix::Identity(3, 3) / 3.0));
    CMatrix not_herm = CMatrix::Identity(2, 2) / 2.0;
    not_herm(0, 1) = 0.1;
    EXPECT_QEST_ERROR(DensityMatrix{not_herm}, ErrorKind::contract_violation);
    EXPECT_QEST_ERROR(DensityMatrix{CMatrix::Identity(2, 2)}, ErrorKind::contract_violation);
    CMatrix negative = CMatrix::Zero(2, 2);
    negative(0, 0) = 1.2;
    negative(1, 1) = -0.2;
    EXPECT_QEST_ERROR(DensityMatrix{negative}, ErrorKind::contract_violation);
    EXPECT_QEST_ERROR(DensityMatrix{CMatrix::Zero(2, 3)}, ErrorKind::dimension_mismatch);
}

TEST(PureState, NormAndBasis) {
    EXPECT_QEST_ERROR(PureState{CVector::Ones(2)}, ErrorKind::contract_violation);
    EXPECT_QEST_ERROR(PureState::basis(2, 2), ErrorKind::invalid_argument);
    const auto s = PureState::basis(3, 1);
    EXPECT_EQ(s.amplitudes()(1), Complex(1, 0));
    EXPECT_NEAR(s.density().purity(), 1.0, 1e-15);
}

TEST(Theta, ZeroIsMaximallyMixed) {
    for (int d = 2; d <= 4; ++d) {
        const auto basis = gell_mann_basis(d);
        const ThetaVector zero{d, RVector::Zero(d * d - 1), basis.id};
        EXPECT_LT(max_diff(rho_from_theta(zero, basis), CMatrix::Identity(d, d) / d), 1e-15);
    }
}

TEST(Theta, GroundStateQubit) {
    const auto basis = gell_mann_basis(2);
    const auto theta = theta_from_rho(PureState::basis(2, 0).density(), basis);
    EXPECT_NEAR(theta.values(0), 0.0, 1e-15);
    EXPECT_NEAR(theta.values(1), 0.0, 1e-15);
    EXPECT_NEAR(theta.values(2), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Theta, RoundTrip) {
    Rng rng(7);
    for (int d = 2; d <= 5; ++d) {
        const auto basis = gell_mann_basis(d);
        std::normal_distribution<double> normal;
        ThetaVector theta{d, RVector(d * d - 1), basis.id};
        for (Eigen::Index i = 0; i < theta.values.size(); ++i)
            theta.values(i) = normal(rng);
        EXPECT_LT((theta_from_matrix(rho_from_theta(theta, basis), basis).values - theta.values).norm(), 1e-12);
        const DensityMatrix rho = random_mixed_state(d, rng);
        EXPECT_LT(max_diff(rho_from_theta(theta_from_rho(rho, basis), basis), rho.matrix()), 1e-12);
    }
}

TEST(Theta, BasisMismatchRejected) {
    const auto b2 = gell_mann_basis(2);
    const auto b3 = gell_mann_basis(3);
    const ThetaVector theta{2, RVector::Zero(3), b2.id};
    EXPECT_QEST_ERROR(rho_from_theta(theta, b3), ErrorKind::dimension_mismatch);
}

TEST(Povm, ValidationCatchesIncompleteSets) {
    Povm p{2, {PureState::basis(2, 0).density().matrix()}, "half"};
    EXPECT_QEST_ERROR(validate_povm(p), ErrorKind::contract_violation);
    p.elements.push_back(-PureState::basis(2, 1).density().matrix());
    EXPECT_QEST_ERROR(validate_povm(p), ErrorKind::contract_violation);
}

TEST(Born, ClosedFormCases) {
    const Povm z = cube_povms(2)[2];
    ASSERT_EQ(z.label, "z");
    auto p = born_probabilities(PureState::basis(2, 0).density(), z);
    EXPECT_NEAR(p[0], 1.0, 1e-15);
    EXPECT_NEAR(p[1], 0.0, 1e-15);
    const DensityMatrix mixed(CMatrix::Identity(2, 2) / 2.0);
    for (const auto &povm : cube_povms(2))
        for (double q : born_probabilities(mixed, povm))
            EXPECT_NEAR(q, 0.5, 1e-15);
    CVector plus(2);
    plus << 1, 1;
    p = born_probabilities(ket_density(plus), z);
    EXPECT_NEAR(p[0], 0.5, 1e-15);
    EXPECT_NEAR(p[1], 0.5, 1e-15);
    EXPECT_QEST_ERROR(born_probabilities(mixed, cube_povms(4)[0]), ErrorKind::dimension_mismatch);
}

TEST(Sampling, ZeroProbabilityNeverDrawn) {
    const Povm z = cube_povms(2)[2];
    const auto basis = gell_mann_basis(2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto recs = simulate_measurements(PureState::basis(2, 0).density(), z, 1000, seed, basis);
        EXPECT_EQ(recs[0].successes, 1000);
        EXPECT_EQ(recs[1].successes, 0);
    }
}

TEST(Sampling, LargeShotFrequenciesConcentrate) {
    const DensityMatrix mixed(CMatrix::Identity(2, 2) / 2.0);
    const auto basis = gell_mann_basis(2);
    for (const auto &povm : cube_povms(2))
        for (const auto &r : simulate_measurements(mixed, povm, 1000000, 99, basis))
            EXPECT_NEAR(r.frequency(), 0.5, 0.005);
}

TEST(Sampling, CountsSumToShotsAndRepeat) {
    Rng rng(5);
    const DensityMatrix rho = random_mixed_state(4, rng);
    const auto basis = gell_mann_basis(4);
    for (const auto &povm : cube_povms(4)) {
        const auto a = simulate_measurements(rho, povm, 777, 3, basis);
        const auto b = simulate_measurements(rho, povm, 777, 3, basis);
        std::int64_t total = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            EXPECT_EQ(a[j].successes, b[j].successes);
            total += a[j].successes;
        }
        EXPECT_EQ(total, 777);
    }
}

TEST(Sampling, MultinomialMeansMatchProbabilities) {
    // Sample means over many seeds against the Born probabilities.
    const std::vector<double> p{0.1, 0.25, 0.05, 0.6};
    const int reps = 4000;
    const std::int64_t shots = 50;
    std::vector<double> mean(p.size(), 0.0);
    for (int s = 0; s < reps; ++s) {
        const auto c = sample_counts(p, shots, derive_seed(17, {static_cast<std::uint64_t>(s)}));
        for (std::size_t j = 0; j < p.size(); ++j)
            mean[j] += static_cast<double>(c[j]) / (shots * reps);
    }
    for (std::size_t j = 0; j < p.size(); ++j)
        EXPECT_NEAR(mean[j], p[j], 5.0 * std::sqrt(p[j] * (1 - p[j]) / (shots * reps)));
}

TEST(Records, CoordinatesAndErrors) {
    const auto basis = gell_mann_basis(2);
    const Povm x = cube_povms(2)[0];
    const auto r = make_record(x, 0, 10, 7, basis);
    EXPECT_EQ(r.povm, "x");
    EXPECT_NEAR(r.gamma0, 1.0, 1e-15);
    EXPECT_NEAR(r.gamma(0), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r.frequency(), 0.7, 1e-15);
    EXPECT_QEST_ERROR(make_record(x, 2, 10, 1, basis), ErrorKind::invalid_argument);
    EXPECT_QEST_ERROR(make_record(x, 0, 10, 11, basis), ErrorKind::invalid_argument);
    EXPECT_QEST_ERROR(make_record(x, 0, 0, 0, basis), ErrorKind::invalid_argument);
}

TEST(Records, NoiselessCarriesExactProbability) {
    Rng rng(8);
    const DensityMatrix rho = random_mixed_state(2, rng);
    const auto basis = gell_mann_basis(2);
    for (const auto &povm : cube_povms(2)) {
        const auto p = born_probabilities(rho, povm);
        const auto recs = noiseless_records(rho, povm, 100, basis);
        for (std::size_t j = 0; j < p.size(); ++j)
            EXPECT_EQ(recs[j].frequency(), p[j]);
    }
}

TEST(CubePovms, CountsLabelsAndValidity) {
    const auto q1 = cube_povms(2);
    ASSERT_EQ(q1.size(), 3u);
    for (const auto &p : q1) {
        EXPECT_EQ(p.size(), 2u);
        for (const auto &e : p.elements)
            EXPECT_NEAR((e * e - e).norm(), 0.0, 1e-14); // rank-1 projectors
    }
    const auto q2 = cube_povms(4);
    ASSERT_EQ(q2.size(), 9u);
    EXPECT_EQ(q2[1].label, "xy");
    for (int d : {2, 4, 8, 16})
        for (const auto &p : cube_povms(d)) {
            EXPECT_EQ(p.size(), static_cast<std::size_t>(d));
            EXPECT_NO_THROW(validate_povm(p));
        }
    EXPECT_QEST_ERROR(cube_povms(3), ErrorKind::unsupported);
    EXPECT_QEST_ERROR(cube_povms(32), ErrorKind::unsupported);
}

TEST(CubePovms, OutcomeBitOrder) {
    // "xz" outcome 1: first qubit |+x>, second qubit |1>.
    const Povm xz = cube_povms(4)[2];
    ASSERT_EQ(xz.label, "xz");
    CVector plus(2), one(2);
    plus << 1, 1;
    one << 0, 1;
    const CVector ket = Eigen::kroneckerProduct(plus / std::sqrt(2.0), one).eval();
    EXPECT_LT(max_diff(xz.elements[1], ket * ket.adjoint()), 1e-14);
}

TEST(PairPovms, ValidAndInformationallyComplete) {
    for (int d : {2, 3, 5, 6}) {
        const auto povms = pair_povms(d);
        EXPECT_EQ(povms.size(), static_cast<std::size_t>(1 + d * (d - 1)));
        const auto basis = gell_mann_basis(d);
        RMatrix x(0, d * d - 1);
        for (const auto &p : povms) {
            EXPECT_NO_THROW(validate_povm(p));
            for (const auto &e : p.elements) {
                x.conservativeResize(x.rows() + 1, Eigen::NoChange);
                x.row(x.rows() - 1) = operator_coordinates(e, basis).second.transpose();
            }
        }
        Eigen::FullPivLU<RMatrix> lu(x);
        EXPECT_EQ(lu.rank(), d * d - 1) << "d=" << d;
    }
    EXPECT_EQ(measurement_catalog(3).front().label, "z");
    EXPECT_EQ(measurement_catalog(4).front().label, "xx");
}

TEST(Mse, ClosedFormAndSymmetry) {
    const auto zero = PureState::basis(2, 0).density();
    const auto one = PureState::basis(2, 1).density();
    EXPECT_NEAR(mse(zero, zero), 0.0, 1e-15);
    EXPECT_NEAR(mse(zero, one), 2.0, 1e-15);
    Rng rng(9);
    const auto a = random_mixed_state(3, rng), b = random_mixed_state(3, rng);
    EXPECT_NEAR(mse(a, b), mse(b, a), 1e-15);
}

TEST(RandomStates, ArePhysical) {
    Rng rng(10);
    for (int d = 2; d <= 6; ++d) {
        EXPECT_NEAR(haar_pure_state(d, rng).density().purity(), 1.0, 1e-12);
        const auto rho = random_mixed_state(d, rng);
        EXPECT_LE(rho.purity(), 1.0 + 1e-12);
    }
}

} // namespace
} // namespace qest
