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
using testing::pauli;

TEST(GellMann, OrthonormalTracelessHermitian) {
    for (int d = 2; d <= 6; ++d) {
        const auto basis = gell_mann_basis(d);
        ASSERT_EQ(basis.size(), static_cast<std::size_t>(d * d - 1));
        EXPECT_EQ(basis.id, "gell-mann-" + std::to_string(d));
        for (std::size_t i = 0; i < basis.size(); ++i) {
            EXPECT_TRUE(is_hermitian(basis[i], 1e-14));
            EXPECT_NEAR(std::abs(basis[i].trace()), 0.0, 1e-14);
            for (std::size_t j = 0; j < basis.size(); ++j)
                EXPECT_NEAR(std::abs((basis[i] * basis[j]).trace() - Complex(i == j, 0)), 0.0, 1e-13);
        }
    }
}

TEST(GellMann, QubitIsScaledPaulis) {
    const auto basis = gell_mann_basis(2);
    const double s = 1.0 / std::sqrt(2.0);
    EXPECT_LT(max_diff(basis[0], s * pauli('x')), 1e-15);
    EXPECT_LT(max_diff(basis[1], s * pauli('y')), 1e-15);
    EXPECT_LT(max_diff(basis[2], s * pauli('z')), 1e-15);
}

TEST(GellMann, RejectsDimensionBelowTwo) {
    EXPECT_QEST_ERROR(gell_mann_basis(1), ErrorKind::invalid_dimension);
    EXPECT_QEST_ERROR(gell_mann_basis(0), ErrorKind::invalid_dimension);
}

TEST(Vec, ColumnStacking) {
    CMatrix a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    const CVector v = vec(a);
    const double expected[] = {1, 4, 2, 5, 3, 6};
    for (int i = 0; i < 6; ++i)
        EXPECT_EQ(v(i), Complex(expected[i], 0));
    EXPECT_EQ(vec_inv(v, 2, 3), a);

    CMatrix b(2, 2);
    b << 1, 3, 2, 4;
    EXPECT_EQ(vec(b), (CVector(4) << 1, 2, 3, 4).finished());
    CMatrix c(1, 1);
    c << Complex(2, -1);
    EXPECT_EQ(vec(c)(0), Complex(2, -1));
}

TEST(Vec, RoundTripAndMismatch) {
    Rng rng(3);
    const CMatrix a = ginibre(4, 4, rng);
    EXPECT_EQ(vec_inv(vec(a)), a);
    EXPECT_QEST_ERROR(vec_inv(CVector::Zero(5), 2, 3), ErrorKind::dimension_mismatch);
}

TEST(Vec, KroneckerIdentity) {
    // vec(A X B) = (B^T kron A) vec(X)
    Rng rng(5);
    const CMatrix a = ginibre(3, 3, rng), x = ginibre(3, 3, rng), b = ginibre(3, 3, rng);
    const CMatrix k = Eigen::kroneckerProduct(b.transpose(), a).eval();
    EXPECT_LT((vec(a * x * b) - k * vec(x)).norm(), 1e-12);
}

TEST(HermExpm, PauliClosedForm) {
    for (double s : {0.0, 0.3, 1.0, 2.5}) {
        const CMatrix expected = std::cos(s) * CMatrix::Identity(2, 2) - kI * std::sin(s) * pauli('x');
        EXPECT_LT(max_diff(herm_expm(pauli('x'), s), expected), 1e-14);
    }
}

TEST(HermExpm, MatchesTaylorOracle) {
    Rng rng(11);
    for (int d = 2; d <= 6; ++d) {
        const CMatrix h = random_hermitian(d, rng);
        EXPECT_LT(max_diff(herm_expm(h, 0.7), testing::taylor_expm(h, 0.7)), 1e-11) << "d=" << d;
    }
}

TEST(HermExpm, ZeroTimeAndGroupProperty) {
    Rng rng(13);
    const CMatrix h = random_hermitian(4, rng);
    EXPECT_LT(max_diff(herm_expm(h, 0.0), CMatrix::Identity(4, 4)), 1e-14);
    EXPECT_LT(max_diff(herm_expm(h, 0.4) * herm_expm(h, 1.1), herm_expm(h, 1.5)), 1e-9);
    EXPECT_LT(max_diff(herm_expm(pauli('z'), std::numbers::pi), -CMatrix::Identity(2, 2)), 1e-14);
}

TEST(HermExpm, UnitaryAndRejectsNonHermitian) {
    Rng rng(12);
    const CMatrix h = random_hermitian(5, rng);
    EXPECT_TRUE(is_unitary(herm_expm(h, 3.0), 1e-12));
    CMatrix bad = h;
    bad(0, 1) += 0.1;
    EXPECT_QEST_ERROR(herm_expm(bad, 1.0), ErrorKind::contract_violation);
}

TEST(NearestUnitary, FixesUnitaryInput) {
    Rng rng(21);
    const CMatrix u = random_unitary(4, rng);
    EXPECT_LT(max_diff(nearest_unitary(u), u), 1e-12);
}

TEST(NearestUnitary, IsClosestAmongRandomUnitaries) {
    Rng rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const CMatrix s = ginibre(3, 3, rng);
        const CMatrix g = nearest_unitary(s);
        ASSERT_TRUE(is_unitary(g, 1e-12));
        const double best = (g - s).norm();
        for (int k = 0; k < 200; ++k)
            EXPECT_LE(best, (random_unitary(3, rng) - s).norm() + 1e-12);
    }
}

TEST(NearestUnitary, ScaleInvariant) {
    Rng rng(23);
    const CMatrix s = ginibre(3, 3, rng);
    EXPECT_LT(max_diff(nearest_unitary(3.7 * s), nearest_unitary(s)), 1e-12);
}

TEST(NearestUnitary, RankDeficientIsAmbiguous) {
    CMatrix s = CMatrix::Zero(2, 2);
    s(0, 0) = 1.0;
    EXPECT_QEST_ERROR(nearest_unitary(s), ErrorKind::ambiguity);
}

TEST(UnitaryLog, RoundTripBelowBranchCut) {
    Rng rng(31);
    for (int d = 2; d <= 5; ++d) {
        for (int trial = 0; trial < 20; ++trial) {
            const double t = 0.5 + trial * 0.1;
            const CMatrix h = random_traceless_hermitian(d, 0.9 * std::numbers::pi / t, rng);
            const auto log = unitary_log(herm_expm(h, t), t);
            EXPECT_FALSE(log.branch_ambiguous);
            EXPECT_LT(max_diff(log.generator, h), 1e-10);
        }
    }
}

TEST(UnitaryLog, IdentityGivesZero) {
    EXPECT_LT(max_abs(unitary_log(CMatrix::Identity(3, 3), 0.7).generator), 1e-15);
}

TEST(UnitaryLog, SigmaZRoundTrip) {
    EXPECT_LT(max_diff(unitary_log(herm_expm(pauli('z'), 0.3), 0.3).generator, pauli('z')), 1e-9);
}

TEST(UnitaryLog, GlobalPhaseAbsorbedByTracelessConvention) {
    Rng rng(32);
    const CMatrix h = random_traceless_hermitian(3, 0.8, rng);
    const CMatrix u = std::exp(kI * 0.4) * herm_expm(h, 1.0);
    EXPECT_LT(max_diff(unitary_log(u, 1.0).generator, h), 1e-10);
}

TEST(UnitaryLog, FlagsEigenphaseAtBranchCut) {
    const CMatrix u = herm_expm(pauli('z'), std::numbers::pi); // eigenphases -pi, pi
    EXPECT_TRUE(unitary_log(u, 1.0).branch_ambiguous);
}

TEST(UnitaryLog, RejectsBadInput) {
    EXPECT_QEST_ERROR(unitary_log(CMatrix::Identity(2, 2), 0.0), ErrorKind::invalid_argument);
    EXPECT_QEST_ERROR(unitary_log(2.0 * CMatrix::Identity(2, 2), 1.0), ErrorKind::contract_violation);
}

TEST(Predicates, HermitianUnitaryPsd) {
    EXPECT_TRUE(is_hermitian(pauli('y'), 1e-15));
    EXPECT_FALSE(is_hermitian(kI * pauli('y'), 1e-10));
    EXPECT_TRUE(is_unitary(pauli('y'), 1e-15));
    EXPECT_TRUE(is_psd(CMatrix::Identity(2, 2), 1e-12));
    EXPECT_FALSE(is_psd(pauli('z'), 1e-12));
    CMatrix rect(2, 3);
    rect.setZero();
    EXPECT_FALSE(is_hermitian(rect, 1.0));
}

TEST(TraceProduct, MatchesProductTrace) {
    Rng rng(41);
    const CMatrix a = ginibre(5, 5, rng), b = ginibre(5, 5, rng);
    EXPECT_LT(std::abs(trace_product(a, b) - (a * b).trace()), 1e-12);
}

TEST(RandomMatrices, HaarUnitaryAndScaledHermitian) {
    Rng rng(51);
    EXPECT_TRUE(is_unitary(random_unitary(6, rng), 1e-12));
    const CMatrix h = random_traceless_hermitian(4, 2.5, rng);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 2.5, 1e-12);
    EXPECT_NEAR(std::abs(h.trace()), 0.0, 1e-12);
}

TEST(Seeds, DerivedStreamsDifferAndRepeat) {
    EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
    EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
    EXPECT_NE(derive_seed(1, {0}), derive_seed(2, {0}));
    EXPECT_NE(derive_seed(1, {}), derive_seed(1, {0}));
}

} // namespace
} // namespace qest
