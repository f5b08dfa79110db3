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


#include <numeric>

#include "test_support.hpp"

namespace qest {
namespace {

using testing::max_diff;

// Measured once at this seed and frozen.
constexpr int kFrozenEngaged = 119;

std::vector<MeasurementRecord> noiseless_catalog(const DensityMatrix &rho, const HermitianBasis &basis,
                                                 std::int64_t shots = 1000) {
    std::vector<MeasurementRecord> out;
    for (const auto &p : measurement_catalog(rho.dim())) {
        auto rs = noiseless_records(rho, p, shots, basis);
        out.insert(out.end(), rs.begin(), rs.end());
    }
    return out;
}

// Brute force: best feasible point over every support set.
RVector simplex_oracle(const RVector &v) {
    const auto n = static_cast<int>(v.size());
    RVector best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < (1 << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                sum += v(i);
                ++count;
            }
        const double shift = (1.0 - sum) / count;
        RVector cand = RVector::Zero(n);
        bool ok = true;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                cand(i) = v(i) + shift;
                ok = ok && cand(i) >= -1e-15;
            }
        if (ok && (cand - v).norm() < best_dist) {
            best_dist = (cand - v).norm();
            best = cand;
        }
    }
    return best;
}

TEST(Regression, QubitCubeHasSixRows) {
    const auto basis = gell_mann_basis(2);
    const DensityMatrix rho(CMatrix::Identity(2, 2) / 2.0);
    const auto prob = build_regression(noiseless_catalog(rho, basis), 2, basis);
    EXPECT_EQ(prob.rows(), 6);
    EXPECT_EQ(prob.x.cols(), 3);
}

TEST(Regression, EmptyAndMismatchedInputs) {
    const auto b2 = gell_mann_basis(2), b3 = gell_mann_basis(3);
    std::vector<MeasurementRecord> none;
    EXPECT_QEST_ERROR(build_regression(none, 2, b2), ErrorKind::invalid_argument);
    const DensityMatrix rho(CMatrix::Identity(2, 2) / 2.0);
    EXPECT_QEST_ERROR(build_regression(noiseless_catalog(rho, b2), 3, b3), ErrorKind::dimension_mismatch);
}

TEST(WeightedLs, NoiselessRecoveryWithZeroResidual) {
    Rng rng(1);
    for (int d : {2, 3, 4}) {
        const auto basis = gell_mann_basis(d);
        const DensityMatrix rho = random_mixed_state(d, rng);
        const auto recs = noiseless_catalog(rho, basis);
        const auto res = tomography_pipeline(recs, d, basis);
        EXPECT_LT(res.diagnostics.residual_norm, 1e-12) << "d=" << d;
        EXPECT_LT((res.theta.values - theta_from_rho(rho, basis).values).norm(), 1e-10) << "d=" << d;
        EXPECT_LT(max_diff(res.rho.matrix(), rho.matrix()), 1e-10);
        EXPECT_FALSE(res.diagnostics.projection_engaged);
    }
}

TEST(WeightedLs, MatchesNormalEquations) {
    Rng rng(2);
    const auto basis = gell_mann_basis(4);
    const DensityMatrix rho = random_mixed_state(4, rng);
    std::vector<MeasurementRecord> recs;
    for (std::size_t i = 0; i < cube_povms(4).size(); ++i) {
        auto rs = simulate_measurements(rho, cube_povms(4)[i], 500 + 100 * static_cast<std::int64_t>(i), i, basis);
        recs.insert(recs.end(), rs.begin(), rs.end());
    }
    for (auto policy : {WeightPolicy::shots, WeightPolicy::inverse_variance}) {
        const auto prob = build_regression(recs, 4, basis, policy);
        const RMatrix xtw = prob.x.transpose() * prob.w.asDiagonal();
        const RVector oracle = (xtw * prob.x).ldlt().solve(xtw * prob.y);
        EXPECT_LT((solve_weighted_ls(prob).values - oracle).norm(), 1e-9);
    }
}

TEST(WeightedLs, DuplicatingEveryRowChangesNothing) {
    Rng rng(3);
    const auto basis = gell_mann_basis(2);
    const DensityMatrix rho = random_mixed_state(2, rng);
    auto recs = simulate_povm_set(rho, cube_povms(2), 3000, 4, basis);
    const auto once = solve_weighted_ls(build_regression(recs, 2, basis));
    auto twice = recs;
    twice.insert(twice.end(), recs.begin(), recs.end());
    EXPECT_LT((solve_weighted_ls(build_regression(twice, 2, basis)).values - once.values).norm(), 1e-12);
}

TEST(WeightedLs, SingleAxisDesignIsSingular) {
    const auto basis = gell_mann_basis(2);
    const auto z_only = noiseless_records(PureState::basis(2, 0).density(), cube_povms(2)[2], 100, basis);
    try {
        (void)solve_weighted_ls(build_regression(z_only, 2, basis));
        ADD_FAILURE() << "expected singular design";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::singular_design);
        EXPECT_NE(std::string(e.what()).find("null-space dimension 2"), std::string::npos) << e.what();
    }
    EXPECT_QEST_ERROR(PreparedDesign::from(build_regression(z_only, 2, basis)), ErrorKind::singular_design);
}

TEST(WeightedLs, InverseVarianceClipsCertainOutcomes) {
    EXPECT_NEAR(regression_weight(0.0, 100, WeightPolicy::inverse_variance), 100.0 / (0.005 * 0.995), 1e-9);
    EXPECT_NEAR(regression_weight(1.0, 100, WeightPolicy::inverse_variance), 100.0 / (0.005 * 0.995), 1e-9);
    EXPECT_DOUBLE_EQ(regression_weight(0.5, 100, WeightPolicy::inverse_variance), 400.0);
    EXPECT_DOUBLE_EQ(regression_weight(0.3, 100, WeightPolicy::shots), 100.0);
    EXPECT_QEST_ERROR(parse_weight_policy("uniform"), ErrorKind::invalid_argument);
}

TEST(PreparedDesign, AgreesWithDirectFit) {
    Rng rng(5);
    for (int d : {2, 3, 4, 8}) {
        const auto basis = gell_mann_basis(d);
        const DensityMatrix rho = random_mixed_state(d, rng);
        std::vector<MeasurementRecord> recs;
        for (const auto &p : measurement_catalog(d)) {
            auto rs = simulate_measurements(rho, p, 2000, static_cast<std::uint64_t>(d), basis);
            recs.insert(recs.end(), rs.begin(), rs.end());
        }
        const auto prob = build_regression(recs, d, basis);
        const auto fit = fit_weighted_ls(prob);
        const auto pd = PreparedDesign::from(prob);
        EXPECT_LT((pd.solve(prob.y).values - fit.theta.values).norm(), 1e-10) << "d=" << d;
        EXPECT_NEAR(pd.condition_number / fit.condition_number, 1.0, 1e-9);
    }
}

TEST(Simplex, ClosedFormExamples) {
    EXPECT_LT((project_to_simplex((RVector(2) << 1.2, -0.2).finished()) - (RVector(2) << 1.0, 0.0).finished())
                  .norm(),
              1e-15);
    EXPECT_LT((project_to_simplex((RVector(3) << 0.7, 0.5, -0.2).finished()) -
               (RVector(3) << 0.6, 0.4, 0.0).finished())
                  .norm(),
              1e-15);
    const RVector feasible = (RVector(3) << 0.2, 0.3, 0.5).finished();
    EXPECT_EQ(project_to_simplex(feasible), feasible);
}

TEST(Simplex, AgreesWithSubsetEnumeration) {
    Rng rng(6);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + trial % 6;
        RVector v(n);
        for (int i = 0; i < n; ++i)
            v(i) = normal(rng);
        v.array() += (1.0 - v.sum()) / n;
        const RVector got = project_to_simplex(v);
        EXPECT_LT((got - simplex_oracle(v)).norm(), 1e-12) << v.transpose();
        EXPECT_NEAR(got.sum(), 1.0, 1e-12);
        EXPECT_GE(got.minCoeff(), 0.0);
    }
}

TEST(Projection, PhysicalInputIsFixed) {
    Rng rng(7);
    for (int d = 2; d <= 5; ++d) {
        const DensityMatrix rho = random_mixed_state(d, rng);
        EXPECT_LT(max_diff(project_physical(rho.matrix()).matrix(), rho.matrix()), 1e-12);
    }
}

TEST(Projection, OutsideBlochBallLandsOnSurface) {
    const auto basis = gell_mann_basis(2);
    const ThetaVector theta{2, (RVector(3) << 0.0, 0.0, 0.9).finished(), basis.id};
    const DensityMatrix rho = project_physical(rho_from_theta(theta, basis));
    EXPECT_NEAR(rho.purity(), 1.0, 1e-12);
    EXPECT_NEAR(rho.matrix()(0, 0).real(), 1.0, 1e-12);
}

TEST(Pipeline, ProjectionEngagesOnPureStatesAtModestN) {
    const int trials = 200;
    int engaged = 0;
    const auto basis = gell_mann_basis(2);
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(31, {static_cast<std::uint64_t>(t), 0}));
        const DensityMatrix truth = haar_pure_state(2, rng).density();
        const auto recs = simulate_povm_set(truth, cube_povms(2), 300, derive_seed(31, {static_cast<std::uint64_t>(t), 1}),
                                            basis);
        engaged += tomography_pipeline(recs, 2, basis).diagnostics.projection_engaged ? 1 : 0;
    }
    EXPECT_GT(engaged, trials / 2);
    EXPECT_EQ(engaged, kFrozenEngaged);
}

TEST(Pipeline, MillionCopiesGiveSmallError) {
    const auto basis = gell_mann_basis(2);
    double total = 0.0;
    for (int t = 0; t < 50; ++t) {
        Rng rng(derive_seed(41, {static_cast<std::uint64_t>(t), 0}));
        const DensityMatrix truth = random_mixed_state(2, rng);
        const auto recs = simulate_povm_set(truth, cube_povms(2), 1000000,
                                            derive_seed(41, {static_cast<std::uint64_t>(t), 1}), basis);
        total += mse(tomography_pipeline(recs, 2, basis).rho, truth);
    }
    EXPECT_LT(total / 50.0, 1e-4);
}

TEST(Pipeline, DeterministicForFixedSeed) {
    const auto basis = gell_mann_basis(4);
    Rng rng(8);
    const DensityMatrix truth = random_mixed_state(4, rng);
    const auto a = tomography_pipeline(simulate_povm_set(truth, cube_povms(4), 9000, 12, basis), 4, basis);
    const auto b = tomography_pipeline(simulate_povm_set(truth, cube_povms(4), 9000, 12, basis), 4, basis);
    EXPECT_EQ(a.theta.values, b.theta.values);
}

TEST(SplitCopies, EvenSpread) {
    EXPECT_EQ(split_copies(10, 3), (std::vector<std::int64_t>{4, 3, 3}));
    EXPECT_EQ(split_copies(9, 3), (std::vector<std::int64_t>{3, 3, 3}));
    const DensityMatrix rho(CMatrix::Identity(2, 2) / 2.0);
    EXPECT_QEST_ERROR(simulate_povm_set(rho, cube_povms(2), 2, 0, gell_mann_basis(2)), ErrorKind::invalid_argument);
}

} // namespace
} // namespace qest
