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

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "qest/qest.hpp"

namespace qest::testing {

inline double max_diff(const CMatrix &a, const CMatrix &b) { return max_abs(a - b); }

/// Taylor series of exp(-i s H) with scaling and squaring; independent of the
/// spectral route used by the library.
inline CMatrix taylor_expm(const CMatrix &h, double s) {
    CMatrix a = -kI * s * h;
    int squarings = 0;
    while (max_abs(a) * a.rows() > 0.5) {
        a /= 2.0;
        ++squarings;
    }
    CMatrix term = CMatrix::Identity(h.rows(), h.cols());
    CMatrix sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < squarings; ++i)
        sum = sum * sum;
    return sum;
}

inline CMatrix pauli(char axis) {
    CMatrix m = CMatrix::Zero(2, 2);
    switch (axis) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, -kI, kI, 0; break;
    case 'z': m << 1, 0, 0, -1; break;
    default: m = CMatrix::Identity(2, 2);
    }
    return m;
}

/// Equal up to a global phase.
inline double phase_distance(const CMatrix &a, const CMatrix &b) {
    const Complex overlap = (b.adjoint() * a).trace();
    const Complex phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : Complex(1.0, 0.0);
    return (a - phase * b).norm();
}

#define EXPECT_QEST_ERROR(stmt, expected_kind)                                                                  \
    do {                                                                                                        \
        try {                                                                                                   \
            stmt;                                                                                               \
            ADD_FAILURE() << "expected qest::Error";                                                            \
        } catch (const ::qest::Error &e) {                                                                      \
            EXPECT_EQ(e.kind(), expected_kind) << e.what();                                                     \
        }                                                                                                       \
    } while (0)

} // namespace qest::testing
