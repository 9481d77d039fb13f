// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

namespace isac::conic {
namespace {

AffineForm block_form(int n_blocks, int b, const CMatrix& c, double constant = 0.0) {
    AffineForm f;
    f.blocks.assign(n_blocks, CMatrix());
    f.blocks[b] = c;
    f.constant = constant;
    return f;
}

TEST(Layout, PackUnpackRoundTrip) {
    RngStream rng(1, "layout");
    const Layout lay({3, 2}, 2);
    EXPECT_EQ(lay.size(), 9 + 4 + 2);
    Point p;
    p.blocks = {testing::random_psd(3, 3, 1.0, rng), testing::random_psd(2, 1, 2.0, rng)};
    p.scalars = RVector::Constant(2, 0.25);
    const Point q = lay.unpack(lay.pack(p));
    EXPECT_LT((q.blocks[0] - p.blocks[0]).norm(), 1e-15);
    EXPECT_LT((q.blocks[1] - p.blocks[1]).norm(), 1e-15);
    EXPECT_EQ(q.scalars, p.scalars);
}

TEST(Layout, CoefficientsReproduceTraceInnerProduct) {
    RngStream rng(2, "layout");
    const Layout lay({4}, 0);
    for (int i = 0; i < 20; ++i) {
        CMatrix c(4, 4);
        for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s) c(r, s) = rng.complex_normal();
        c = hermitian_part(c);
        const CMatrix x = testing::random_psd(4, 2, 1.0, rng);
        AffineForm f = block_form(1, 0, c);
        EXPECT_NEAR(lay.to_vector(f).dot(lay.pack(Point{{x}, RVector()})), (c * x).trace().real(), 1e-12);
    }
}

TEST(Maximize, ScalarLogHitsBudget) {
    // max log(x) s.t. x <= 1
    Problem p;
    p.block_dims = {1};
    p.log_terms.push_back({1.0, block_form(1, 0, CMatrix::Ones(1, 1))});
    p.inequalities.push_back(block_form(1, 0, -CMatrix::Ones(1, 1), 1.0));
    const Result r = maximize(p, Point{{CMatrix::Constant(1, 1, 0.5)}, RVector()});
    EXPECT_EQ(r.status, Status::Optimal);
    EXPECT_NEAR(r.x.blocks[0](0, 0).real(), 1.0, 1e-6);
    EXPECT_NEAR(r.objective, 0.0, 1e-6);
}

TEST(Maximize, InteriorStationaryPoint) {
    // max log(1 + a s) - b s over 0 <= s <= 1: s* = 1/b - 1/a when inside.
    for (auto [a, b] : {std::pair{10.0, 2.0}, std::pair{4.0, 0.5}, std::pair{3.0, 5.0}}) {
        Problem p;
        p.n_scalars = 1;
        AffineForm arg;
        arg.scalars = RVector::Constant(1, a);
        arg.constant = 1.0;
        p.log_terms.push_back({1.0, arg});
        p.linear.scalars = RVector::Constant(1, -b);
        AffineForm lo, hi;
        lo.scalars = RVector::Constant(1, 1.0);
        hi.scalars = RVector::Constant(1, -1.0);
        hi.constant = 1.0;
        p.inequalities = {lo, hi};
        const Result r = maximize(p, Point{{}, RVector::Constant(1, 0.5)});
        const double s_star = std::clamp(1.0 / b - 1.0 / a, 0.0, 1.0);
        const double f_star = std::log(1.0 + a * s_star) - b * s_star;
        EXPECT_EQ(r.status, Status::Optimal);
        EXPECT_NEAR(r.objective, f_star, 1e-6 * std::max(1.0, std::abs(f_star)));
    }
}

TEST(Maximize, TraceLogConcentratesOnTopEigenvector) {
    // max log tr(A X) s.t. tr X <= 1, X PSD -> log lambda_max(A).
    RngStream rng(3, "eig");
    for (int i = 0; i < 5; ++i) {
        const CMatrix a = testing::random_psd(4, 4, 4.0, rng);
        Problem p;
        p.block_dims = {4};
        p.log_terms.push_back({1.0, block_form(1, 0, a)});
        p.inequalities.push_back(block_form(1, 0, -CMatrix::Identity(4, 4), 1.0));
        const Result r = maximize(p, Point{{CMatrix::Identity(4, 4) * 0.2}, RVector()});
        EXPECT_NEAR(r.objective, std::log(max_eigenvalue(a)), 1e-6);
        EXPECT_GE(min_eigenvalue(r.x.blocks[0]), -1e-12);
    }
}

TEST(Maximize, ObjectiveAtMatchesResult) {
    Problem p;
    p.block_dims = {2};
    p.log_terms.push_back({2.0, block_form(1, 0, CMatrix::Identity(2, 2), 1.0)});
    p.linear = block_form(1, 0, -0.5 * CMatrix::Identity(2, 2));
    p.inequalities.push_back(block_form(1, 0, -CMatrix::Identity(2, 2), 3.0));
    const Result r = maximize(p, Point{{CMatrix::Identity(2, 2) * 0.1}, RVector()});
    EXPECT_NEAR(objective_at(p, r.x), r.objective, 1e-12);
    // 2 log(1 + t) - t/2 with t = tr X <= 3: stationary at t = 3.
    EXPECT_NEAR(r.objective, 2.0 * std::log(4.0) - 1.5, 1e-6);
}

TEST(PhaseOne, FindsInteriorPoint) {
    Problem p;
    p.block_dims = {2};
    p.inequalities.push_back(block_form(1, 0, CMatrix::Identity(2, 2), -0.5)); // tr X >= 0.5
    p.inequalities.push_back(block_form(1, 0, -CMatrix::Identity(2, 2), 1.0)); // tr X <= 1
    const Point hint{{CMatrix::Identity(2, 2) * 0.01}, RVector()};
    EXPECT_FALSE(strictly_feasible(p, hint));
    const auto x = find_strictly_feasible(p, hint);
    ASSERT_TRUE(x.has_value());
    EXPECT_TRUE(strictly_feasible(p, *x));
}

TEST(PhaseOne, ReportsInfeasibility) {
    Problem p;
    p.block_dims = {2};
    p.inequalities.push_back(block_form(1, 0, CMatrix::Identity(2, 2), -2.0)); // tr X >= 2
    p.inequalities.push_back(block_form(1, 0, -CMatrix::Identity(2, 2), 1.0)); // tr X <= 1
    EXPECT_FALSE(find_strictly_feasible(p, Point{{CMatrix::Identity(2, 2) * 0.1}, RVector()}).has_value());
}

} // namespace
} // namespace isac::conic
