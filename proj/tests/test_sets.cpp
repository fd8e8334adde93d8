// Copyright 2026 The ucs Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ucs/rng.hpp"
#include "ucs/sets.hpp"

namespace ucs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CounterRng test_rng(std::uint64_t id) { return CounterRng(23, id, StreamPurpose::kTest); }

// A small zoo of sets in dimension n exercising every shape.
std::vector<ConvexSet> zoo(Index n, CounterRng& rng) {
  std::vector<ConvexSet> out;
  out.push_back(ConvexSet::window(n, 1, n - 2));
  out.push_back(ConvexSet::affine(rng.normal_vector(n), 0.7));
  out.push_back(ConvexSet::halfspace(rng.normal_vector(n), -0.3));
  out.push_back(ConvexSet::box(Vector::Constant(n, -0.5), Vector::Constant(n, 0.25)));
  out.push_back(ConvexSet::ball(rng.normal_vector(n), 0.8));
  out.push_back(ConvexSet::polytope(
      n, {LinearRow{rng.normal_vector(n), -0.2, 0.4},
          LinearRow{rng.normal_vector(n), -kInf, 0.1},
          LinearRow{rng.normal_vector(n), 0.0, 0.0}}));
  out.push_back(ConvexSet::polytope(
      n, {LinearRow{rng.normal_vector(n), 1.0, 1.0}, LinearRow{rng.normal_vector(n), -1.0, -1.0}}));
  return out;
}

TEST(Projection, SatisfiesVariationalInequality) {
  CounterRng rng = test_rng(1);
  const Index n = 6;
  for (const ConvexSet& set : zoo(n, rng)) {
    for (int c = 0; c < 30; ++c) {
      const Vector x = 2.0 * rng.normal_vector(n);
      const Vector px = project_set(set, x);
      EXPECT_TRUE(contains(set, px, 1e-7)) << set.kind();
      EXPECT_NEAR((project_set(set, px) - px).norm(), 0.0, 1e-7) << set.kind();
      // Any other point of the set makes an obtuse angle with x - P x.
      const Vector z = project_set(set, 2.0 * rng.normal_vector(n));
      EXPECT_LE((x - px).dot(z - px), 1e-6 * (1.0 + (x - px).norm())) << set.kind();
    }
  }
}

TEST(Projection, IsFirmlyNonexpansive) {
  CounterRng rng = test_rng(2);
  const Index n = 5;
  for (const ConvexSet& set : zoo(n, rng)) {
    for (int c = 0; c < 30; ++c) {
      const Vector a = 2.0 * rng.normal_vector(n);
      const Vector b = 2.0 * rng.normal_vector(n);
      const Vector pa = project_set(set, a);
      const Vector pb = project_set(set, b);
      EXPECT_LE((pa - pb).squaredNorm(), (pa - pb).dot(a - b) + 1e-7) << set.kind();
    }
  }
}

TEST(Projection, ClosedFormShapesMatchCoordinateOracles) {
  const Vector x = (Vector(4) << 2.0, -3.0, 0.1, 0.5).finished();
  const ConvexSet box = ConvexSet::box(Vector::Constant(4, -1.0), Vector::Constant(4, 1.0));
  EXPECT_EQ(project_set(box, x), (Vector(4) << 1.0, -1.0, 0.1, 0.5).finished());

  const ConvexSet win = ConvexSet::window(4, 1, 2);
  EXPECT_EQ(project_set(win, x), (Vector(4) << 0.0, -3.0, 0.1, 0.0).finished());
  EXPECT_NEAR(distance(win, x), std::sqrt(4.25), 1e-15);

  const ConvexSet ball = ConvexSet::ball(Vector::Zero(4), 1.0);
  EXPECT_NEAR((project_set(ball, x) - x / x.norm()).norm(), 0.0, 1e-15);

  const ConvexSet half = ConvexSet::halfspace(Vector::Unit(4, 0), 1.5);
  EXPECT_NEAR(project_set(half, x)[0], 1.5, 1e-15);
  EXPECT_EQ(project_set(half, -x), -x);
}

TEST(Projection, EqualityPolytopeClosedFormMatchesDykstra) {
  CounterRng rng = test_rng(3);
  const Index n = 8;
  for (int c = 0; c < 10; ++c) {
    std::vector<LinearRow> rows;
    for (int r = 0; r < 3; ++r) {
      const double b = rng.normal();
      rows.push_back({rng.normal_vector(n), b, b});
    }
    const ConvexSet poly = ConvexSet::polytope(n, rows);
    ASSERT_NE(poly.equality_pinv(), nullptr);
    std::vector<Projector> projectors;
    for (const auto& row : rows) {
      projectors.emplace_back([row](const Vector& v) {
        return v - ((row.a.dot(v) - row.lo) / row.a.squaredNorm()) * row.a;
      });
    }
    const Vector x = rng.normal_vector(n);
    const Vector via_dykstra = dykstra(projectors, x, {20000, 1e-14});
    EXPECT_NEAR((project_set(poly, x) - via_dykstra).norm(), 0.0, 1e-8);
  }
}

TEST(Penalty, GradientMatchesFiniteDifferences) {
  CounterRng rng = test_rng(4);
  const Index n = 6;
  const PenaltyConfig cfg{3.5};
  for (const ConvexSet& set : zoo(n, rng)) {
    for (int c = 0; c < 5; ++c) {
      const Vector x = 2.0 * rng.normal_vector(n);
      const Vector g = penalty_grad(set, cfg, x);
      const double h = 1e-6;
      for (Index j = 0; j < n; ++j) {
        const Vector e = Vector::Unit(n, j);
        const double fd = (penalty(set, cfg, x + h * e) - penalty(set, cfg, x - h * e)) / (2 * h);
        EXPECT_NEAR(g[j], fd, 1e-4 * (1.0 + std::abs(fd))) << set.kind() << " j=" << j;
      }
    }
  }
}

TEST(Penalty, GradientIsLipschitzWithStatedConstant) {
  CounterRng rng = test_rng(5);
  const Index n = 6;
  const PenaltyConfig cfg{2.0};
  for (const ConvexSet& set : zoo(n, rng)) {
    const double l = smoothness_constant(set, cfg);
    for (int c = 0; c < 50; ++c) {
      const Vector a = 2.0 * rng.normal_vector(n);
      const Vector b = 2.0 * rng.normal_vector(n);
      EXPECT_LE((penalty_grad(set, cfg, a) - penalty_grad(set, cfg, b)).norm(),
                l * (a - b).norm() + 1e-7)
          << set.kind();
    }
  }
}

TEST(Penalty, VanishesOnSetAndFullWindowIsFree) {
  const ConvexSet win = ConvexSet::window(5, 1, 3);
  const Vector inside = (Vector(5) << 0.0, 1.0, -2.0, 3.0, 0.0).finished();
  EXPECT_EQ(penalty(win, {1.0}, inside), 0.0);
  EXPECT_EQ(penalty_grad(win, {1.0}, inside), Vector::Zero(5));
  EXPECT_EQ(smoothness_constant(ConvexSet::full_space(5), {4.0}), 0.0);
  EXPECT_EQ(smoothness_constant(win, {4.0}), 8.0);
  EXPECT_EQ(smoothness_constant(ConvexSet::ball(Vector::Zero(5), 1.0), {4.0}), 4.0);
  EXPECT_THROW(penalty(win, {0.0}, inside), InvalidArgument);
  EXPECT_THROW(penalty(win, {1.0}, Vector::Zero(4)), InvalidArgument);
}

TEST(Windows, OneBasedConstructorMatchesZeroBased) {
  const ConvexSet a = ConvexSet::window_1based(10, 3, 4);
  const auto* w = a.as<SupportWindow>();
  ASSERT_NE(w, nullptr);
  EXPECT_EQ(w->first, 2);
  EXPECT_EQ(w->last, 6);
  EXPECT_EQ(w->size(), 5);
  EXPECT_THROW(ConvexSet::window_1based(10, 8, 4), InvalidArgument);
  EXPECT_THROW(ConvexSet::window(10, 4, 3), InvalidArgument);
}

TEST(Constructors, RejectDegenerateInput) {
  EXPECT_THROW(ConvexSet::affine(Vector::Zero(3), 1.0), InvalidArgument);
  EXPECT_THROW(ConvexSet::halfspace(Vector::Ones(3), kInf), InvalidArgument);
  EXPECT_THROW(ConvexSet::box(Vector::Ones(2), Vector::Zero(2)), InvalidArgument);
  EXPECT_THROW(ConvexSet::ball(Vector::Zero(2), -1.0), InvalidArgument);
  EXPECT_THROW(ConvexSet::polytope(3, {LinearRow{Vector::Ones(2), 0.0, 1.0}}),
               InvalidArgument);
  EXPECT_THROW(ConvexSet::polytope(2, {LinearRow{Vector::Ones(2), 1.0, 0.0}}),
               InvalidArgument);
}

TEST(ProjectUnion, PicksNearestSetWithLowestIndexOnTies) {
  const std::vector<ConvexSet> sets = {ConvexSet::window(4, 0, 1), ConvexSet::window(4, 2, 3)};
  const auto [p, idx] = project_union(sets, (Vector(4) << 0.1, 0.1, 1.0, 1.0).finished());
  EXPECT_EQ(idx, 1);
  EXPECT_EQ(p, (Vector(4) << 0.0, 0.0, 1.0, 1.0).finished());
  EXPECT_EQ(project_union(sets, Vector::Ones(4)).second, 0);
  EXPECT_THROW(project_union(std::span<const ConvexSet>{}, Vector::Ones(4)), InvalidArgument);
}

TEST(Quantized, CellsContainTheSignalAndTheirIntersection) {
  CounterRng rng = test_rng(6);
  const Index n = 12;
  const Index m = 20;
  std::vector<double> edges;
  for (int k = -4; k <= 4; ++k) edges.push_back(k);  // 3 bits on [-4, 4]
  for (int c = 0; c < 10; ++c) {
    const Vector x = 0.5 * rng.normal_vector(n);
    Matrix b = rng.normal_matrix(m, n);
    Vector levels(m);
    for (Index i = 0; i < m; ++i) {
      // Rescale rows so every measurement stays inside the quantiser range.
      const double s = b.row(i).dot(x);
      if (std::abs(s) > 3.9) b.row(i) *= 3.9 / std::abs(s);
      levels[i] = static_cast<double>(quantize(edges, b.row(i).dot(x)));
    }
    const auto cells = quantized_cells(b, levels, edges);
    ASSERT_EQ(static_cast<Index>(cells.size()), m);
    for (const auto& cell : cells) EXPECT_TRUE(contains(cell, x, 1e-12));
    const ConvexSet all = intersect_linear(cells);
    EXPECT_TRUE(contains(all, x, 1e-9));
    const Vector p = project_set(all, 3.0 * rng.normal_vector(n));
    for (const auto& cell : cells) EXPECT_TRUE(contains(cell, p, 1e-6));
  }
}

TEST(Quantized, QuantizeBoundariesAndErrors) {
  const std::vector<double> edges = {-1.0, 0.0, 1.0};
  EXPECT_EQ(quantize(edges, -1.0), 0);
  EXPECT_EQ(quantize(edges, 0.0), 1);
  EXPECT_EQ(quantize(edges, 1.0), 1);
  EXPECT_THROW(quantize(edges, 1.5), InvalidArgument);
  EXPECT_THROW(quantized_cells(Matrix::Ones(1, 2), Vector::Constant(1, 2.0), edges),
               InvalidArgument);
  EXPECT_THROW(intersect_linear(std::vector<ConvexSet>{ConvexSet::window(3, 0, 1)}),
               InvalidArgument);
}

TEST(PhaseBranches, OneBranchPerSignPatternContainsTheSignal) {
  CounterRng rng = test_rng(7);
  const Index n = 6;
  const Index l = 4;
  const Vector x = rng.normal_vector(n);
  Matrix a = rng.normal_matrix(l, n);
  a.row(2) = Vector::Unit(n, 0).transpose();
  Vector xz = x;
  xz[0] = 0.0;  // makes measurement 2 vanish: that row has a single branch
  const Vector y = (a * xz).array().square().matrix();
  const auto branches = phase_retrieval_branches(a, y);
  ASSERT_EQ(branches.size(), 8u);
  std::size_t holding = 0;
  std::size_t holding_neg = 0;
  for (const auto& b : branches) {
    if (contains(b, xz, 1e-9)) ++holding;
    if (contains(b, -xz, 1e-9)) ++holding_neg;
  }
  EXPECT_EQ(holding, 1u);
  EXPECT_EQ(holding_neg, 1u);
  EXPECT_THROW(phase_retrieval_branches(rng.normal_matrix(11, n), Vector::Ones(11)),
               CapacityError);
  EXPECT_THROW(phase_retrieval_branches(a, -Vector::Ones(l)), InvalidArgument);
}

TEST(Dykstra, ProjectsOntoIntersectionOfBallAndHalfspace) {
  const ConvexSet ball = ConvexSet::ball(Vector::Zero(2), 1.0);
  const ConvexSet half = ConvexSet::halfspace((Vector(2) << 1.0, 0.0).finished(), 0.5);
  const std::vector<Projector> ps = {
      [&](const Vector& v) { return project_set(ball, v); },
      [&](const Vector& v) { return project_set(half, v); }};
  // Nearest point of {|x| <= 1, x1 <= 0.5} to (2, 0) is (0.5, 0).
  const Vector p = dykstra(ps, (Vector(2) << 2.0, 0.0).finished(), {10000, 1e-14});
  EXPECT_NEAR(p[0], 0.5, 1e-8);
  EXPECT_NEAR(p[1], 0.0, 1e-8);
  // (2, 2) projects to the corner (0.5, sqrt(0.75)).
  const Vector q = dykstra(ps, (Vector(2) << 2.0, 2.0).finished(), {10000, 1e-14});
  EXPECT_NEAR(q[0], 0.5, 1e-6);
  EXPECT_NEAR(q[1], std::sqrt(0.75), 1e-6);
}

}  // namespace
}  // namespace ucs
