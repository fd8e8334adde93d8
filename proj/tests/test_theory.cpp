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
#include <numbers>
#include <vector>

#include "ucs/rng.hpp"
#include "ucs/theory.hpp"

namespace ucs {
namespace {

// Replays the Gaussian draws the Monte Carlo kernels consume: block b of
// kWidthBlock samples comes from stream (seed, b, kWidthSample).
template <typename PerSample>
std::vector<double> replay_samples(Index dim, long long samples, std::uint64_t seed,
                                   PerSample&& per_sample) {
  std::vector<double> out;
  for (long long b = 0; b * kWidthBlock < samples; ++b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b), StreamPurpose::kWidthSample);
    const long long count = std::min(kWidthBlock, samples - b * kWidthBlock);
    for (long long s = 0; s < count; ++s) out.push_back(per_sample(rng.normal_vector(dim)));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Expected squared distance of g to t times the l1 subdifferential at an
// s-sparse point of R^n, minimised over t: the statistical dimension of the
// l1 descent cone. Width w satisfies w^2 <= delta <= w^2 + 1.
double l1_statistical_dimension(Index n, Index s) {
  auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  auto tail = [](double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); };
  auto d = [&](double t) {
    const double off = 2.0 * ((1.0 + t * t) * tail(t) - t * phi(t));
    return static_cast<double>(s) * (1.0 + t * t) + static_cast<double>(n - s) * off;
  };
  double best = d(0.0);
  for (double t = 0.0; t < 10.0; t += 1e-5) best = std::min(best, d(t));
  return best;
}

TEST(SupportUnionWidth, SingleWindowMatchesGaussNormOfItsSize) {
  for (const Index size : {1, 4, 16}) {
    const std::vector<SupportWindow> w = {{3, 3 + size - 1}};
    const WidthEstimate est = width_support_union(w, 32, 20000, 5);
    EXPECT_NEAR(est.mean, expected_gauss_norm(size), 4.0 * est.std_error) << size;
    EXPECT_EQ(est.samples, 20000);
  }
}

TEST(SupportUnionWidth, UnionMatchesReplayedMaximum) {
  const auto windows = sliding_windows(24, 3);
  const WidthEstimate est = width_support_union(windows, 24, 3000, 8);
  const auto values = replay_samples(24, 3000, 8, [&](const Vector& g) {
    double best = 0.0;
    for (const auto& w : windows) best = std::max(best, g.segment(w.first, w.size()).norm());
    return best;
  });
  EXPECT_NEAR(est.mean, mean_of(values), 1e-12);
  EXPECT_GT(est.mean, expected_gauss_norm(4));
  EXPECT_LT(est.mean, expected_gauss_norm(24));
}

TEST(PairWidths, DiagonalAndDisjointPairsMatchGaussNorms) {
  const std::vector<SupportWindow> w = {{0, 7}, {4, 11}, {16, 23}};
  const PairWidths pw = width_difference_cones(w, 32, 20000, 3);
  ASSERT_EQ(pw.num_pairs(), 6u);
  EXPECT_EQ(&pw.at(0, 2), &pw.at(2, 0));
  auto near = [&](Index i, Index j, long long m) {
    const WidthEstimate& e = pw.at(i, j);
    EXPECT_NEAR(e.mean, expected_gauss_norm(m), 4.0 * e.std_error) << i << "," << j;
  };
  near(0, 0, 8);
  near(1, 1, 8);
  near(0, 1, 12);  // overlap of four coordinates
  near(0, 2, 16);
  near(1, 2, 16);
  EXPECT_THROW(pw.at(0, 3), InvalidArgument);
  EXPECT_EQ(PairWidths::packed_index(3, 1, 2), 4u);
  EXPECT_EQ(PairWidths::packed_index(3, 2, 1), 4u);
}

TEST(TangentConeWidth, RespectsStatisticalDimensionSandwich) {
  for (const Index s : {1, 4, 10}) {
    Vector x = Vector::Zero(40);
    for (Index j = 0; j < s; ++j) x[3 * j] = (j % 2 == 0) ? 1.0 : -2.0;
    const WidthEstimate est = width_tangent_cone(x, 20000, 21);
    const double delta = l1_statistical_dimension(40, s);
    // The mean of w is below sqrt(E w^2); Jensen gap is at most 1 here.
    const double slack = 4.0 * est.std_error * 2.0 * est.mean;
    EXPECT_LE(est.mean * est.mean, delta + slack) << "s=" << s;
    EXPECT_GE(est.mean * est.mean, delta - 2.0 - slack) << "s=" << s;
  }
}

TEST(TangentConeWidth, DenseReferenceGivesLineWidth) {
  // With full support the cone is a halfspace-like set {v : <sign, v> <= 0};
  // the squared distance minimiser is the projection onto the sign line.
  const Vector x = Vector::Ones(6);
  const WidthEstimate est = width_tangent_cone(x, 5000, 4);
  const auto values = replay_samples(6, 5000, 4, [&](const Vector& g) {
    const Vector u = x / x.norm();
    const double along = std::max(0.0, g.dot(u));
    return std::sqrt(g.squaredNorm() - along * along);
  });
  EXPECT_NEAR(est.mean, mean_of(values), 1e-6);
  EXPECT_THROW(width_tangent_cone(Vector::Zero(3), 1000, 1), InvalidArgument);
}

TEST(SetWidth, WindowSetsMatchSupportUnionOnSameDraws) {
  const auto windows = sliding_windows(12, 2);
  std::vector<ConvexSet> sets;
  for (const auto& w : windows) sets.push_back(ConvexSet::window(12, w.first, w.last));
  const WidthEstimate a = width_sets(sets, 600, 9);
  const WidthEstimate b = width_support_union(windows, 12, 600, 9);
  EXPECT_NEAR(a.mean, b.mean, 1e-9);
}

TEST(SetWidth, HalfspaceAndBallMatchClosedForms) {
  const Vector normal = (Vector(5) << 1.0, -2.0, 0.5, 0.0, 3.0).finished();
  const std::vector<ConvexSet> half = {ConvexSet::halfspace(normal, 0.0)};
  const WidthEstimate h = width_sets(half, 800, 12);
  const Vector u = normal.normalized();
  const auto hv = replay_samples(5, 800, 12, [&](const Vector& g) {
    return (g - std::max(0.0, g.dot(u)) * u).norm();
  });
  EXPECT_NEAR(h.mean, mean_of(hv), 1e-7);

  const std::vector<ConvexSet> ball = {ConvexSet::ball(Vector::Zero(5), 3.0)};
  const WidthEstimate bw = width_sets(ball, 800, 12);
  const auto bv = replay_samples(5, 800, 12, [](const Vector& g) { return g.norm(); });
  EXPECT_NEAR(bw.mean, mean_of(bv), 1e-9);
}

TEST(Execution, SerialAndParallelAreBitIdentical) {
  const auto windows = sliding_windows(32, 4);
  const WidthEstimate us = width_support_union(windows, 32, 10000, 2, Execution::kSerial);
  const WidthEstimate up = width_support_union(windows, 32, 10000, 2, Execution::kParallel);
  EXPECT_EQ(us.mean, up.mean);
  EXPECT_EQ(us.std_error, up.std_error);

  const PairWidths ps = width_difference_cones(windows, 32, 3000, 2, Execution::kSerial);
  const PairWidths pp = width_difference_cones(windows, 32, 3000, 2, Execution::kParallel);
  EXPECT_EQ(ps.means(), pp.means());

  Vector x = Vector::Zero(32);
  x.head(4).setOnes();
  const WidthEstimate ts = width_tangent_cone(x, 5000, 2, Execution::kSerial);
  const WidthEstimate tp = width_tangent_cone(x, 5000, 2, Execution::kParallel);
  EXPECT_EQ(ts.mean, tp.mean);
  EXPECT_EQ(ts.std_error, tp.std_error);
}

TEST(Execution, InputsAreValidated) {
  const std::vector<SupportWindow> bad = {{0, 40}};
  EXPECT_THROW(width_support_union(bad, 32, 1000, 1), InvalidArgument);
  EXPECT_THROW(width_support_union(sliding_windows(8, 2), 8, 10, 1), InvalidArgument);
  EXPECT_THROW(width_sets(std::vector<ConvexSet>{}, 100, 1), InvalidArgument);
  EXPECT_THROW(sliding_windows(4, 4), InvalidArgument);
  EXPECT_EQ(sliding_windows(64, 8).size(), 56u);
}

TEST(Bounds, MatchHandEvaluatedValues) {
  // a = 10, omega = 4: exp(-36 / 2).
  EXPECT_NEAR(p1_bound(10.0, 4.0), std::exp(-18.0), 1e-22);
  EXPECT_EQ(p1_bound(3.0, 4.0), 1.0);
  EXPECT_EQ(p1_bound(4.0, 4.0), 1.0);
  // eps = 0.25, a = 20: 1.5 exp(-12.5) + exp(-(10 - 3)^2 / 2) + exp(-(10 - 4)^2 / 2).
  const std::vector<double> pairs = {3.0, 4.0};
  EXPECT_NEAR(p2_bound(20.0, pairs, 0.25),
              1.5 * std::exp(-12.5) + std::exp(-24.5) + std::exp(-18.0), 1e-18);
  // One pair width above (1 - 2 eps) a_M makes the bound vacuous.
  const std::vector<double> wide = {3.0, 10.5};
  EXPECT_EQ(p2_bound(20.0, wide, 0.25), 1.0);
  EXPECT_THROW(p2_bound(20.0, pairs, 0.5), InvalidArgument);
  EXPECT_THROW(p2_bound(20.0, pairs, 0.0), InvalidArgument);
}

TEST(Bounds, ReportCombinesBothBounds) {
  const std::vector<double> pairs(10, 4.0);
  const BoundReport r = uniqueness_lower_bound(400, 5.0, pairs, 0.2);
  EXPECT_EQ(r.a_m, expected_gauss_norm(400));
  EXPECT_EQ(r.pr_e_lower, 1.0 - std::min(r.p1_bound, r.p2_bound));
  EXPECT_GE(r.pr_e_lower, 0.0);
  EXPECT_LE(r.pr_e_lower, 1.0);
}

TEST(Bounds, WindowExampleDisplayFormula) {
  // N = 64, K = 8: every pair difference cone is bounded by supports of size
  // 2K, and there are at most N^2 / 2 pairs.
  const long long n = 64;
  const long long k = 8;
  const double eps = 0.25;
  const double omega = expected_gauss_norm(2 * k);
  const std::vector<double> pairs(static_cast<std::size_t>(n * n / 2), omega);
  for (const long long m : {50LL, 200LL, 1000LL}) {
    const double a = expected_gauss_norm(m);
    const double p1 = a < omega ? 1.0 : std::exp(-0.5 * (a - omega) * (a - omega));
    double p2 = 1.0;
    if ((1.0 - 2.0 * eps) * a >= omega) {
      const double gap = (1.0 - 2.0 * eps) * a - omega;
      p2 = std::min(1.0, 1.5 * std::exp(-0.5 * eps * eps * a * a) +
                             static_cast<double>(n * n / 2) * std::exp(-0.5 * gap * gap));
    }
    const BoundReport r = uniqueness_lower_bound(m, omega, pairs, eps);
    EXPECT_NEAR(r.pr_e_lower, 1.0 - std::min(p1, p2), 1e-12) << "M=" << m;
  }
}

TEST(MinMeasurements, ReturnsSmallestQualifyingM) {
  const std::vector<double> pairs(20, 3.0);
  const MeasurementSearch s = min_measurements(4.0, pairs, 0.25, 0.9);
  auto constrained_ok = [&](long long m) {
    return uniqueness_lower_bound(m, 4.0, pairs, 0.25).pr_e_lower >= 0.9;
  };
  auto unconstrained_ok = [&](long long m) {
    return 1.0 - p1_bound(expected_gauss_norm(m), 4.0) >= 0.9;
  };
  EXPECT_TRUE(constrained_ok(s.constrained));
  EXPECT_FALSE(constrained_ok(s.constrained - 1));
  EXPECT_TRUE(unconstrained_ok(s.unconstrained));
  EXPECT_FALSE(unconstrained_ok(s.unconstrained - 1));
  EXPECT_GE(s.savings(), 0);
  EXPECT_THROW(min_measurements(4.0, pairs, 0.25, 1.5), InvalidArgument);
}

TEST(MinMeasurements, GaussNormThreshold) {
  const long long m = min_m_for_gauss_norm(10.0);
  EXPECT_GE(expected_gauss_norm(m), 10.0);
  EXPECT_LT(expected_gauss_norm(m - 1), 10.0);
  EXPECT_EQ(min_m_for_gauss_norm(0.0), 1);
  // a_M ~ sqrt(M) never reaches 1e6 below the 2^32 search cap.
  EXPECT_THROW(min_m_for_gauss_norm(1e6), CapacityError);
}

}  // namespace
}  // namespace ucs
