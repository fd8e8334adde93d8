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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ucs/core.hpp"
#include "ucs/sets.hpp"

namespace ucs {

/// Monte Carlo kernels run either on one thread in block order or spread over
/// OpenMP threads. Both produce bit-identical results: every block of
/// kWidthBlock samples draws from its own counter stream keyed by
/// (seed, block) and block summaries are merged pairwise in block order.
enum class Execution { kSerial, kParallel };

inline constexpr long long kDefaultWidthSamples = 20000;
inline constexpr long long kWidthBlock = 1024;

struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

/// Estimates for every unordered pair i <= j, stored packed row by row.
class PairWidths {
 public:
  PairWidths() = default;
  PairWidths(Index num_sets, std::vector<WidthEstimate> packed);

  Index num_sets() const { return num_sets_; }
  std::size_t num_pairs() const { return packed_.size(); }
  /// Symmetric access: at(i, j) == at(j, i).
  const WidthEstimate& at(Index i, Index j) const;
  const std::vector<WidthEstimate>& packed() const { return packed_; }
  /// Means in packed order, the form p2_bound consumes.
  std::vector<double> means() const;

  static std::size_t packed_index(Index num_sets, Index i, Index j);

 private:
  Index num_sets_ = 0;
  std::vector<WidthEstimate> packed_;
};

/// E max_i ||g_{W_i}||_2: the width of the union of window subspaces
/// intersected with the unit sphere.
WidthEstimate width_support_union(std::span<const SupportWindow> windows,
                                  Index dim, long long samples,
                                  std::uint64_t seed,
                                  Execution exec = Execution::kParallel);

/// Width of each difference cone between windows i and j, E ||g_{W_i u W_j}||.
PairWidths width_difference_cones(std::span<const SupportWindow> windows,
                                  Index dim, long long samples,
                                  std::uint64_t seed,
                                  Execution exec = Execution::kParallel);

/// Upper estimate of the width of the l1 tangent cone at x_ref: per sample
/// min_{t >= 0} dist(g, t * subdifferential), by golden-section search.
WidthEstimate width_tangent_cone(const Vector& x_ref, long long samples,
                                 std::uint64_t seed,
                                 Execution exec = Execution::kParallel);

/// E max_i sup_{x in C_i, ||x|| <= 1} <g, x> for arbitrary set descriptors.
/// The inner supremum runs `ascent_steps` projected-gradient-ascent steps;
/// projections onto C_i intersected with the ball use Dykstra.
WidthEstimate width_sets(std::span<const ConvexSet> sets, long long samples,
                         std::uint64_t seed,
                         Execution exec = Execution::kParallel,
                         int ascent_steps = 500);

/// 1 if a_m < omega_t, else min(1, exp(-(a_m - omega_t)^2 / 2)).
double p1_bound(double a_m, double omega_t);

/// 1 if (1 - 2 eps) a_m < omega for any pair, else
/// min(1, 1.5 exp(-eps^2 a_m^2 / 2) + sum_pairs exp(-((1 - 2 eps) a_m - w)^2 / 2)).
double p2_bound(double a_m, std::span<const double> omega_pairs,
                double epsilon);

struct BoundReport {
  long long m = 0;
  double a_m = 0.0;
  double omega_t = 0.0;
  std::vector<double> omega_pairs;
  double epsilon = 0.0;
  double p1_bound = 1.0;
  double p2_bound = 1.0;
  double pr_e_lower = 0.0;  // 1 - min(p1, p2)
};

BoundReport uniqueness_lower_bound(long long m, double omega_t,
                                   std::span<const double> omega_pairs,
                                   double epsilon);

struct MeasurementSearch {
  long long constrained = 0;    // with the union prior: 1 - min(p1, p2)
  long long unconstrained = 0;  // tangent cone alone: 1 - p1
  long long savings() const { return unconstrained - constrained; }
};

/// Smallest M reaching pr_e_lower >= target (and the p1-only counterpart),
/// by doubling then bisection. Throws CapacityError past 2^32.
MeasurementSearch min_measurements(double omega_t,
                                   std::span<const double> omega_pairs,
                                   double epsilon, double target);

/// Smallest M with a_M >= threshold (CapacityError past 2^32).
long long min_m_for_gauss_norm(double threshold);

/// Windows {i..i+K} (0-based, inclusive), i = 0..N-K-1: the sliding-window
/// family with K+1 free coordinates each.
std::vector<SupportWindow> sliding_windows(Index n, Index k);

}  // namespace ucs
