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

#include "ucs/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ucs/rng.hpp"

namespace ucs {
namespace {

constexpr long long kMaxSearchM = 1LL << 32;

// Running count / mean / sum of squared deviations (Welford), merged with
// Chan's pairwise formula.
struct Moments {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
};

Moments merge(const Moments& a, const Moments& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  Moments out;
  out.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double d = b.mean - a.mean;
  out.mean = a.mean + d * nb / static_cast<double>(out.n);
  out.m2 = a.m2 + b.m2 + d * d * na * nb / static_cast<double>(out.n);
  return out;
}

// Fixed binary tree over [lo, hi): the result depends only on the block
// contents, never on which thread produced them.
Moments merge_range(const std::vector<Moments>& blocks, std::size_t lo,
                    std::size_t hi) {
  if (hi - lo == 1) return blocks[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(merge_range(blocks, lo, mid), merge_range(blocks, mid, hi));
}

WidthEstimate finish(const Moments& m) {
  WidthEstimate w;
  w.samples = m.n;
  w.mean = m.mean;
  const double var = m.m2 / static_cast<double>(m.n - 1);
  w.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(m.n));
  return w;
}

long long block_count(long long samples) {
  return (samples + kWidthBlock - 1) / kWidthBlock;
}

long long block_size(long long samples, long long block) {
  return std::min(kWidthBlock, samples - block * kWidthBlock);
}

// Runs body(block) for every block; the parallel branch only changes who
// executes which block.
template <typename Body>
void for_each_block(long long blocks, Execution exec, Body&& body) {
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < blocks; ++b) body(b);
  } else {
    for (long long b = 0; b < blocks; ++b) body(b);
  }
}

// Scalar-valued kernel: per_sample(g) for g ~ N(0, I_dim).
template <typename PerSample>
WidthEstimate monte_carlo(Index dim, long long samples, std::uint64_t seed,
                          Execution exec, PerSample&& per_sample) {
  const long long blocks = block_count(samples);
  std::vector<Moments> parts(static_cast<std::size_t>(blocks));
  for_each_block(blocks, exec, [&](long long b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b),
                   StreamPurpose::kWidthSample);
    Moments m;
    const long long count = block_size(samples, b);
    for (long long s = 0; s < count; ++s) m.add(per_sample(rng.normal_vector(dim)));
    parts[static_cast<std::size_t>(b)] = m;
  });
  return finish(merge_range(parts, 0, parts.size()));
}

void check_samples(long long samples, long long minimum, const char* who) {
  if (samples < minimum) {
    throw InvalidArgument(std::string(who) + ": samples must be >= " +
                          std::to_string(minimum));
  }
}

void check_windows(std::span<const SupportWindow> windows, Index dim,
                   const char* who) {
  if (windows.empty()) {
    throw InvalidArgument(std::string(who) + ": empty window list");
  }
  for (const auto& w : windows) {
    if (w.first < 0 || w.last < w.first || w.last >= dim) {
      throw InvalidArgument(std::string(who) + ": window outside dimension");
    }
  }
}

// prefix[k] = sum_{j<k} g_j^2
Vector squared_prefix(const Vector& g) {
  Vector prefix(g.size() + 1);
  prefix[0] = 0.0;
  for (Index j = 0; j < g.size(); ++j) prefix[j + 1] = prefix[j] + g[j] * g[j];
  return prefix;
}

double window_energy(const Vector& prefix, const SupportWindow& w) {
  return prefix[w.last + 1] - prefix[w.first];
}

double union_energy(const Vector& prefix, const SupportWindow& a,
                    const SupportWindow& b) {
  double e = window_energy(prefix, a) + window_energy(prefix, b);
  const Index lo = std::max(a.first, b.first);
  const Index hi = std::min(a.last, b.last);
  if (lo <= hi) e -= prefix[hi + 1] - prefix[lo];
  return std::max(e, 0.0);
}

// min_{t >= 0} dist^2(g, t * subdifferential of ||.||_1 at the reference).
double tangent_distance(const Vector& g, const Vector& x_ref) {
  double off_max = 0.0;
  double on_dot = 0.0;
  Index on_count = 0;
  for (Index j = 0; j < g.size(); ++j) {
    if (x_ref[j] == 0.0) {
      off_max = std::max(off_max, std::abs(g[j]));
    } else {
      on_dot += x_ref[j] > 0.0 ? g[j] : -g[j];
      ++on_count;
    }
  }
  auto phi = [&](double t) {
    double v = 0.0;
    for (Index j = 0; j < g.size(); ++j) {
      if (x_ref[j] == 0.0) {
        const double r = std::abs(g[j]) - t;
        if (r > 0.0) v += r * r;
      } else {
        const double r = g[j] - (x_ref[j] > 0.0 ? t : -t);
        v += r * r;
      }
    }
    return v;
  };
  // phi is convex and increasing once t passes both the largest off-support
  // magnitude and the on-support least-squares scale.
  double lo = 0.0;
  double hi = std::max(off_max, std::max(0.0, on_dot / static_cast<double>(on_count)));
  const double tol = 1e-8 * std::max(1.0, hi);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = phi(c);
  double fd = phi(d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = phi(d);
    }
  }
  return std::min({phi(0.5 * (lo + hi)), phi(0.0), fc, fd});
}

}  // namespace

PairWidths::PairWidths(Index num_sets, std::vector<WidthEstimate> packed)
    : num_sets_(num_sets), packed_(std::move(packed)) {
  if (packed_.size() !=
      static_cast<std::size_t>(num_sets * (num_sets + 1) / 2)) {
    throw InvalidArgument("pair widths: packed size does not match set count");
  }
}

std::size_t PairWidths::packed_index(Index num_sets, Index i, Index j) {
  if (i > j) std::swap(i, j);
  // Row i holds pairs (i, i..n-1); rows before it hold n + (n-1) + ...
  return static_cast<std::size_t>(i * num_sets - i * (i - 1) / 2 + (j - i));
}

const WidthEstimate& PairWidths::at(Index i, Index j) const {
  if (i < 0 || j < 0 || i >= num_sets_ || j >= num_sets_) {
    throw InvalidArgument("pair widths: index out of range");
  }
  return packed_[packed_index(num_sets_, i, j)];
}

std::vector<double> PairWidths::means() const {
  std::vector<double> out;
  out.reserve(packed_.size());
  for (const auto& w : packed_) out.push_back(w.mean);
  return out;
}

WidthEstimate width_support_union(std::span<const SupportWindow> windows,
                                  Index dim, long long samples,
                                  std::uint64_t seed, Execution exec) {
  check_windows(windows, dim, "width_support_union");
  check_samples(samples, 100, "width_support_union");
  return monte_carlo(dim, samples, seed, exec, [&](const Vector& g) {
    const Vector prefix = squared_prefix(g);
    double best = 0.0;
    for (const auto& w : windows) best = std::max(best, window_energy(prefix, w));
    return std::sqrt(best);
  });
}

PairWidths width_difference_cones(std::span<const SupportWindow> windows,
                                  Index dim, long long samples,
                                  std::uint64_t seed, Execution exec) {
  check_windows(windows, dim, "width_difference_cones");
  check_samples(samples, 100, "width_difference_cones");
  const auto l = static_cast<Index>(windows.size());
  const std::size_t pairs = static_cast<std::size_t>(l * (l + 1) / 2);
  const long long blocks = block_count(samples);
  std::vector<std::vector<Moments>> parts(static_cast<std::size_t>(blocks));
  for_each_block(blocks, exec, [&](long long b) {
    CounterRng rng(seed, static_cast<std::uint64_t>(b),
                   StreamPurpose::kWidthSample);
    std::vector<Moments> acc(pairs);
    const long long count = block_size(samples, b);
    for (long long s = 0; s < count; ++s) {
      const Vector prefix = squared_prefix(rng.normal_vector(dim));
      std::size_t k = 0;
      for (Index i = 0; i < l; ++i) {
        for (Index j = i; j < l; ++j, ++k) {
          acc[k].add(std::sqrt(union_energy(prefix, windows[i], windows[j])));
        }
      }
    }
    parts[static_cast<std::size_t>(b)] = std::move(acc);
  });

  std::vector<WidthEstimate> packed(pairs);
  std::vector<Moments> column(static_cast<std::size_t>(blocks));
  for (std::size_t k = 0; k < pairs; ++k) {
    for (std::size_t b = 0; b < column.size(); ++b) column[b] = parts[b][k];
    packed[k] = finish(merge_range(column, 0, column.size()));
  }
  return PairWidths(l, std::move(packed));
}

WidthEstimate width_tangent_cone(const Vector& x_ref, long long samples,
                                 std::uint64_t seed, Execution exec) {
  require_finite(x_ref, "width_tangent_cone: x_ref");
  if (x_ref.size() == 0 || x_ref.cwiseAbs().maxCoeff() == 0.0) {
    throw InvalidArgument("width_tangent_cone: x_ref must be nonzero");
  }
  check_samples(samples, 100, "width_tangent_cone");
  return monte_carlo(x_ref.size(), samples, seed, exec, [&](const Vector& g) {
    return std::sqrt(tangent_distance(g, x_ref));
  });
}

WidthEstimate width_sets(std::span<const ConvexSet> sets, long long samples,
                         std::uint64_t seed, Execution exec,
                         int ascent_steps) {
  if (sets.empty()) throw InvalidArgument("width_sets: empty set list");
  check_samples(samples, 2, "width_sets");
  if (ascent_steps < 1) throw InvalidArgument("width_sets: ascent_steps must be >= 1");
  const Index dim = sets.front().dim();
  for (const auto& s : sets) {
    if (s.dim() != dim) throw InvalidArgument("width_sets: mixed dimensions");
  }
  const ConvexSet unit_ball = ConvexSet::ball(Vector::Zero(dim), 1.0);

  auto set_sup = [&](const ConvexSet& set, const Vector& g) {
    const std::vector<Projector> projectors = {
        [&](const Vector& v) { return project_set(set, v); },
        [&](const Vector& v) { return project_set(unit_ball, v); }};
    auto project = [&](const Vector& v) { return dykstra(projectors, v); };
    Vector x = project(Vector::Zero(dim));
    for (int k = 0; k < ascent_steps; ++k) {
      Vector next = project(x + g);
      const double moved = (next - x).norm();
      x = std::move(next);
      if (moved <= 1e-12) break;
    }
    return g.dot(x);
  };

  return monte_carlo(dim, samples, seed, exec, [&](const Vector& g) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& set : sets) best = std::max(best, set_sup(set, g));
    return best;
  });
}

double p1_bound(double a_m, double omega_t) {
  if (!std::isfinite(a_m) || !std::isfinite(omega_t)) {
    throw InvalidArgument("p1_bound: arguments must be finite");
  }
  if (a_m < omega_t) return 1.0;
  const double gap = a_m - omega_t;
  return std::min(1.0, std::exp(-0.5 * gap * gap));
}

double p2_bound(double a_m, std::span<const double> omega_pairs,
                double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw InvalidArgument("p2_bound: epsilon must lie in (0, 1/2)");
  }
  if (!std::isfinite(a_m)) throw InvalidArgument("p2_bound: a_M must be finite");
  const double shrunk = (1.0 - 2.0 * epsilon) * a_m;
  double total = 1.5 * std::exp(-0.5 * epsilon * epsilon * a_m * a_m);
  for (const double w : omega_pairs) {
    if (!std::isfinite(w)) throw InvalidArgument("p2_bound: pair width not finite");
    if (shrunk < w) return 1.0;
    const double gap = shrunk - w;
    total += std::exp(-0.5 * gap * gap);
  }
  return std::min(1.0, total);
}

BoundReport uniqueness_lower_bound(long long m, double omega_t,
                                   std::span<const double> omega_pairs,
                                   double epsilon) {
  BoundReport r;
  r.m = m;
  r.a_m = expected_gauss_norm(m);
  r.omega_t = omega_t;
  r.omega_pairs.assign(omega_pairs.begin(), omega_pairs.end());
  r.epsilon = epsilon;
  r.p1_bound = p1_bound(r.a_m, omega_t);
  r.p2_bound = p2_bound(r.a_m, omega_pairs, epsilon);
  r.pr_e_lower = 1.0 - std::min(r.p1_bound, r.p2_bound);
  return r;
}

namespace {

// Smallest M in [1, 2^32] with ok(M), assuming ok is monotone.
template <typename Pred>
long long first_true(Pred&& ok, const char* who) {
  long long hi = 1;
  while (!ok(hi)) {
    if (hi >= kMaxSearchM) {
      throw CapacityError(std::string(who) + ": target unreachable below 2^32");
    }
    hi = std::min(hi * 2, kMaxSearchM);
  }
  long long lo = hi / 2;  // ok(lo) is false, or lo == 0
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

MeasurementSearch min_measurements(double omega_t,
                                   std::span<const double> omega_pairs,
                                   double epsilon, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw InvalidArgument("min_measurements: target must lie in (0, 1)");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw InvalidArgument("min_measurements: epsilon must lie in (0, 1/2)");
  }
  MeasurementSearch out;
  out.constrained = first_true(
      [&](long long m) {
        return uniqueness_lower_bound(m, omega_t, omega_pairs, epsilon)
                   .pr_e_lower >= target;
      },
      "min_measurements");
  out.unconstrained = first_true(
      [&](long long m) {
        return 1.0 - p1_bound(expected_gauss_norm(m), omega_t) >= target;
      },
      "min_measurements");
  return out;
}

long long min_m_for_gauss_norm(double threshold) {
  if (!std::isfinite(threshold)) {
    throw InvalidArgument("min_m_for_gauss_norm: threshold must be finite");
  }
  return first_true(
      [&](long long m) { return expected_gauss_norm(m) >= threshold; },
      "min_m_for_gauss_norm");
}

std::vector<SupportWindow> sliding_windows(Index n, Index k) {
  if (k < 0 || k >= n) throw InvalidArgument("sliding_windows: need 0 <= K < N");
  std::vector<SupportWindow> out;
  out.reserve(static_cast<std::size_t>(n - k));
  for (Index i = 0; i + k < n; ++i) out.push_back({i, i + k});
  return out;
}

}  // namespace ucs
