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

#include "ucs/sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ucs {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(const ConvexSet& set, const Vector& x, const char* op) {
  if (x.size() != set.dim()) {
    throw InvalidArgument(std::string(op) + ": dimension mismatch (set " +
                          std::to_string(set.dim()) + ", vector " +
                          std::to_string(x.size()) + ")");
  }
}

void check_normal(const Vector& a, const char* what) {
  require_finite(a, what);
  if (a.size() == 0) throw InvalidArgument(std::string(what) + ": empty");
  if (a.squaredNorm() == 0.0) {
    throw InvalidArgument(std::string(what) + ": normal vector is zero");
  }
}

Vector project_slab(const LinearRow& row, const Vector& x) {
  const double s = row.a.dot(x);
  if (s < row.lo) return x + ((row.lo - s) / row.a.squaredNorm()) * row.a;
  if (s > row.hi) return x - ((s - row.hi) / row.a.squaredNorm()) * row.a;
  return x;
}

Vector project_polytope(const ConvexSet& set, const Polytope& poly,
                        const Vector& x) {
  if (poly.rows.empty()) return x;
  if (poly.rows.size() == 1) return project_slab(poly.rows.front(), x);
  if (const Matrix* pinv = set.equality_pinv()) {
    Vector residual(static_cast<Index>(poly.rows.size()));
    for (std::size_t i = 0; i < poly.rows.size(); ++i) {
      residual[static_cast<Index>(i)] = poly.rows[i].a.dot(x) - poly.rows[i].lo;
    }
    return x - (*pinv) * residual;
  }
  std::vector<Projector> projectors;
  projectors.reserve(poly.rows.size());
  for (const auto& row : poly.rows) {
    projectors.emplace_back([&row](const Vector& v) { return project_slab(row, v); });
  }
  return dykstra(projectors, x);
}

}  // namespace

bool Polytope::equality_only() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const LinearRow& r) { return r.lo == r.hi; });
}

ConvexSet ConvexSet::window(Index dim, Index first, Index last) {
  if (dim < 1) throw InvalidArgument("window: dimension must be >= 1");
  if (first < 0 || last < first || last >= dim) {
    throw InvalidArgument("window: [" + std::to_string(first) + ", " +
                          std::to_string(last) + "] not inside [0, " +
                          std::to_string(dim - 1) + "]");
  }
  return ConvexSet(dim, SupportWindow{first, last});
}

ConvexSet ConvexSet::window_1based(Index dim, Index start, Index width) {
  if (width < 0) throw InvalidArgument("window: negative width");
  return window(dim, start - 1, start - 1 + width);
}

ConvexSet ConvexSet::affine(Vector a, double b) {
  check_normal(a, "affine slice");
  if (!std::isfinite(b)) throw InvalidArgument("affine slice: offset not finite");
  const Index n = a.size();
  return ConvexSet(n, AffineSlice{std::move(a), b});
}

ConvexSet ConvexSet::halfspace(Vector a, double b) {
  check_normal(a, "halfspace");
  if (!std::isfinite(b)) throw InvalidArgument("halfspace: offset not finite");
  const Index n = a.size();
  return ConvexSet(n, Halfspace{std::move(a), b});
}

ConvexSet ConvexSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw InvalidArgument("box: bound vectors must be nonempty and equal length");
  }
  for (Index j = 0; j < lower.size(); ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
        lower[j] == std::numeric_limits<double>::infinity() ||
        upper[j] == -std::numeric_limits<double>::infinity()) {
      throw InvalidArgument("box: invalid interval at coordinate " +
                            std::to_string(j));
    }
  }
  const Index n = lower.size();
  return ConvexSet(n, Box{std::move(lower), std::move(upper)});
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  require_finite(center, "ball center");
  if (center.size() == 0) throw InvalidArgument("ball: empty center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("ball: radius must be positive and finite");
  }
  const Index n = center.size();
  return ConvexSet(n, Ball{std::move(center), radius});
}

ConvexSet ConvexSet::polytope(Index dim, std::vector<LinearRow> rows) {
  if (dim < 1) throw InvalidArgument("polytope: dimension must be >= 1");
  for (const auto& row : rows) {
    if (row.a.size() != dim) {
      throw InvalidArgument("polytope: row dimension mismatch");
    }
    check_normal(row.a, "polytope row");
    if (std::isnan(row.lo) || std::isnan(row.hi) || row.lo > row.hi ||
        row.lo == std::numeric_limits<double>::infinity() ||
        row.hi == -std::numeric_limits<double>::infinity()) {
      throw InvalidArgument("polytope: invalid row bounds");
    }
  }
  ConvexSet set(dim, Polytope{std::move(rows)});
  const auto& poly = std::get<Polytope>(set.shape_);
  if (poly.rows.size() > 1 && poly.equality_only()) {
    Matrix g(static_cast<Index>(poly.rows.size()), dim);
    for (std::size_t i = 0; i < poly.rows.size(); ++i) {
      g.row(static_cast<Index>(i)) = poly.rows[i].a.transpose();
    }
    set.pinv_ = std::make_shared<const Matrix>(
        g.completeOrthogonalDecomposition().pseudoInverse());
  }
  return set;
}

std::string ConvexSet::kind() const {
  return std::visit(Overloaded{
                        [](const SupportWindow&) { return "window"; },
                        [](const AffineSlice&) { return "affine"; },
                        [](const Halfspace&) { return "halfspace"; },
                        [](const Box&) { return "box"; },
                        [](const Ball&) { return "ball"; },
                        [](const Polytope&) { return "polytope"; },
                    },
                    shape_);
}

Vector dykstra(std::span<const Projector> projectors, const Vector& x,
               const DykstraOptions& opts) {
  if (projectors.empty()) return x;
  if (projectors.size() == 1) return projectors.front()(x);
  std::vector<Vector> increments(projectors.size(),
                                 Vector::Zero(x.size()));
  Vector current = x;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    const Vector before = current;
    for (std::size_t k = 0; k < projectors.size(); ++k) {
      const Vector shifted = current + increments[k];
      current = projectors[k](shifted);
      increments[k] = shifted - current;
    }
    if ((current - before).norm() <= opts.tol) break;
  }
  return current;
}

Vector project_set(const ConvexSet& set, const Vector& x) {
  check_dim(set, x, "project_set");
  return std::visit(
      Overloaded{
          [&](const SupportWindow& w) -> Vector {
            Vector out = Vector::Zero(x.size());
            out.segment(w.first, w.size()) = x.segment(w.first, w.size());
            return out;
          },
          [&](const AffineSlice& s) -> Vector {
            return x - ((s.a.dot(x) - s.b) / s.a.squaredNorm()) * s.a;
          },
          [&](const Halfspace& h) -> Vector {
            const double excess = h.a.dot(x) - h.b;
            if (excess <= 0.0) return x;
            return x - (excess / h.a.squaredNorm()) * h.a;
          },
          [&](const Box& b) -> Vector {
            return x.cwiseMax(b.lower).cwiseMin(b.upper);
          },
          [&](const Ball& b) -> Vector {
            const Vector offset = x - b.center;
            const double r = offset.norm();
            if (r <= b.radius) return x;
            return b.center + (b.radius / r) * offset;
          },
          [&](const Polytope& p) -> Vector {
            return project_polytope(set, p, x);
          },
      },
      set.shape());
}

double distance(const ConvexSet& set, const Vector& x) {
  if (const auto* w = set.as<SupportWindow>()) {
    check_dim(set, x, "distance");
    const double inside = x.segment(w->first, w->size()).squaredNorm();
    return std::sqrt(std::max(0.0, x.squaredNorm() - inside));
  }
  return (x - project_set(set, x)).norm();
}

double penalty(const ConvexSet& set, const PenaltyConfig& cfg,
               const Vector& x) {
  check_dim(set, x, "penalty");
  if (!(cfg.scale > 0.0)) throw InvalidArgument("penalty: scale must be > 0");
  if (const auto* w = set.as<SupportWindow>()) {
    double off = 0.0;
    for (Index j = 0; j < x.size(); ++j) {
      if (!w->covers(j)) off += x[j] * x[j];
    }
    return cfg.scale * off;
  }
  return 0.5 * cfg.scale * (x - project_set(set, x)).squaredNorm();
}

Vector penalty_grad(const ConvexSet& set, const PenaltyConfig& cfg,
                    const Vector& x) {
  check_dim(set, x, "penalty_grad");
  if (!(cfg.scale > 0.0)) throw InvalidArgument("penalty: scale must be > 0");
  if (const auto* w = set.as<SupportWindow>()) {
    Vector g = 2.0 * cfg.scale * x;
    g.segment(w->first, w->size()).setZero();
    return g;
  }
  return cfg.scale * (x - project_set(set, x));
}

double smoothness_constant(const ConvexSet& set, const PenaltyConfig& cfg) {
  if (!(cfg.scale > 0.0)) throw InvalidArgument("penalty: scale must be > 0");
  if (const auto* w = set.as<SupportWindow>()) {
    // A window over every coordinate carries no penalty at all.
    return w->size() == set.dim() ? 0.0 : 2.0 * cfg.scale;
  }
  return cfg.scale;
}

bool contains(const ConvexSet& set, const Vector& x, double tol) {
  return distance(set, x) <= tol;
}

std::pair<Vector, Index> project_union(std::span<const ConvexSet> sets,
                                       const Vector& x) {
  if (sets.empty()) throw InvalidArgument("project_union: empty set list");
  Vector best;
  Index best_index = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Vector candidate = project_set(sets[i], x);
    const double d = (x - candidate).norm();
    if (d < best_dist) {
      best_dist = d;
      best = std::move(candidate);
      best_index = static_cast<Index>(i);
    }
  }
  return {std::move(best), best_index};
}

Index quantize(std::span<const double> edges, double value) {
  if (edges.size() < 2) throw InvalidArgument("quantize: need at least two edges");
  if (std::isnan(value) || value < edges.front() || value > edges.back()) {
    throw InvalidArgument("quantize: value outside quantiser range");
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  const auto cell = static_cast<Index>(it - edges.begin()) - 1;
  return std::min(cell, static_cast<Index>(edges.size()) - 2);
}

std::vector<ConvexSet> quantized_cells(const Matrix& a_rows, const Vector& y,
                                       std::span<const double> edges) {
  if (a_rows.rows() != y.size()) {
    throw InvalidArgument("quantized_cells: row count does not match y");
  }
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
    throw InvalidArgument("quantized_cells: edges must be sorted, size >= 2");
  }
  const auto cells = static_cast<double>(edges.size() - 1);
  std::vector<ConvexSet> out;
  out.reserve(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i) {
    const double level = y[i];
    if (!(level >= 0.0) || level >= cells || level != std::floor(level)) {
      throw InvalidArgument("quantized_cells: level " + std::to_string(level) +
                            " of measurement " + std::to_string(i) +
                            " matches no cell");
    }
    const auto k = static_cast<std::size_t>(level);
    out.push_back(ConvexSet::polytope(
        a_rows.cols(),
        {LinearRow{a_rows.row(i).transpose(), edges[k], edges[k + 1]}}));
  }
  return out;
}

ConvexSet intersect_linear(std::span<const ConvexSet> sets) {
  if (sets.empty()) throw InvalidArgument("intersect_linear: empty list");
  const Index dim = sets.front().dim();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<LinearRow> rows;
  for (const auto& set : sets) {
    if (set.dim() != dim) throw InvalidArgument("intersect_linear: dimension mismatch");
    std::visit(Overloaded{
                   [&](const AffineSlice& s) { rows.push_back({s.a, s.b, s.b}); },
                   [&](const Halfspace& h) { rows.push_back({h.a, -kInf, h.b}); },
                   [&](const Polytope& p) {
                     rows.insert(rows.end(), p.rows.begin(), p.rows.end());
                   },
                   [&](const auto&) {
                     throw InvalidArgument("intersect_linear: " + set.kind() +
                                           " is not a linear constraint");
                   },
               },
               set.shape());
  }
  return ConvexSet::polytope(dim, std::move(rows));
}

std::vector<ConvexSet> phase_retrieval_branches(const Matrix& a_rows,
                                                const Vector& y,
                                                Index max_rows) {
  const Index l = a_rows.rows();
  if (y.size() != l) {
    throw InvalidArgument("phase_retrieval_branches: row count does not match y");
  }
  if (l > max_rows) {
    throw CapacityError("phase_retrieval_branches: " + std::to_string(l) +
                        " rows would need 2^" + std::to_string(l) +
                        " branches; limit is " + std::to_string(max_rows) +
                        " rows");
  }
  require_finite(y, "phase_retrieval_branches");
  if ((y.array() < 0.0).any()) {
    throw InvalidArgument("phase_retrieval_branches: negative measurement");
  }
  std::vector<Index> signed_rows;
  for (Index i = 0; i < l; ++i) {
    if (y[i] > 0.0) signed_rows.push_back(i);
  }
  const std::size_t count = std::size_t{1} << signed_rows.size();
  std::vector<ConvexSet> out;
  out.reserve(count);
  for (std::size_t branch = 0; branch < count; ++branch) {
    std::vector<LinearRow> rows;
    rows.reserve(static_cast<std::size_t>(l));
    std::size_t bit = 0;
    for (Index i = 0; i < l; ++i) {
      double root = std::sqrt(y[i]);
      if (y[i] > 0.0) {
        if ((branch >> bit) & 1U) root = -root;
        ++bit;
      }
      rows.push_back({a_rows.row(i).transpose(), root, root});
    }
    out.push_back(ConvexSet::polytope(a_rows.cols(), std::move(rows)));
  }
  return out;
}

}  // namespace ucs
