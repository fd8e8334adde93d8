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

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ucs/core.hpp"

namespace ucs {

/// Coordinates first..last (0-based, inclusive) are free, all others are 0.
/// The 1-based (start, width) form keeps coordinates start..start+width.
struct SupportWindow {
  Index first = 0;
  Index last = 0;

  Index size() const { return last - first + 1; }
  bool covers(Index j) const { return j >= first && j <= last; }
};

/// {x : <a, x> = b}
struct AffineSlice {
  Vector a;
  double b = 0.0;
};

/// {x : <a, x> <= b}
struct Halfspace {
  Vector a;
  double b = 0.0;
};

/// Per-coordinate intervals; bounds may be +-infinity.
struct Box {
  Vector lower;
  Vector upper;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

/// One two-sided linear constraint lo <= <a, x> <= hi. lo == hi encodes an
/// equality; either bound may be infinite.
struct LinearRow {
  Vector a;
  double lo = 0.0;
  double hi = 0.0;
};

/// Intersection of linear rows (quantisation slabs, phase-retrieval sign
/// branches). Pure equality systems are projected in closed form through a
/// cached pseudo-inverse; anything with an inequality uses Dykstra's method.
struct Polytope {
  std::vector<LinearRow> rows;

  bool equality_only() const;
};

/// Convex set descriptor: a tagged shape plus its ambient dimension.
/// Constructed through the named factories, which check the invariants.
class ConvexSet {
 public:
  using Shape =
      std::variant<SupportWindow, AffineSlice, Halfspace, Box, Ball, Polytope>;

  static ConvexSet window(Index dim, Index first, Index last);
  /// 1-based (start, width) as used in configuration files.
  static ConvexSet window_1based(Index dim, Index start, Index width);
  static ConvexSet full_space(Index dim) { return window(dim, 0, dim - 1); }
  static ConvexSet affine(Vector a, double b);
  static ConvexSet halfspace(Vector a, double b);
  static ConvexSet box(Vector lower, Vector upper);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet polytope(Index dim, std::vector<LinearRow> rows);

  Index dim() const { return dim_; }
  const Shape& shape() const { return shape_; }
  std::string kind() const;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&shape_);
  }

  /// Pseudo-inverse of the stacked equality rows (Polytope only, cached).
  const Matrix* equality_pinv() const { return pinv_.get(); }

 private:
  ConvexSet(Index dim, Shape shape) : dim_(dim), shape_(std::move(shape)) {}

  Index dim_ = 0;
  Shape shape_;
  std::shared_ptr<const Matrix> pinv_;
};

struct PenaltyConfig {
  double scale = 1.0;  // stiffness c > 0
};

/// Dykstra sweep limits for composite projections.
struct DykstraOptions {
  int max_sweeps = 5000;
  double tol = 1e-10;
};

Vector project_set(const ConvexSet& set, const Vector& x);

/// Euclidean distance from x to the set.
double distance(const ConvexSet& set, const Vector& x);

/// Smooth surrogate h(x) >= 0 of the indicator of the set, zero exactly on
/// it: c * sum of squared off-window entries for windows, (c/2) dist^2 for
/// every other shape.
double penalty(const ConvexSet& set, const PenaltyConfig& cfg,
               const Vector& x);
Vector penalty_grad(const ConvexSet& set, const PenaltyConfig& cfg,
                    const Vector& x);
/// Gradient-Lipschitz constant of penalty(): 2c for windows (0 for the full
/// space), c otherwise.
double smoothness_constant(const ConvexSet& set, const PenaltyConfig& cfg);

bool contains(const ConvexSet& set, const Vector& x, double tol);

/// Nearest projection onto the union; ties go to the smallest index.
std::pair<Vector, Index> project_union(std::span<const ConvexSet> sets,
                                       const Vector& x);

/// Dykstra's alternating projection onto an intersection of convex sets
/// given by their projectors.
using Projector = std::function<Vector(const Vector&)>;
Vector dykstra(std::span<const Projector> projectors, const Vector& x,
               const DykstraOptions& opts = {});

/// Index k of the cell [edges[k], edges[k+1]) containing `value`.
Index quantize(std::span<const double> edges, double value);

/// One slab {x : edges[y_i] <= <a_i, x> <= edges[y_i + 1]} per measurement,
/// where y_i is the cell index reported by the quantiser.
std::vector<ConvexSet> quantized_cells(const Matrix& a_rows, const Vector& y,
                                       std::span<const double> edges);

/// Merges single-set constraints (slabs, slices, halfspaces, polytopes) into
/// one Polytope describing their intersection.
ConvexSet intersect_linear(std::span<const ConvexSet> sets);

/// Sign branches of |<a_i, x>| = sqrt(y_i): one equality Polytope per sign
/// pattern, rows with y_i = 0 contributing a single branch. Branch j takes
/// the negative root for row i when bit i of j is set (among the rows with
/// y_i > 0, in order).
std::vector<ConvexSet> phase_retrieval_branches(const Matrix& a_rows,
                                                const Vector& y,
                                                Index max_rows = 10);

}  // namespace ucs
