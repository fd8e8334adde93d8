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

#include "ucs/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace ucs {

void require_finite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) throw InvalidArgument(what + ": non-finite entry");
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidArgument(what + ": non-finite entry");
}

SimplexPoint::SimplexPoint(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw InvalidArgument("simplex point: empty");
  require_finite(weights_, "simplex point");
  if ((weights_.array() < 0.0).any()) {
    throw InvalidArgument("simplex point: negative weight");
  }
  if (std::abs(weights_.sum() - 1.0) > kSumTolerance) {
    throw InvalidArgument("simplex point: weights do not sum to one");
  }
}

SimplexPoint SimplexPoint::uniform(Index size) {
  if (size < 1) throw InvalidArgument("simplex point: empty");
  return SimplexPoint(Vector::Constant(size, 1.0 / static_cast<double>(size)));
}

SimplexPoint SimplexPoint::vertex(Index size, Index index) {
  if (index < 0 || index >= size) {
    throw InvalidArgument("simplex vertex: index out of range");
  }
  Vector w = Vector::Zero(size);
  w[index] = 1.0;
  return SimplexPoint(std::move(w));
}

double SimplexPoint::entropy() const {
  double h = 0.0;
  for (Index i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

Vector soft_threshold(const Vector& v, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("soft_threshold: tau must be >= 0");
  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    const double mag = std::abs(v[j]) - tau;
    out[j] = mag > 0.0 ? std::copysign(mag, v[j]) : 0.0;
  }
  return out;
}

SimplexPoint project_simplex(const Vector& v) {
  if (v.size() == 0) throw InvalidArgument("project_simplex: empty input");
  require_finite(v, "project_simplex");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  // Largest k with sorted[k-1] - (sum_{i<k} sorted[i] - 1)/k > 0.
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  Vector p = (v.array() - theta).max(0.0).matrix();
  // Renormalise away the roundoff of the threshold arithmetic.
  const double total = p.sum();
  if (total > 0.0) {
    p /= total;
  } else {
    p.setZero();
    Index arg = 0;
    v.maxCoeff(&arg);
    p[arg] = 1.0;
  }
  return SimplexPoint(std::move(p));
}

SpectralNormResult spectral_norm_detail(const Matrix& a, int iters,
                                        double tol) {
  if (iters < 1) throw InvalidArgument("spectral_norm: iters must be >= 1");
  require_finite(a, "spectral_norm");
  SpectralNormResult result;
  const Index n = a.cols();
  if (n == 0 || a.rows() == 0) return result;

  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector av = a * v;
  for (Index k = 0; av.squaredNorm() == 0.0 && k < n; ++k) {
    v = Vector::Unit(n, k);
    av = a * v;
  }
  if (av.squaredNorm() == 0.0) {
    result.converged = true;
    return result;  // zero matrix
  }

  double sigma = av.norm();
  for (int it = 1; it <= iters; ++it) {
    Vector w = a.transpose() * av;
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
    av = a * v;
    const double next = av.norm();
    result.iterations = it;
    const bool small_change = std::abs(next - sigma) <= tol * next;
    sigma = std::max(sigma, next);
    if (small_change) {
      result.converged = true;
      break;
    }
  }
  result.value = sigma;
  return result;
}

double expected_gauss_norm(long long m) {
  if (m < 1) throw InvalidArgument("expected_gauss_norm: M must be >= 1");
  const double md = static_cast<double>(m);
  if (m >= 1000) {
    // Asymptotic series of the gamma ratio; the log-gamma difference cancels
    // badly for large M while this is exact to rounding from M = 1000 on.
    const double u = 1.0 / md;
    return std::sqrt(md) *
           (1.0 + u * (-0.25 + u * (1.0 / 32.0 + u * (5.0 / 128.0 -
                                                    u * 21.0 / 2048.0))));
  }
  return std::numbers::sqrt2 *
         std::exp(std::lgamma((md + 1.0) / 2.0) - std::lgamma(md / 2.0));
}

}  // namespace ucs
