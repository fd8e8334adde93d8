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

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ucs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a request exceeds a hard size limit (enumeration guards,
/// search ranges).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Throws InvalidArgument naming `what` if any entry is NaN or infinite.
void require_finite(const Vector& v, const std::string& what);
void require_finite(const Matrix& m, const std::string& what);

/// A point of the probability simplex. The constructor validates
/// nonnegativity and unit sum (1e-12); use project_simplex to obtain one from
/// an arbitrary vector.
class SimplexPoint {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit SimplexPoint(Vector weights);

  /// The uniform distribution over `size` outcomes.
  static SimplexPoint uniform(Index size);
  /// The vertex e_index of the simplex.
  static SimplexPoint vertex(Index size, Index index);

  const Vector& weights() const { return weights_; }
  Index size() const { return weights_.size(); }
  double operator[](Index i) const { return weights_[i]; }

  /// Shannon entropy in nats (0 log 0 = 0).
  double entropy() const;

 private:
  Vector weights_;
};

/// prox of tau*||.||_1: componentwise sign(v)*max(|v| - tau, 0).
Vector soft_threshold(const Vector& v, double tau);

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding. The result is renormalised so the weights sum to one within
/// SimplexPoint::kSumTolerance.
SimplexPoint project_simplex(const Vector& v);

struct SpectralNormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value by power iteration on A^T A, started from the
/// normalised all-ones vector (falling back to canonical basis vectors when
/// the start lies in the null space). The returned Rayleigh estimate never
/// exceeds ||A||_2. Iteration stops once the estimate changes by at most
/// tol relative to itself.
SpectralNormResult spectral_norm_detail(const Matrix& a, int iters, double tol);

inline double spectral_norm(const Matrix& a, int iters = 10000,
                            double tol = 1e-12) {
  return spectral_norm_detail(a, iters, tol).value;
}

/// a_M = E||g||_2 for g ~ N(0, I_M), via log-gamma.
double expected_gauss_norm(long long m);

}  // namespace ucs
