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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucs/core.hpp"
#include "ucs/sets.hpp"

namespace ucs {

/// y = A x with the prior x in the union of `sets`.
struct Problem {
  Matrix a;
  Vector y;
  std::vector<ConvexSet> sets;
  std::optional<Vector> x_true;

  Index dim() const { return a.cols(); }
  Index num_sets() const { return static_cast<Index>(sets.size()); }

  /// Throws InvalidArgument on shape mismatches, non-finite data or an empty
  /// set list.
  void validate() const;
};

enum class StepSchedule {
  kFixedHorizon,     // R_f^-1 sqrt(2 log L / T)
  kDoublingTrick,    // fixed-horizon rate restarted on horizons 1, 2, 4, ...
  kInverseT,         // 1 / (lambda3 t), regularised path only
  kInverseTSquared,  // R_f^-1 sqrt(2 log L) / t^2
};

std::string_view to_string(StepSchedule s);
StepSchedule parse_schedule(std::string_view name);

struct SolverConfig {
  double lambda1 = 10.0;
  double lambda2 = 1e-3;
  double lambda3 = 0.0;  // > 0 switches to the projected-gradient p-update
  double radius = 2.0;
  long long horizon = 1000;
  std::optional<double> eta_x;          // empty: 1 / L_h
  std::optional<double> penalty_scale;  // empty: penalty_factor lambda1 ||A||^2
  double penalty_factor = 10.0;
  StepSchedule schedule = StepSchedule::kFixedHorizon;
  /// Multiplies every p step size of the schedule.
  double eta_p_scale = 1.0;
  std::optional<SimplexPoint> prior_q;
  std::uint64_t seed = 0;
  double stop_tol = 0.0;  // 0 disables early stopping
  /// x_bar and p_bar average the last ceil(average_tail * T) iterates; 1
  /// averages the whole run.
  double average_tail = 1.0;
  /// Skip the certificate pass (and its inner solve) when false.
  bool certificates = true;

  void validate() const;
};

/// Problem-dependent constants fixed before the first iteration.
struct SolverConstants {
  double spectral_norm = 0.0;  // ||A||_2
  double penalty_scale = 0.0;  // c
  double lipschitz = 0.0;      // L_h = max_i L_{h,i} + lambda1 ||A||^2 + lambda2
  double eta_x = 0.0;
  double r_f = 0.0;  // a priori bound on |f_i| over ||x|| <= R
  double r_g = 0.0;  // sqrt(L) R_f + lambda3 sqrt(2)
};

SolverConstants derive_constants(const Problem& problem,
                                 const SolverConfig& cfg);

/// f_i(x) = ||x||_1 + h_i(x) + lambda1/2 ||y - Ax||^2 + lambda2/2 ||x||^2 for
/// a fixed problem and configuration. Support-window families take an O(N+L)
/// path through prefix sums; other shapes go through project_set.
class Objective {
 public:
  Objective(const Problem& problem, const SolverConfig& cfg);
  Objective(const Problem& problem, const SolverConfig& cfg,
            const SolverConstants& constants);

  const Problem& problem() const { return *problem_; }
  const SolverConfig& config() const { return *cfg_; }
  const SolverConstants& constants() const { return constants_; }
  PenaltyConfig penalty_config() const { return {constants_.penalty_scale}; }

  Vector components(const Vector& x) const;
  /// Same, also returning the residual A x - y for reuse by smooth_gradient.
  Vector components(const Vector& x, Vector* residual) const;
  /// sum_i p_i f_i(x), plus lambda3/2 ||p - q||^2 when lambda3 > 0.
  double lagrangian(const SimplexPoint& p, const Vector& x) const;
  double lagrangian(const SimplexPoint& p, const Vector& x,
                    const Vector& f) const;
  /// Gradient of sum_i p_i h_i(x) + lambda1/2 ||y - Ax||^2 + lambda2/2 ||x||^2.
  Vector smooth_gradient(const Vector& x, const SimplexPoint& p) const;
  Vector smooth_gradient(const Vector& x, const SimplexPoint& p,
                         const Vector& residual) const;

 private:
  void check_x(const Vector& x) const;

  const Problem* problem_;
  const SolverConfig* cfg_;
  SolverConstants constants_;
  std::vector<SupportWindow> windows_;  // set iff every set is a window
};

Vector objective_components(const Objective& objective, const Vector& x);
double lagrangian(const Objective& objective, const SimplexPoint& p,
                  const Vector& x);

/// p_i <- p_i exp(-eta f_i), normalised; evaluated with f shifted by its
/// minimum so large losses cannot overflow. Weights are floored at the
/// smallest positive double so none is ever zeroed.
SimplexPoint mw_update_p(const SimplexPoint& p, const Vector& f, double eta_p);

/// Proj_simplex(p - eta (f + lambda3 (p - q))).
SimplexPoint regularized_update_p(const SimplexPoint& p, const Vector& f,
                                  const SimplexPoint& q, double lambda3,
                                  double eta_p);

/// soft_threshold(x - eta grad h(x), eta).
Vector prox_gradient_step_x(const Objective& objective, const Vector& x,
                            const SimplexPoint& p, double eta_x);

/// p step size at 0-based iteration t of a run with horizon T.
double schedule_step(StepSchedule schedule, long long t, long long horizon,
                     Index num_sets, const SolverConstants& constants,
                     double lambda3, double scale);

struct IterationRecord {
  long long t = 0;
  double lagrangian = 0.0;  // L(p_t, x_t) (regularised form when lambda3 > 0)
  double min_f = 0.0;
  double max_f = 0.0;
  double step_sq = 0.0;  // ||x_{t+1} - x_t||^2
  double p_entropy = 0.0;
  double eta_p = 0.0;
  double weighted_f = 0.0;  // <p_t, f(x_t)>
};

/// Per-iteration records plus the running sums the certificates need.
struct Trace {
  std::vector<IterationRecord> records;
  Vector sum_f;   // sum_t f(x_t)
  Vector sum_x;   // sum_t x_t
  Vector sum_p;   // sum_t p_t
  double sum_lagrangian = 0.0;
  double sum_weighted_f = 0.0;
  double initial_lagrangian = 0.0;
  double max_abs_f = 0.0;

  long long length() const { return static_cast<long long>(records.size()); }
};

struct CertificateReport {
  bool regularized = false;
  long long horizon = 0;
  double mw_regret = 0.0;
  double mw_regret_bound = 0.0;
  double prox_gap = 0.0;
  double prox_gap_bound = 0.0;
  double inner_residual = 0.0;
  long long inner_iterations = 0;
  double step_energy = 0.0;
  double step_energy_bound = 0.0;
  double r_f_used = 0.0;
  double r_f_observed = 0.0;
  double r_g_used = 0.0;
  double l_h_used = 0.0;
  double eta_x_used = 0.0;
};

struct SolverResult {
  Vector x_hat;
  Index chosen_set = 0;
  Vector x_bar;
  SimplexPoint p_bar = SimplexPoint::uniform(1);
  Vector x_last;
  Trace trace;
  CertificateReport certificates;
  SolverConstants constants;
  long long iterations_run = 0;
};

/// Runs the alternating multiplicative-weights / proximal-gradient scheme
/// from p = uniform, x = 0 and returns the union projection of the averaged
/// iterate.
SolverResult solve(const Problem& problem, const SolverConfig& cfg);

/// Step energy, regret and proximal-gap certificates from a completed trace.
CertificateReport certificates(const Trace& trace, const Objective& objective);

/// Step energy (1/t) sum_{s<t} ||x_{s+1} - x_s||^2 and its a priori bound for
/// every prefix t = 1..T of a trace.
struct StepEnergyPrefix {
  long long horizon = 0;
  double step_energy = 0.0;
  double bound = 0.0;
};
std::vector<StepEnergyPrefix> step_energy_prefixes(const Trace& trace,
                                                   const Objective& objective);

/// Regret of the p-player against the best fixed simplex point:
/// (1/T)[sum_t L(p_t, x_t) - min_p sum_t L(p, x_t)], regularised form when
/// lambda3 > 0.
double p_regret(const Trace& trace, const Objective& objective);

/// Minimiser of L(p, .) over ||x|| <= R by proximal gradient (warm start x0).
struct InnerSolve {
  Vector x;
  double value = 0.0;
  double residual = 0.0;  // upper bound on value - min
  long long iterations = 0;
};
InnerSolve minimize_x(const Objective& objective, const SimplexPoint& p,
                      const Vector& x0, long long max_iters, double tol);

}  // namespace ucs
