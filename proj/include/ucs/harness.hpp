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
#include "ucs/solver.hpp"
#include "ucs/theory.hpp"

namespace ucs {

enum class SetFamily {
  kWindows,        // sliding windows of K+1 coordinates
  kQuantized,      // one composite set from quantised auxiliary measurements
  kPhaseBranches,  // sign branches of auxiliary magnitude measurements
  kCustom,         // user-supplied descriptors
};

std::string_view to_string(SetFamily f);
SetFamily parse_set_family(std::string_view name);

/// Which prior a trial runs with.
enum class Arm {
  kUnion,     // the family's sets
  kBaseline,  // a single set covering R^N (plain l1 recovery)
};

struct ExperimentSpec {
  Index n = 64;
  Index k = 4;
  std::vector<Index> m_grid;
  SetFamily family = SetFamily::kWindows;
  long long trials = 1;
  SolverConfig solver;
  double success_tol = 1e-3;  // relative l2 error
  std::uint64_t seed = 0;
  bool baseline = true;     // run the paired R^N baseline too
  double noise_std = 0.0;   // additive measurement noise, off by default

  // kQuantized: auxiliary rows and quantiser cell edges.
  Index aux_measurements = 8;
  std::vector<double> quantizer_edges;
  // kCustom: candidate sets; the signal is drawn in one of them.
  std::vector<ConvexSet> custom_sets;

  void validate() const;
};

struct ProblemInstance {
  Problem problem;
  Vector x_true;
  Index true_set = 0;
};

/// Deterministic instance for (spec.seed, trial_id): A has i.i.d. N(0, 1)
/// entries drawn row by row (so a smaller M sees the leading rows of a larger
/// one), the support set is chosen uniformly, and the signal is scaled to
/// unit norm. Streams are keyed by (seed, trial_id, purpose).
ProblemInstance generate_problem(const ExperimentSpec& spec, Index m,
                                 long long trial_id);

struct TrialRecord {
  long long trial_id = 0;
  Index m = 0;
  Arm arm = Arm::kUnion;
  std::uint64_t seed_used = 0;
  double rel_error = 0.0;
  bool success = false;
  Index chosen_set = 0;
  Index true_set = 0;
  long long iterations_run = 0;
  double wall_time = 0.0;  // seconds
  std::string error;       // nonempty if the solve threw
};

/// Solves one instance; solver exceptions become a failed record.
TrialRecord run_trial(const ExperimentSpec& spec, Index m, long long trial_id,
                      Arm arm = Arm::kUnion);

struct PhaseRow {
  Index m = 0;
  long long trials = 0;
  long long successes = 0;
  double success_rate = 0.0;
  double mean_rel_error = 0.0;
  double mean_wall_time = 0.0;
  long long baseline_trials = 0;
  long long baseline_successes = 0;
  double baseline_success_rate = 0.0;
  double baseline_mean_rel_error = 0.0;
  double baseline_mean_wall_time = 0.0;
};

struct PhaseTable {
  std::vector<PhaseRow> rows;
  std::vector<TrialRecord> records;  // ordered by (m, arm, trial_id)
};

/// Runs every (M, trial, arm) job, in parallel or serially; the records and
/// aggregates do not depend on the execution order.
PhaseTable phase_transition(const ExperimentSpec& spec,
                            Execution exec = Execution::kParallel);

/// Rebuilds the per-M aggregates from records, re-deriving every success flag
/// from rel_error and the tolerance.
std::vector<PhaseRow> aggregate(const std::vector<TrialRecord>& records,
                                double success_tol);

/// Smallest grid M whose success rate reaches `level`, if any.
std::optional<Index> success_threshold(const std::vector<PhaseRow>& rows,
                                       double level, Arm arm);

/// True if, at every M, the union rate is at least the baseline rate minus
/// one binomial standard deviation sqrt(p (1 - p) / n) of the pooled rate.
bool dominates_baseline(const std::vector<PhaseRow>& rows);

/// Adjacent grid points (i, i + 1) where the later success rate falls below
/// the earlier one significantly (one-sided two-proportion z-test at 5%).
std::vector<std::size_t> monotonicity_violations(
    const std::vector<PhaseRow>& rows, Arm arm);

struct ConvergencePoint {
  long long horizon = 0;
  double step_energy = 0.0;
  double step_energy_bound = 0.0;
  double mw_regret = 0.0;
  double mw_regret_bound = 0.0;
  double prox_gap = 0.0;
  double prox_gap_bound = 0.0;
  double inner_residual = 0.0;
};

struct ConvergenceSeries {
  StepSchedule schedule = StepSchedule::kFixedHorizon;
  bool regularized = false;
  std::vector<ConvergencePoint> points;
  double step_energy_slope = 0.0;  // least-squares log-log slope
  double mw_regret_slope = 0.0;
};

struct ConvergenceStudy {
  Index m = 32;
  long long trial_id = 0;
  std::vector<long long> horizons = {128, 256, 512, 1024, 2048, 4096, 8192};
  std::vector<StepSchedule> schedules = {StepSchedule::kFixedHorizon,
                                         StepSchedule::kInverseTSquared,
                                         StepSchedule::kInverseT};
  double lambda3 = 1.0;  // used by the inverse-t series (uniform prior q)
};

/// Runs the seeded instance for every (schedule, horizon). Inverse-t runs the
/// regularised p-update; every other schedule uses lambda3 = 0.
std::vector<ConvergenceSeries> convergence_study(const ExperimentSpec& spec,
                                                 const ConvergenceStudy& study);

/// Least-squares slope of log(y) against log(x); requires positive data.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ucs
