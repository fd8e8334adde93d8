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

#include "ucs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "ucs/rng.hpp"

namespace ucs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> default_edges() {
  return {-kInf, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, kInf};
}

// K+1 standard normals in a uniformly chosen window, scaled to unit norm.
Vector window_signal(const ExperimentSpec& spec, long long trial_id,
                     Index* window) {
  const auto key = static_cast<std::uint64_t>(trial_id);
  CounterRng choice(spec.seed, key, StreamPurpose::kSetChoice);
  CounterRng draw(spec.seed, key, StreamPurpose::kSignal);
  const Index l = spec.n - spec.k;
  *window = static_cast<Index>(choice.below(static_cast<std::uint64_t>(l)));
  Vector x = Vector::Zero(spec.n);
  // A zero draw is impossible in practice; redraw rather than divide by 0.
  while (x.norm() == 0.0) {
    for (Index j = 0; j <= spec.k; ++j) x[*window + j] = draw.normal();
  }
  return x / x.norm();
}

}  // namespace

std::string_view to_string(SetFamily f) {
  switch (f) {
    case SetFamily::kWindows:
      return "windows";
    case SetFamily::kQuantized:
      return "quantized";
    case SetFamily::kPhaseBranches:
      return "phase-branches";
    case SetFamily::kCustom:
      return "custom";
  }
  return "?";
}

SetFamily parse_set_family(std::string_view name) {
  if (name == "windows") return SetFamily::kWindows;
  if (name == "quantized") return SetFamily::kQuantized;
  if (name == "phase-branches") return SetFamily::kPhaseBranches;
  if (name == "custom") return SetFamily::kCustom;
  throw InvalidArgument("unknown set family '" + std::string(name) +
                        "' (expected windows, quantized, phase-branches or custom)");
}

void ExperimentSpec::validate() const {
  if (n < 1) throw InvalidArgument("experiment: N must be >= 1");
  if (k < 0 || k > n) throw InvalidArgument("experiment: need 0 <= K <= N");
  if (family != SetFamily::kCustom && k >= n) {
    throw InvalidArgument("experiment: window families need K < N");
  }
  if (m_grid.empty()) throw InvalidArgument("experiment: M grid is empty");
  for (const Index m : m_grid) {
    if (m < 1) throw InvalidArgument("experiment: every M must be >= 1");
  }
  if (trials < 1) throw InvalidArgument("experiment: trials must be >= 1");
  if (!(success_tol > 0.0)) throw InvalidArgument("experiment: success_tol must be > 0");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidArgument("experiment: noise_std must be finite and >= 0");
  }
  solver.validate();
  switch (family) {
    case SetFamily::kWindows:
      break;
    case SetFamily::kQuantized:
      if (aux_measurements < 1) {
        throw InvalidArgument("experiment: quantized family needs aux_measurements >= 1");
      }
      if (!quantizer_edges.empty() &&
          (quantizer_edges.size() < 2 ||
           !std::is_sorted(quantizer_edges.begin(), quantizer_edges.end()))) {
        throw InvalidArgument("experiment: quantizer_edges must be sorted, size >= 2");
      }
      break;
    case SetFamily::kPhaseBranches:
      if (aux_measurements < 1 || aux_measurements > 10) {
        throw InvalidArgument("experiment: phase-branches needs 1 <= aux_measurements <= 10");
      }
      break;
    case SetFamily::kCustom:
      if (custom_sets.empty()) throw InvalidArgument("experiment: custom family has no sets");
      for (const auto& s : custom_sets) {
        if (s.dim() != n) throw InvalidArgument("experiment: custom set dimension != N");
      }
      break;
  }
}

ProblemInstance generate_problem(const ExperimentSpec& spec, Index m,
                                 long long trial_id) {
  spec.validate();
  if (m < 1) throw InvalidArgument("generate_problem: M must be >= 1");
  const auto key = static_cast<std::uint64_t>(trial_id);
  ProblemInstance inst;
  Problem& pb = inst.problem;

  switch (spec.family) {
    case SetFamily::kWindows: {
      inst.x_true = window_signal(spec, trial_id, &inst.true_set);
      for (const auto& w : sliding_windows(spec.n, spec.k)) {
        pb.sets.push_back(ConvexSet::window(spec.n, w.first, w.last));
      }
      break;
    }
    case SetFamily::kQuantized: {
      Index window = 0;
      inst.x_true = window_signal(spec, trial_id, &window);
      CounterRng aux(spec.seed, key, StreamPurpose::kAuxMeasurements);
      const Matrix b = aux.normal_matrix(spec.aux_measurements, spec.n);
      const std::vector<double> edges =
          spec.quantizer_edges.empty() ? default_edges() : spec.quantizer_edges;
      Vector levels(b.rows());
      for (Index i = 0; i < b.rows(); ++i) {
        levels[i] = static_cast<double>(quantize(edges, b.row(i).dot(inst.x_true)));
      }
      const auto cells = quantized_cells(b, levels, edges);
      pb.sets.push_back(intersect_linear(cells));
      inst.true_set = 0;
      break;
    }
    case SetFamily::kPhaseBranches: {
      Index window = 0;
      inst.x_true = window_signal(spec, trial_id, &window);
      CounterRng aux(spec.seed, key, StreamPurpose::kAuxMeasurements);
      const Matrix b = aux.normal_matrix(spec.aux_measurements, spec.n);
      const Vector proj = b * inst.x_true;
      pb.sets = phase_retrieval_branches(b, proj.cwiseAbs2());
      // Branch bit i (over rows with nonzero magnitude) marks a negative root.
      Index branch = 0;
      Index bit = 0;
      for (Index i = 0; i < proj.size(); ++i) {
        if (proj[i] == 0.0) continue;
        if (proj[i] < 0.0) branch |= Index{1} << bit;
        ++bit;
      }
      inst.true_set = branch;
      break;
    }
    case SetFamily::kCustom: {
      CounterRng choice(spec.seed, key, StreamPurpose::kSetChoice);
      CounterRng draw(spec.seed, key, StreamPurpose::kSignal);
      inst.true_set = static_cast<Index>(
          choice.below(static_cast<std::uint64_t>(spec.custom_sets.size())));
      const ConvexSet& set = spec.custom_sets[static_cast<std::size_t>(inst.true_set)];
      Vector x = project_set(set, draw.normal_vector(spec.n));
      // Windows are subspaces, so unit scaling keeps the signal inside; other
      // shapes keep the projected point as drawn.
      if (set.as<SupportWindow>() && x.norm() > 0.0) x /= x.norm();
      inst.x_true = std::move(x);
      pb.sets = spec.custom_sets;
      break;
    }
  }

  CounterRng mat(spec.seed, key, StreamPurpose::kMatrix);
  pb.a = mat.normal_matrix(m, spec.n);
  pb.y = pb.a * inst.x_true;
  if (spec.noise_std > 0.0) {
    CounterRng noise(spec.seed, key, StreamPurpose::kNoise);
    pb.y += spec.noise_std * noise.normal_vector(m);
  }
  pb.x_true = inst.x_true;
  return inst;
}

TrialRecord run_trial(const ExperimentSpec& spec, Index m, long long trial_id,
                      Arm arm) {
  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.m = m;
  rec.arm = arm;
  rec.seed_used = spec.seed;
  rec.rel_error = kInf;
  const auto start = std::chrono::steady_clock::now();
  try {
    ProblemInstance inst = generate_problem(spec, m, trial_id);
    rec.true_set = inst.true_set;
    if (arm == Arm::kBaseline) {
      inst.problem.sets = {ConvexSet::full_space(spec.n)};
      rec.true_set = 0;
    }
    SolverConfig cfg = spec.solver;
    cfg.certificates = false;
    const SolverResult res = solve(inst.problem, cfg);
    const double scale = inst.x_true.norm();
    rec.rel_error = (res.x_hat - inst.x_true).norm() / (scale > 0.0 ? scale : 1.0);
    rec.chosen_set = res.chosen_set;
    rec.iterations_run = res.iterations_run;
  } catch (const std::exception& e) {
    rec.error = e.what();
    if (rec.error.empty()) rec.error = "unknown error";
  }
  rec.success = rec.error.empty() && rec.rel_error <= spec.success_tol;
  rec.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return rec;
}

PhaseTable phase_transition(const ExperimentSpec& spec, Execution exec) {
  spec.validate();
  struct Job {
    Index m;
    Arm arm;
    long long trial;
  };
  std::vector<Job> jobs;
  for (const Index m : spec.m_grid) {
    for (long long t = 0; t < spec.trials; ++t) jobs.push_back({m, Arm::kUnion, t});
    if (spec.baseline) {
      for (long long t = 0; t < spec.trials; ++t) jobs.push_back({m, Arm::kBaseline, t});
    }
  }
  PhaseTable table;
  table.records.resize(jobs.size());
  const auto count = static_cast<long long>(jobs.size());
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long j = 0; j < count; ++j) {
      const Job& job = jobs[static_cast<std::size_t>(j)];
      table.records[static_cast<std::size_t>(j)] =
          run_trial(spec, job.m, job.trial, job.arm);
    }
  } else {
    for (long long j = 0; j < count; ++j) {
      const Job& job = jobs[static_cast<std::size_t>(j)];
      table.records[static_cast<std::size_t>(j)] =
          run_trial(spec, job.m, job.trial, job.arm);
    }
  }
  table.rows = aggregate(table.records, spec.success_tol);
  return table;
}

std::vector<PhaseRow> aggregate(const std::vector<TrialRecord>& records,
                                double success_tol) {
  std::vector<PhaseRow> rows;
  std::map<Index, std::size_t> slot;
  for (const auto& r : records) {
    if (!slot.contains(r.m)) {
      slot[r.m] = rows.size();
      rows.push_back(PhaseRow{});
      rows.back().m = r.m;
    }
  }
  // Sums are folded in record order, which phase_transition fixes by job
  // index, so the aggregates are independent of execution order.
  for (const auto& r : records) {
    PhaseRow& row = rows[slot[r.m]];
    const bool ok = r.error.empty() && r.rel_error <= success_tol;
    if (r.arm == Arm::kUnion) {
      ++row.trials;
      row.successes += ok ? 1 : 0;
      row.mean_rel_error += r.rel_error;
      row.mean_wall_time += r.wall_time;
    } else {
      ++row.baseline_trials;
      row.baseline_successes += ok ? 1 : 0;
      row.baseline_mean_rel_error += r.rel_error;
      row.baseline_mean_wall_time += r.wall_time;
    }
  }
  for (auto& row : rows) {
    if (row.trials > 0) {
      const auto n = static_cast<double>(row.trials);
      row.success_rate = static_cast<double>(row.successes) / n;
      row.mean_rel_error /= n;
      row.mean_wall_time /= n;
    }
    if (row.baseline_trials > 0) {
      const auto n = static_cast<double>(row.baseline_trials);
      row.baseline_success_rate = static_cast<double>(row.baseline_successes) / n;
      row.baseline_mean_rel_error /= n;
      row.baseline_mean_wall_time /= n;
    }
  }
  return rows;
}

std::optional<Index> success_threshold(const std::vector<PhaseRow>& rows,
                                       double level, Arm arm) {
  std::optional<Index> best;
  for (const auto& row : rows) {
    const long long n = arm == Arm::kUnion ? row.trials : row.baseline_trials;
    const double rate =
        arm == Arm::kUnion ? row.success_rate : row.baseline_success_rate;
    if (n > 0 && rate >= level && (!best || row.m < *best)) best = row.m;
  }
  return best;
}

bool dominates_baseline(const std::vector<PhaseRow>& rows) {
  if (rows.empty()) throw InvalidArgument("dominates_baseline: no rows");
  for (const auto& row : rows) {
    if (row.trials == 0 || row.baseline_trials == 0) {
      throw InvalidArgument("dominates_baseline: row without both arms");
    }
    const double pooled = 0.5 * (row.success_rate + row.baseline_success_rate);
    const double sd =
        std::sqrt(pooled * (1.0 - pooled) / static_cast<double>(row.trials));
    if (row.success_rate < row.baseline_success_rate - sd) return false;
  }
  return true;
}

std::vector<std::size_t> monotonicity_violations(
    const std::vector<PhaseRow>& rows, Arm arm) {
  constexpr double kZ95 = 1.6448536269514722;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const bool u = arm == Arm::kUnion;
    const auto n1 = static_cast<double>(u ? rows[i].trials : rows[i].baseline_trials);
    const auto n2 =
        static_cast<double>(u ? rows[i + 1].trials : rows[i + 1].baseline_trials);
    if (n1 == 0.0 || n2 == 0.0) continue;
    const auto s1 = static_cast<double>(u ? rows[i].successes : rows[i].baseline_successes);
    const auto s2 =
        static_cast<double>(u ? rows[i + 1].successes : rows[i + 1].baseline_successes);
    const double pooled = (s1 + s2) / (n1 + n2);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    if (se == 0.0) continue;
    if ((s2 / n2 - s1 / n1) / se < -kZ95) out.push_back(i);
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("loglog_slope: need two or more paired points");
  }
  double mx = 0.0;
  double my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw InvalidArgument("loglog_slope: data must be positive");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("loglog_slope: x values are all equal");
  return sxy / sxx;
}

std::vector<ConvergenceSeries> convergence_study(const ExperimentSpec& spec,
                                                 const ConvergenceStudy& study) {
  if (study.horizons.empty() || study.schedules.empty()) {
    throw InvalidArgument("convergence_study: need horizons and schedules");
  }
  const ProblemInstance inst = generate_problem(spec, study.m, study.trial_id);
  std::vector<ConvergenceSeries> out;
  for (const StepSchedule schedule : study.schedules) {
    ConvergenceSeries series;
    series.schedule = schedule;
    series.regularized = schedule == StepSchedule::kInverseT;
    SolverConfig cfg = spec.solver;
    cfg.schedule = schedule;
    cfg.certificates = true;
    cfg.stop_tol = 0.0;
    if (series.regularized) {
      cfg.lambda3 = study.lambda3;
      cfg.prior_q = SimplexPoint::uniform(inst.problem.num_sets());
    } else {
      cfg.lambda3 = 0.0;
      cfg.prior_q.reset();
    }
    std::vector<double> ts;
    std::vector<double> energy;
    std::vector<double> regret;
    for (const long long t : study.horizons) {
      cfg.horizon = t;
      const SolverResult res = solve(inst.problem, cfg);
      const CertificateReport& c = res.certificates;
      series.points.push_back({t, c.step_energy, c.step_energy_bound,
                               c.mw_regret, c.mw_regret_bound, c.prox_gap,
                               c.prox_gap_bound, c.inner_residual});
      ts.push_back(static_cast<double>(t));
      energy.push_back(c.step_energy);
      regret.push_back(c.mw_regret);
    }
    const auto positive = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double z) { return z > 0.0; });
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    series.step_energy_slope =
        ts.size() >= 2 && positive(energy) ? loglog_slope(ts, energy) : nan;
    series.mw_regret_slope =
        ts.size() >= 2 && positive(regret) ? loglog_slope(ts, regret) : nan;
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace ucs
