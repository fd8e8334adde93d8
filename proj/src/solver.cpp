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

#include "ucs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ucs {

void Problem::validate() const {
  if (a.rows() < 1 || a.cols() < 1) {
    throw InvalidArgument("problem: measurement matrix must be at least 1x1");
  }
  require_finite(a, "problem matrix");
  require_finite(y, "problem measurements");
  if (y.size() != a.rows()) {
    throw InvalidArgument("problem: y has " + std::to_string(y.size()) +
                          " entries but A has " + std::to_string(a.rows()) +
                          " rows");
  }
  if (sets.empty()) throw InvalidArgument("problem: empty set list");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].dim() != a.cols()) {
      throw InvalidArgument("problem: set " + std::to_string(i) +
                            " has dimension " + std::to_string(sets[i].dim()) +
                            ", expected " + std::to_string(a.cols()));
    }
  }
  if (x_true) {
    require_finite(*x_true, "problem ground truth");
    if (x_true->size() != a.cols()) {
      throw InvalidArgument("problem: ground truth dimension mismatch");
    }
  }
}

std::string_view to_string(StepSchedule s) {
  switch (s) {
    case StepSchedule::kFixedHorizon:
      return "fixed-horizon";
    case StepSchedule::kDoublingTrick:
      return "doubling-trick";
    case StepSchedule::kInverseT:
      return "inverse-t";
    case StepSchedule::kInverseTSquared:
      return "inverse-t-squared";
  }
  return "unknown";
}

StepSchedule parse_schedule(std::string_view name) {
  for (auto s : {StepSchedule::kFixedHorizon, StepSchedule::kDoublingTrick,
                 StepSchedule::kInverseT, StepSchedule::kInverseTSquared}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown p schedule '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("solver config: ") + what +
                            " must be positive");
    }
  };
  positive(lambda1, "lambda1");
  positive(lambda2, "lambda2");
  positive(radius, "radius");
  positive(eta_p_scale, "eta_p_scale");
  positive(penalty_factor, "penalty_factor");
  if (!(lambda3 >= 0.0) || !std::isfinite(lambda3)) {
    throw InvalidArgument("solver config: lambda3 must be >= 0");
  }
  if (horizon < 1) throw InvalidArgument("solver config: horizon must be >= 1");
  if (eta_x) positive(*eta_x, "eta_x");
  if (penalty_scale) positive(*penalty_scale, "penalty_scale");
  if (!(average_tail > 0.0 && average_tail <= 1.0)) {
    throw InvalidArgument("solver config: average_tail must lie in (0, 1]");
  }
  if (!(stop_tol >= 0.0)) throw InvalidArgument("solver config: stop_tol must be >= 0");
  if (schedule == StepSchedule::kInverseT && lambda3 <= 0.0) {
    throw InvalidArgument("solver config: inverse-t schedule needs lambda3 > 0");
  }
  if ((lambda3 > 0.0) != prior_q.has_value()) {
    throw InvalidArgument(
        "solver config: prior_q must be given exactly when lambda3 > 0");
  }
}

SolverConstants derive_constants(const Problem& problem,
                                 const SolverConfig& cfg) {
  problem.validate();
  cfg.validate();
  if (cfg.prior_q && cfg.prior_q->size() != problem.num_sets()) {
    throw InvalidArgument("solver config: prior_q length does not match set count");
  }
  SolverConstants k;
  k.spectral_norm = spectral_norm(problem.a);
  const double a2 = k.spectral_norm * k.spectral_norm;
  k.penalty_scale =
      cfg.penalty_scale.value_or(cfg.penalty_factor * cfg.lambda1 * a2);
  const PenaltyConfig pen{k.penalty_scale};

  double max_lh = 0.0;
  double max_h = 0.0;
  const double r = cfg.radius;
  const Vector origin = Vector::Zero(problem.dim());
  for (const auto& set : problem.sets) {
    max_lh = std::max(max_lh, smoothness_constant(set, pen));
    if (const auto* w = set.as<SupportWindow>()) {
      if (w->size() < set.dim()) max_h = std::max(max_h, k.penalty_scale * r * r);
    } else {
      const double reach = r + distance(set, origin);
      max_h = std::max(max_h, 0.5 * k.penalty_scale * reach * reach);
    }
  }
  k.lipschitz = max_lh + cfg.lambda1 * a2 + cfg.lambda2;
  k.eta_x = cfg.eta_x.value_or(1.0 / k.lipschitz);

  const double fit = problem.y.norm() + k.spectral_norm * r;
  k.r_f = std::sqrt(static_cast<double>(problem.dim())) * r + max_h +
          0.5 * cfg.lambda1 * fit * fit + 0.5 * cfg.lambda2 * r * r;
  k.r_g = std::sqrt(static_cast<double>(problem.num_sets())) * k.r_f +
          cfg.lambda3 * std::numbers::sqrt2;
  return k;
}

Objective::Objective(const Problem& problem, const SolverConfig& cfg)
    : Objective(problem, cfg, derive_constants(problem, cfg)) {}

Objective::Objective(const Problem& problem, const SolverConfig& cfg,
                     const SolverConstants& constants)
    : problem_(&problem), cfg_(&cfg), constants_(constants) {
  windows_.reserve(problem.sets.size());
  for (const auto& set : problem.sets) {
    const auto* w = set.as<SupportWindow>();
    if (!w) {
      windows_.clear();
      break;
    }
    windows_.push_back(*w);
  }
}

void Objective::check_x(const Vector& x) const {
  if (x.size() != problem_->dim()) {
    throw InvalidArgument("objective: x has dimension " +
                          std::to_string(x.size()) + ", expected " +
                          std::to_string(problem_->dim()));
  }
}

Vector Objective::components(const Vector& x) const {
  Vector residual;
  return components(x, &residual);
}

Vector Objective::components(const Vector& x, Vector* residual) const {
  check_x(x);
  const Problem& pb = *problem_;
  *residual = pb.a * x - pb.y;
  const double energy = x.squaredNorm();
  const double shared = x.lpNorm<1>() +
                        0.5 * cfg_->lambda1 * residual->squaredNorm() +
                        0.5 * cfg_->lambda2 * energy;
  const Index l = pb.num_sets();
  Vector f(l);
  const double c = constants_.penalty_scale;
  if (!windows_.empty()) {
    // prefix[j] = sum_{k<j} x_k^2
    std::vector<double> prefix(static_cast<std::size_t>(x.size()) + 1, 0.0);
    for (Index j = 0; j < x.size(); ++j) {
      prefix[static_cast<std::size_t>(j) + 1] =
          prefix[static_cast<std::size_t>(j)] + x[j] * x[j];
    }
    const double total = prefix.back();
    for (Index i = 0; i < l; ++i) {
      const auto& w = windows_[static_cast<std::size_t>(i)];
      const double inside = prefix[static_cast<std::size_t>(w.last) + 1] -
                            prefix[static_cast<std::size_t>(w.first)];
      f[i] = shared + c * std::max(0.0, total - inside);
    }
    return f;
  }
  const PenaltyConfig pen{c};
  for (Index i = 0; i < l; ++i) {
    f[i] = shared + penalty(pb.sets[static_cast<std::size_t>(i)], pen, x);
  }
  return f;
}

double Objective::lagrangian(const SimplexPoint& p, const Vector& x) const {
  return lagrangian(p, x, components(x));
}

double Objective::lagrangian(const SimplexPoint& p, const Vector& x,
                             const Vector& f) const {
  (void)x;
  if (p.size() != f.size()) {
    throw InvalidArgument("lagrangian: weight count does not match set count");
  }
  double value = p.weights().dot(f);
  if (cfg_->lambda3 > 0.0 && cfg_->prior_q) {
    value += 0.5 * cfg_->lambda3 *
             (p.weights() - cfg_->prior_q->weights()).squaredNorm();
  }
  return value;
}

Vector Objective::smooth_gradient(const Vector& x, const SimplexPoint& p) const {
  check_x(x);
  return smooth_gradient(x, p, problem_->a * x - problem_->y);
}

Vector Objective::smooth_gradient(const Vector& x, const SimplexPoint& p,
                                  const Vector& residual) const {
  check_x(x);
  const Problem& pb = *problem_;
  if (p.size() != pb.num_sets()) {
    throw InvalidArgument("gradient: weight count does not match set count");
  }
  if (residual.size() != pb.a.rows()) {
    throw InvalidArgument("gradient: residual length does not match A");
  }
  Vector grad = cfg_->lambda1 * (pb.a.transpose() * residual) +
                cfg_->lambda2 * x;
  const double c = constants_.penalty_scale;
  if (!windows_.empty()) {
    // Coordinate j is penalised by every window not covering it:
    // coef_j = 2c (1 - sum_{i : j in W_i} p_i), via a difference array.
    std::vector<double> cover(static_cast<std::size_t>(x.size()) + 1, 0.0);
    for (std::size_t i = 0; i < windows_.size(); ++i) {
      const double w = p[static_cast<Index>(i)];
      cover[static_cast<std::size_t>(windows_[i].first)] += w;
      cover[static_cast<std::size_t>(windows_[i].last) + 1] -= w;
    }
    double running = 0.0;
    for (Index j = 0; j < x.size(); ++j) {
      running += cover[static_cast<std::size_t>(j)];
      grad[j] += 2.0 * c * std::max(0.0, 1.0 - running) * x[j];
    }
    return grad;
  }
  const PenaltyConfig pen{c};
  for (Index i = 0; i < pb.num_sets(); ++i) {
    if (p[i] == 0.0) continue;
    grad += p[i] * penalty_grad(pb.sets[static_cast<std::size_t>(i)], pen, x);
  }
  return grad;
}

Vector objective_components(const Objective& objective, const Vector& x) {
  return objective.components(x);
}

double lagrangian(const Objective& objective, const SimplexPoint& p,
                  const Vector& x) {
  return objective.lagrangian(p, x);
}

SimplexPoint mw_update_p(const SimplexPoint& p, const Vector& f, double eta_p) {
  if (f.size() != p.size()) {
    throw InvalidArgument("mw_update_p: loss length does not match weights");
  }
  if (!f.allFinite()) throw InvalidArgument("mw_update_p: non-finite loss");
  if (!(eta_p >= 0.0) || !std::isfinite(eta_p)) {
    throw InvalidArgument("mw_update_p: step must be finite and >= 0");
  }
  if ((p.weights().array() <= 0.0).any()) {
    throw InvalidArgument("mw_update_p: weights must be strictly positive");
  }
  const double shift = f.minCoeff();
  Vector w(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    w[i] = std::max(p[i] * std::exp(-eta_p * (f[i] - shift)),
                    std::numeric_limits<double>::min());
  }
  w /= w.sum();
  return SimplexPoint(std::move(w));
}

SimplexPoint regularized_update_p(const SimplexPoint& p, const Vector& f,
                                  const SimplexPoint& q, double lambda3,
                                  double eta_p) {
  if (!(lambda3 > 0.0)) {
    throw InvalidArgument("regularized_update_p: lambda3 must be > 0");
  }
  if (f.size() != p.size() || q.size() != p.size()) {
    throw InvalidArgument("regularized_update_p: length mismatch");
  }
  if (!f.allFinite()) throw InvalidArgument("regularized_update_p: non-finite loss");
  if (!(eta_p >= 0.0)) throw InvalidArgument("regularized_update_p: negative step");
  const Vector grad = f + lambda3 * (p.weights() - q.weights());
  return project_simplex(p.weights() - eta_p * grad);
}

Vector prox_gradient_step_x(const Objective& objective, const Vector& x,
                            const SimplexPoint& p, double eta_x) {
  if (!(eta_x > 0.0)) throw InvalidArgument("prox step: eta_x must be > 0");
  return soft_threshold(x - eta_x * objective.smooth_gradient(x, p), eta_x);
}

double schedule_step(StepSchedule schedule, long long t, long long horizon,
                     Index num_sets, const SolverConstants& constants,
                     double lambda3, double scale) {
  const double s = static_cast<double>(t + 1);
  const double log_l = std::log(static_cast<double>(std::max<Index>(num_sets, 1)));
  switch (schedule) {
    case StepSchedule::kFixedHorizon:
      return scale * std::sqrt(2.0 * log_l / static_cast<double>(horizon)) /
             constants.r_f;
    case StepSchedule::kDoublingTrick: {
      // Epoch k spans t+1 in [2^k, 2^{k+1}) and is tuned for horizon 2^k.
      const double epoch = std::exp2(std::floor(std::log2(s)));
      return scale * std::sqrt(2.0 * log_l / epoch) / constants.r_f;
    }
    case StepSchedule::kInverseT:
      return scale / (lambda3 * s);
    case StepSchedule::kInverseTSquared:
      return scale * std::sqrt(2.0 * log_l) / (constants.r_f * s * s);
  }
  return 0.0;
}

namespace {

void clamp_radius(Vector& x, double radius) {
  const double n = x.norm();
  if (n > radius) x *= radius / n;
}

}  // namespace

SolverResult solve(const Problem& problem, const SolverConfig& cfg) {
  const SolverConstants constants = derive_constants(problem, cfg);
  const Objective objective(problem, cfg, constants);
  const Index n = problem.dim();
  const Index l = problem.num_sets();
  const bool regularized = cfg.lambda3 > 0.0;

  SolverResult result;
  result.constants = constants;
  Trace& trace = result.trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.horizon));
  trace.sum_f = Vector::Zero(l);
  trace.sum_x = Vector::Zero(n);
  trace.sum_p = Vector::Zero(l);

  Vector x = Vector::Zero(n);
  SimplexPoint p = SimplexPoint::uniform(l);
  int quiet_steps = 0;
  const auto tail_start = static_cast<long long>(std::floor(
      (1.0 - cfg.average_tail) * static_cast<double>(cfg.horizon)));
  Vector tail_x = Vector::Zero(n);
  Vector tail_p = Vector::Zero(l);
  long long tail_count = 0;

  Vector residual;
  for (long long t = 0; t < cfg.horizon; ++t) {
    const Vector f = objective.components(x, &residual);
    IterationRecord rec;
    rec.t = t;
    rec.lagrangian = objective.lagrangian(p, x, f);
    rec.min_f = f.minCoeff();
    rec.max_f = f.maxCoeff();
    rec.p_entropy = p.entropy();
    rec.weighted_f = p.weights().dot(f);
    rec.eta_p = schedule_step(cfg.schedule, t, cfg.horizon, l, constants,
                              cfg.lambda3, cfg.eta_p_scale);
    if (t == 0) trace.initial_lagrangian = rec.lagrangian;

    trace.sum_f += f;
    trace.sum_x += x;
    trace.sum_p += p.weights();
    if (t >= tail_start) {
      tail_x += x;
      tail_p += p.weights();
      ++tail_count;
    }
    trace.sum_lagrangian += rec.lagrangian;
    trace.sum_weighted_f += rec.weighted_f;
    trace.max_abs_f = std::max(trace.max_abs_f, f.cwiseAbs().maxCoeff());

    SimplexPoint p_next =
        regularized
            ? regularized_update_p(p, f, *cfg.prior_q, cfg.lambda3, rec.eta_p)
            : mw_update_p(p, f, rec.eta_p);
    // prox_gradient_step_x with the residual of this iterate reused.
    Vector x_next = soft_threshold(
        x - constants.eta_x * objective.smooth_gradient(x, p, residual),
        constants.eta_x);
    clamp_radius(x_next, cfg.radius);

    rec.step_sq = (x_next - x).squaredNorm();
    trace.records.push_back(rec);
    x = std::move(x_next);
    p = std::move(p_next);

    if (cfg.stop_tol > 0.0) {
      quiet_steps = std::sqrt(rec.step_sq) <= cfg.stop_tol ? quiet_steps + 1 : 0;
      if (quiet_steps >= 10) break;
    }
  }

  result.iterations_run = trace.length();
  if (tail_count == 0) {
    // Early stop before the tail began: fall back to the whole-run average.
    tail_x = trace.sum_x;
    tail_p = trace.sum_p;
    tail_count = trace.length();
  }
  result.x_bar = tail_x / static_cast<double>(tail_count);
  result.p_bar = project_simplex(tail_p / static_cast<double>(tail_count));
  result.x_last = x;
  auto [x_hat, chosen] = project_union(problem.sets, result.x_bar);
  result.x_hat = std::move(x_hat);
  result.chosen_set = chosen;
  if (cfg.certificates) result.certificates = certificates(trace, objective);
  return result;
}

InnerSolve minimize_x(const Objective& objective, const SimplexPoint& p,
                      const Vector& x0, long long max_iters, double tol) {
  const double eta = objective.constants().eta_x;
  const double radius = objective.config().radius;
  InnerSolve out;
  Vector x = x0;
  clamp_radius(x, radius);
  Vector next = x;
  for (long long k = 0; k < std::max(1LL, max_iters); ++k) {
    next = prox_gradient_step_x(objective, x, p, eta);
    clamp_radius(next, radius);
    out.iterations = k + 1;
    const double move = (next - x).norm();
    x.swap(next);
    if (move <= tol) break;
  }
  // F(x+) - F* <= <G, x - x*> <= ||G|| 2R with G the gradient mapping at x.
  next = prox_gradient_step_x(objective, x, p, eta);
  clamp_radius(next, radius);
  out.residual = (x - next).norm() / eta * 2.0 * radius;
  out.x = next;
  out.value = objective.lagrangian(p, next);
  return out;
}

namespace {

double step_energy_bound(double initial, const SolverConstants& k,
                         const SolverConfig& cfg, double steps, double sum_eta,
                         double sum_eta_sq) {
  const double head = 2.0 * initial / (k.lipschitz * steps);
  if (cfg.lambda3 > 0.0) {
    return head + 2.0 * k.r_g * k.r_g *
                      (sum_eta + 0.5 * cfg.lambda3 * sum_eta_sq) /
                      (k.lipschitz * steps);
  }
  return head + 4.0 * k.r_f * k.r_f * sum_eta / (k.lipschitz * steps);
}

}  // namespace

std::vector<StepEnergyPrefix> step_energy_prefixes(const Trace& trace,
                                                   const Objective& objective) {
  std::vector<StepEnergyPrefix> out;
  out.reserve(trace.records.size());
  double sum_eta = 0.0;
  double sum_eta_sq = 0.0;
  double total = 0.0;
  for (const auto& rec : trace.records) {
    sum_eta += rec.eta_p;
    sum_eta_sq += rec.eta_p * rec.eta_p;
    total += rec.step_sq;
    const auto steps = static_cast<double>(rec.t + 1);
    out.push_back({rec.t + 1, total / steps,
                   step_energy_bound(trace.initial_lagrangian,
                                     objective.constants(), objective.config(),
                                     steps, sum_eta, sum_eta_sq)});
  }
  return out;
}

double p_regret(const Trace& trace, const Objective& objective) {
  if (trace.records.empty()) throw InvalidArgument("p_regret: empty trace");
  const auto steps = static_cast<double>(trace.length());
  const SolverConfig& cfg = objective.config();
  if (cfg.lambda3 > 0.0 && cfg.prior_q) {
    // min_p <p, sum f> + T lambda3/2 ||p - q||^2 is attained at
    // Proj(q - mean f / lambda3).
    const Vector& q = cfg.prior_q->weights();
    const SimplexPoint best =
        project_simplex(q - (trace.sum_f / steps) / cfg.lambda3);
    const double comparator =
        best.weights().dot(trace.sum_f) +
        steps * 0.5 * cfg.lambda3 * (best.weights() - q).squaredNorm();
    return (trace.sum_lagrangian - comparator) / steps;
  }
  // A linear form over the simplex is minimised at a vertex.
  return (trace.sum_weighted_f - trace.sum_f.minCoeff()) / steps;
}

CertificateReport certificates(const Trace& trace, const Objective& objective) {
  if (trace.records.empty()) throw InvalidArgument("certificates: empty trace");
  const SolverConfig& cfg = objective.config();
  const SolverConstants& k = objective.constants();
  const auto steps = static_cast<double>(trace.length());
  const double log_l =
      std::log(static_cast<double>(std::max<Index>(objective.problem().num_sets(), 1)));

  CertificateReport rep;
  rep.regularized = cfg.lambda3 > 0.0;
  rep.horizon = trace.length();
  rep.r_f_used = k.r_f;
  rep.r_f_observed = trace.max_abs_f;
  rep.r_g_used = k.r_g;
  rep.l_h_used = k.lipschitz;
  rep.eta_x_used = k.eta_x;

  double sum_eta = 0.0;
  double sum_eta_sq = 0.0;
  double step_total = 0.0;
  double min_eta = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace.records) {
    sum_eta += rec.eta_p;
    sum_eta_sq += rec.eta_p * rec.eta_p;
    step_total += rec.step_sq;
    min_eta = std::min(min_eta, rec.eta_p);
  }
  rep.step_energy = step_total / steps;
  rep.mw_regret = p_regret(trace, objective);

  if (rep.regularized) {
    double harmonic = 0.0;
    for (long long t = 1; t <= trace.length(); ++t) harmonic += 1.0 / static_cast<double>(t);
    rep.mw_regret_bound = k.r_g * k.r_g * harmonic / (2.0 * cfg.lambda3 * steps);
    rep.step_energy_bound = step_energy_bound(trace.initial_lagrangian, k, cfg,
                                              steps, sum_eta, sum_eta_sq);
  } else {
    // Hedge with nonincreasing steps: log L / eta_T + (R_f^2 / 2) sum_t eta_t;
    // for the constant fixed-horizon step this is R_f sqrt(2 log L / T).
    rep.mw_regret_bound =
        (log_l > 0.0 && min_eta > 0.0)
            ? (log_l / min_eta + 0.5 * k.r_f * k.r_f * sum_eta) / steps
            : 0.0;
    rep.step_energy_bound = step_energy_bound(trace.initial_lagrangian, k, cfg,
                                              steps, sum_eta, sum_eta_sq);
  }

  // x* minimises sum_t L(p_t, x) = T L(p_bar, x) + const, since L is affine
  // in p.
  const SimplexPoint p_bar = project_simplex(trace.sum_p / steps);
  const InnerSolve inner =
      minimize_x(objective, p_bar, trace.sum_x / steps,
                 10 * trace.length(), 1e-10);
  // The p-regulariser does not depend on x, so it enters both sides alike.
  const double regularizer_sum = trace.sum_lagrangian - trace.sum_weighted_f;
  const double comparator =
      (trace.sum_p.dot(objective.components(inner.x)) + regularizer_sum) / steps;
  rep.prox_gap = trace.sum_lagrangian / steps - comparator;
  rep.inner_residual = inner.residual;
  rep.inner_iterations = inner.iterations;
  rep.prox_gap_bound = rep.regularized
                           ? cfg.radius * cfg.radius / (2.0 * k.eta_x * steps)
                           : 2.0 * cfg.radius * cfg.radius / (k.eta_x * steps);
  return rep;
}

}  // namespace ucs
