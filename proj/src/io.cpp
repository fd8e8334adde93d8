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

#include "ucs/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ucs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_number(std::string_view text, double* out) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") {
    *out = kInf;
    return true;
  }
  if (t == "-inf") {
    *out = -kInf;
    return true;
  }
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last && first != last;
}

// Rows of a numeric CSV; blank lines and '#' comments are skipped.
std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      const std::string_view field(t.data() + start,
                                   (comma == std::string::npos ? t.size() : comma) - start);
      double v = 0.0;
      if (!parse_number(field, &v)) {
        throw ParseError(path.string(), lineno,
                         "not a number: '" + trim(field) + "'");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string(), lineno,
                       "expected " + std::to_string(rows.front().size()) +
                           " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double number_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    double v = 0.0;
    if (parse_number(j.get<std::string>(), &v)) return v;
  }
  throw InvalidArgument(what + ": expected a number");
}

Json number_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidArgument(what + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = number_from_json(j[i], what);
  }
  return v;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v[i]));
  return out;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) {
    throw InvalidArgument(what + ": expected a nonempty array of rows");
  }
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw InvalidArgument(what + ": row " + std::to_string(r) +
                            " has the wrong length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = number_from_json(j[r][c], what);
    }
  }
  return m;
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known,
                    const std::string& what) {
  if (!j.is_object()) throw InvalidArgument(what + ": expected an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw InvalidArgument(what + ": unknown key '" + item.key() + "'");
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& name) {
  const std::filesystem::path p(name);
  return p.is_absolute() ? p : base / p;
}

void append_csv(std::string& out, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += ',';
    out += f;
    first = false;
  }
  out += '\n';
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : "") +
                         ": " + what),
      line_(line) {}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::string hash_vector(const Vector& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Index i = 0; i < v.size(); ++i) {
    const std::string s = format_double(v[i]) + ";";
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() +
                                             static_cast<std::ptrdiff_t>(upto > 0 ? upto - 1 : 0),
                                         '\n'));
    std::string msg = e.what();
    // Drop the library's "[json.exception.parse_error.101] " prefix.
    if (const auto cut = msg.find("] "); cut != std::string::npos) msg = msg.substr(cut + 2);
    throw ParseError(path.string(), line, msg);
  }
}

void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw InvalidArgument("override '" + std::string(assignment) +
                          "': expected key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos
                                                                       : dot - start);
    if (part.empty()) throw InvalidArgument("override '" + key + "': empty key segment");
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (ec != std::errc() || ptr != part.data() + part.size() || idx >= node->size()) {
        throw InvalidArgument("override '" + key + "': bad array index '" + part + "'");
      }
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) {
        throw InvalidArgument("override '" + key + "': '" + part +
                              "' is below a non-object value");
      }
      node = &(*node)[part];
    }
    if (last) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw ParseError(path.string(), 0, "no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return m;
}

Vector read_vector_csv(const std::filesystem::path& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw ParseError(path.string(), 0, "expected a single row or column");
}

void write_vector_csv(const std::filesystem::path& path, const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) out += format_double(v[i]) + "\n";
  write_text_file(path, out);
}

Json set_to_json(const ConvexSet& set) {
  Json j;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SupportWindow>) {
          if (s.size() == set.dim()) {
            j = {{"kind", "full"}};
          } else {
            j = {{"kind", "window"}, {"start", s.first + 1}, {"width", s.last - s.first}};
          }
        } else if constexpr (std::is_same_v<T, AffineSlice>) {
          j = {{"kind", "affine"}, {"a", vector_to_json(s.a)}, {"b", s.b}};
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          j = {{"kind", "halfspace"}, {"a", vector_to_json(s.a)}, {"b", s.b}};
        } else if constexpr (std::is_same_v<T, Box>) {
          j = {{"kind", "box"}, {"lower", vector_to_json(s.lower)}, {"upper", vector_to_json(s.upper)}};
        } else if constexpr (std::is_same_v<T, Ball>) {
          j = {{"kind", "ball"}, {"center", vector_to_json(s.center)}, {"radius", s.radius}};
        } else {
          Json rows = Json::array();
          for (const auto& r : s.rows) {
            rows.push_back({{"a", vector_to_json(r.a)},
                            {"lo", number_to_json(r.lo)},
                            {"hi", number_to_json(r.hi)}});
          }
          j = {{"kind", "polytope"}, {"rows", rows}};
        }
      },
      set.shape());
  return j;
}

ConvexSet set_from_json(const Json& j, Index dim) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw InvalidArgument("set: expected an object with a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  auto index_field = [&](const char* key) -> Index {
    if (!j.contains(key) || !j[key].is_number_integer()) {
      throw InvalidArgument("set '" + kind + "': integer '" + key + "' required");
    }
    return j[key].get<Index>();
  };
  auto field = [&](const char* key) -> const Json& {
    if (!j.contains(key)) {
      throw InvalidArgument("set '" + kind + "': missing '" + key + "'");
    }
    return j[key];
  };
  auto check_dim = [&](const ConvexSet& s) {
    if (s.dim() != dim) {
      throw InvalidArgument("set '" + kind + "': dimension " + std::to_string(s.dim()) +
                            " does not match N = " + std::to_string(dim));
    }
    return s;
  };
  if (kind == "window") {
    reject_unknown(j, {"kind", "start", "width"}, "window set");
    return ConvexSet::window_1based(dim, index_field("start"), index_field("width"));
  }
  if (kind == "full") {
    reject_unknown(j, {"kind"}, "full set");
    return ConvexSet::full_space(dim);
  }
  if (kind == "affine") {
    reject_unknown(j, {"kind", "a", "b"}, "affine set");
    return check_dim(ConvexSet::affine(vector_from_json(field("a"), "affine.a"),
                                       number_from_json(field("b"), "affine.b")));
  }
  if (kind == "halfspace") {
    reject_unknown(j, {"kind", "a", "b"}, "halfspace set");
    return check_dim(ConvexSet::halfspace(vector_from_json(field("a"), "halfspace.a"),
                                          number_from_json(field("b"), "halfspace.b")));
  }
  if (kind == "box") {
    reject_unknown(j, {"kind", "lower", "upper"}, "box set");
    return check_dim(ConvexSet::box(vector_from_json(field("lower"), "box.lower"),
                                    vector_from_json(field("upper"), "box.upper")));
  }
  if (kind == "ball") {
    reject_unknown(j, {"kind", "center", "radius"}, "ball set");
    return check_dim(ConvexSet::ball(vector_from_json(field("center"), "ball.center"),
                                     number_from_json(field("radius"), "ball.radius")));
  }
  if (kind == "polytope") {
    reject_unknown(j, {"kind", "rows"}, "polytope set");
    std::vector<LinearRow> rows;
    for (const auto& r : field("rows")) {
      reject_unknown(r, {"a", "lo", "hi"}, "polytope row");
      rows.push_back({vector_from_json(r.at("a"), "polytope.a"),
                      r.contains("lo") ? number_from_json(r["lo"], "polytope.lo") : -kInf,
                      r.contains("hi") ? number_from_json(r["hi"], "polytope.hi") : kInf});
    }
    return ConvexSet::polytope(dim, std::move(rows));
  }
  throw InvalidArgument("set: unknown kind '" + kind + "'");
}

std::vector<ConvexSet> sets_from_json(const Json& j, Index dim) {
  if (j.is_array()) {
    std::vector<ConvexSet> out;
    for (const auto& s : j) out.push_back(set_from_json(s, dim));
    if (out.empty()) throw InvalidArgument("sets: empty list");
    return out;
  }
  if (j.is_object() && j.contains("family")) {
    reject_unknown(j, {"family", "K"}, "set family");
    if (j["family"] != "windows") {
      throw InvalidArgument("sets: only the 'windows' family can be generated inline");
    }
    if (!j.contains("K") || !j["K"].is_number_integer()) {
      throw InvalidArgument("sets: windows family needs an integer 'K'");
    }
    std::vector<ConvexSet> out;
    for (const auto& w : sliding_windows(dim, j["K"].get<Index>())) {
      out.push_back(ConvexSet::window(dim, w.first, w.last));
    }
    return out;
  }
  throw InvalidArgument("sets: expected an array of sets or a family object");
}

Json solver_config_to_json(const SolverConfig& cfg) {
  Json j = {
      {"lambda1", cfg.lambda1},
      {"lambda2", cfg.lambda2},
      {"lambda3", cfg.lambda3},
      {"radius", cfg.radius},
      {"horizon", cfg.horizon},
      {"schedule", std::string(to_string(cfg.schedule))},
      {"eta_p_scale", cfg.eta_p_scale},
      {"penalty_factor", cfg.penalty_factor},
      {"seed", cfg.seed},
      {"stop_tol", cfg.stop_tol},
      {"average_tail", cfg.average_tail},
      {"certificates", cfg.certificates},
  };
  j["eta_x"] = cfg.eta_x ? Json(*cfg.eta_x) : Json(nullptr);
  j["penalty_scale"] = cfg.penalty_scale ? Json(*cfg.penalty_scale) : Json(nullptr);
  j["prior_q"] = cfg.prior_q ? vector_to_json(cfg.prior_q->weights()) : Json(nullptr);
  return j;
}

SolverConfig solver_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"lambda1", "lambda2", "lambda3", "radius", "horizon", "eta_x",
                  "penalty_scale", "schedule", "eta_p_scale", "prior_q", "seed",
                  "stop_tol", "average_tail", "certificates", "penalty_factor"},
                 "solver");
  SolverConfig cfg;
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = number_from_json(j[key], std::string("solver.") + key);
  };
  num("lambda1", cfg.lambda1);
  num("lambda2", cfg.lambda2);
  num("lambda3", cfg.lambda3);
  num("radius", cfg.radius);
  num("eta_p_scale", cfg.eta_p_scale);
  num("stop_tol", cfg.stop_tol);
  num("average_tail", cfg.average_tail);
  num("penalty_factor", cfg.penalty_factor);
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer()) {
      throw InvalidArgument("solver.horizon: expected an integer");
    }
    cfg.horizon = j["horizon"].get<long long>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      throw InvalidArgument("solver.seed: expected a nonnegative integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("eta_x") && !j["eta_x"].is_null()) {
    cfg.eta_x = number_from_json(j["eta_x"], "solver.eta_x");
  }
  if (j.contains("penalty_scale") && !j["penalty_scale"].is_null()) {
    cfg.penalty_scale = number_from_json(j["penalty_scale"], "solver.penalty_scale");
  }
  if (j.contains("schedule")) {
    if (!j["schedule"].is_string()) throw InvalidArgument("solver.schedule: expected a string");
    cfg.schedule = parse_schedule(j["schedule"].get<std::string>());
  }
  if (j.contains("prior_q") && !j["prior_q"].is_null()) {
    cfg.prior_q = SimplexPoint(vector_from_json(j["prior_q"], "solver.prior_q"));
  }
  if (j.contains("certificates")) {
    if (!j["certificates"].is_boolean()) {
      throw InvalidArgument("solver.certificates: expected true or false");
    }
    cfg.certificates = j["certificates"].get<bool>();
  }
  cfg.validate();
  return cfg;
}

Problem problem_from_json(const Json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"A", "A_file", "y", "y_file", "x_true", "x_true_file", "sets"},
                 "problem");
  Problem pb;
  if (j.contains("A_file")) {
    pb.a = read_matrix_csv(resolve(base_dir, j["A_file"].get<std::string>()));
  } else if (j.contains("A")) {
    pb.a = matrix_from_json(j["A"], "problem.A");
  } else {
    throw InvalidArgument("problem: 'A' or 'A_file' required");
  }
  if (j.contains("y_file")) {
    pb.y = read_vector_csv(resolve(base_dir, j["y_file"].get<std::string>()));
  } else if (j.contains("y")) {
    pb.y = vector_from_json(j["y"], "problem.y");
  } else {
    throw InvalidArgument("problem: 'y' or 'y_file' required");
  }
  if (j.contains("x_true_file")) {
    pb.x_true = read_vector_csv(resolve(base_dir, j["x_true_file"].get<std::string>()));
  } else if (j.contains("x_true")) {
    pb.x_true = vector_from_json(j["x_true"], "problem.x_true");
  }
  if (!j.contains("sets")) throw InvalidArgument("problem: 'sets' required");
  pb.sets = sets_from_json(j["sets"], pb.a.cols());
  pb.validate();
  if (pb.x_true && pb.x_true->size() != pb.dim()) {
    throw InvalidArgument("problem: x_true length does not match A");
  }
  return pb;
}

std::vector<AssertionOutcome> evaluate_assertions(
    const ExperimentAssertions& a, const std::vector<PhaseRow>& rows) {
  std::vector<AssertionOutcome> out;
  const bool has_baseline =
      std::all_of(rows.begin(), rows.end(),
                  [](const PhaseRow& r) { return r.baseline_trials > 0; });
  if (a.dominates_baseline) {
    AssertionOutcome o{"dominates_baseline", false, ""};
    if (!has_baseline) {
      o.detail = "no baseline arm was run";
    } else {
      o.passed = dominates_baseline(rows);
      o.detail = o.passed ? "union rate >= baseline rate - 1 sd at every M"
                          : "union rate below baseline by more than 1 sd";
    }
    out.push_back(o);
  }
  if (a.monotone) {
    const auto bad = monotonicity_violations(rows, Arm::kUnion);
    AssertionOutcome o{"monotone", bad.empty(), ""};
    o.detail = bad.empty() ? "no significant drop between adjacent M"
                           : "significant drop after M = " +
                                 std::to_string(rows[bad.front()].m);
    out.push_back(o);
  }
  if (a.savings_level) {
    AssertionOutcome o{"savings", false, ""};
    const auto u = success_threshold(rows, *a.savings_level, Arm::kUnion);
    const auto b = has_baseline ? success_threshold(rows, *a.savings_level, Arm::kBaseline)
                                : std::optional<Index>{};
    if (!has_baseline) {
      o.detail = "no baseline arm was run";
    } else if (!u) {
      o.detail = "union arm never reaches " + format_double(*a.savings_level);
    } else {
      o.passed = !b || *u < *b;
      o.detail = "union reaches the level at M = " + std::to_string(*u) +
                 ", baseline at " + (b ? "M = " + std::to_string(*b) : "no grid M");
    }
    out.push_back(o);
  }
  for (const auto& [m, rate] : a.min_success_rate) {
    AssertionOutcome o{"min_success_rate@" + std::to_string(m), false, ""};
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [m = m](const PhaseRow& r) { return r.m == m; });
    if (it == rows.end()) {
      o.detail = "M not in grid";
    } else {
      o.passed = it->success_rate >= rate;
      o.detail = "rate " + format_double(it->success_rate) + " vs required " +
                 format_double(rate);
    }
    out.push_back(o);
  }
  return out;
}

ExperimentDocument experiment_from_json(const Json& j,
                                        const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"N", "K", "M_grid", "set_family", "trials", "solver", "success_tol",
                  "seed", "baseline", "noise_std", "aux_measurements",
                  "quantizer_edges", "custom_sets", "custom_sets_file", "assertions",
                  "phase_transition", "convergence"},
                 "experiment");
  ExperimentDocument doc;
  ExperimentSpec& s = doc.spec;
  auto integer = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) {
      throw InvalidArgument(std::string("experiment.") + key + ": expected an integer");
    }
    dst = j[key].get<std::decay_t<decltype(dst)>>();
  };
  integer("N", s.n);
  integer("K", s.k);
  integer("trials", s.trials);
  integer("aux_measurements", s.aux_measurements);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      throw InvalidArgument("experiment.seed: expected a nonnegative integer");
    }
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("M_grid")) {
    for (const auto& m : j["M_grid"]) {
      if (!m.is_number_integer()) throw InvalidArgument("experiment.M_grid: expected integers");
      s.m_grid.push_back(m.get<Index>());
    }
  }
  if (j.contains("set_family")) s.family = parse_set_family(j["set_family"].get<std::string>());
  if (j.contains("solver")) s.solver = solver_config_from_json(j["solver"]);
  if (j.contains("success_tol")) s.success_tol = number_from_json(j["success_tol"], "experiment.success_tol");
  if (j.contains("noise_std")) s.noise_std = number_from_json(j["noise_std"], "experiment.noise_std");
  if (j.contains("baseline")) s.baseline = j["baseline"].get<bool>();
  if (j.contains("quantizer_edges")) {
    const Vector e = vector_from_json(j["quantizer_edges"], "experiment.quantizer_edges");
    s.quantizer_edges.assign(e.data(), e.data() + e.size());
  }
  if (j.contains("custom_sets")) s.custom_sets = sets_from_json(j["custom_sets"], s.n);
  if (j.contains("custom_sets_file")) {
    s.custom_sets = sets_from_json(
        read_json_file(resolve(base_dir, j["custom_sets_file"].get<std::string>())), s.n);
  }
  if (j.contains("phase_transition")) doc.run_phase_transition = j["phase_transition"].get<bool>();
  if (j.contains("assertions")) {
    const Json& a = j["assertions"];
    reject_unknown(a, {"dominates_baseline", "monotone", "savings_level", "min_success_rate"},
                   "assertions");
    if (a.contains("dominates_baseline")) doc.assertions.dominates_baseline = a["dominates_baseline"].get<bool>();
    if (a.contains("monotone")) doc.assertions.monotone = a["monotone"].get<bool>();
    if (a.contains("savings_level") && !a["savings_level"].is_null()) {
      doc.assertions.savings_level = number_from_json(a["savings_level"], "assertions.savings_level");
    }
    if (a.contains("min_success_rate")) {
      for (const auto& item : a["min_success_rate"]) {
        reject_unknown(item, {"M", "rate"}, "assertions.min_success_rate");
        doc.assertions.min_success_rate.emplace_back(
            item.at("M").get<Index>(), number_from_json(item.at("rate"), "rate"));
      }
    }
  }
  if (j.contains("convergence")) {
    const Json& c = j["convergence"];
    reject_unknown(c, {"M", "trial_id", "horizons", "schedules", "lambda3"}, "convergence");
    ConvergenceStudy study;
    if (c.contains("M")) study.m = c["M"].get<Index>();
    if (c.contains("trial_id")) study.trial_id = c["trial_id"].get<long long>();
    if (c.contains("lambda3")) study.lambda3 = number_from_json(c["lambda3"], "convergence.lambda3");
    if (c.contains("horizons")) study.horizons = c["horizons"].get<std::vector<long long>>();
    if (c.contains("schedules")) {
      study.schedules.clear();
      for (const auto& name : c["schedules"]) {
        study.schedules.push_back(parse_schedule(name.get<std::string>()));
      }
    }
    doc.convergence = study;
  }
  // A convergence-only document needs no grid.
  if (!doc.run_phase_transition && s.m_grid.empty() && doc.convergence) {
    s.m_grid.push_back(doc.convergence->m);
  }
  s.validate();
  return doc;
}

Json experiment_spec_to_json(const ExperimentSpec& s) {
  Json j = {
      {"N", s.n},
      {"K", s.k},
      {"M_grid", s.m_grid},
      {"set_family", std::string(to_string(s.family))},
      {"trials", s.trials},
      {"solver", solver_config_to_json(s.solver)},
      {"success_tol", s.success_tol},
      {"seed", s.seed},
      {"baseline", s.baseline},
      {"noise_std", s.noise_std},
      {"aux_measurements", s.aux_measurements},
  };
  Json edges = Json::array();
  for (const double e : s.quantizer_edges) edges.push_back(number_to_json(e));
  j["quantizer_edges"] = edges;
  if (!s.custom_sets.empty()) {
    Json sets = Json::array();
    for (const auto& c : s.custom_sets) sets.push_back(set_to_json(c));
    j["custom_sets"] = sets;
  }
  return j;
}

Json certificates_to_json(const CertificateReport& r) {
  return {
      {"regularized", r.regularized},
      {"horizon", r.horizon},
      {"mw_regret", number_to_json(r.mw_regret)},
      {"mw_regret_bound", number_to_json(r.mw_regret_bound)},
      {"prox_gap", number_to_json(r.prox_gap)},
      {"prox_gap_bound", number_to_json(r.prox_gap_bound)},
      {"inner_residual", number_to_json(r.inner_residual)},
      {"inner_iterations", r.inner_iterations},
      {"step_energy", number_to_json(r.step_energy)},
      {"step_energy_bound", number_to_json(r.step_energy_bound)},
      {"r_f_used", number_to_json(r.r_f_used)},
      {"r_f_observed", number_to_json(r.r_f_observed)},
      {"r_g_used", number_to_json(r.r_g_used)},
      {"l_h_used", number_to_json(r.l_h_used)},
      {"eta_x_used", number_to_json(r.eta_x_used)},
  };
}

Json constants_to_json(const SolverConstants& k) {
  return {{"spectral_norm", k.spectral_norm}, {"penalty_scale", k.penalty_scale},
          {"lipschitz", k.lipschitz},         {"eta_x", k.eta_x},
          {"r_f", k.r_f},                     {"r_g", k.r_g}};
}

Json bound_report_to_json(const BoundReport& r) {
  Json pairs = Json::array();
  for (const double w : r.omega_pairs) pairs.push_back(number_to_json(w));
  return {{"M", r.m},
          {"a_M", r.a_m},
          {"omega_T", number_to_json(r.omega_t)},
          {"omega_Cij", pairs},
          {"epsilon", r.epsilon},
          {"p1_bound", r.p1_bound},
          {"p2_bound", r.p2_bound},
          {"pr_E_lower", r.pr_e_lower}};
}

Json width_to_json(const WidthEstimate& w) {
  return {{"mean", w.mean}, {"std_error", w.std_error}, {"samples", w.samples}};
}

std::string_view to_string(Arm arm) {
  return arm == Arm::kUnion ? "union" : "baseline";
}

std::string trace_csv(const Trace& trace) {
  std::string out = "t,L_value,min_f,max_f,step_sq,p_entropy\n";
  for (const auto& r : trace.records) {
    append_csv(out, {std::to_string(r.t), format_double(r.lagrangian),
                     format_double(r.min_f), format_double(r.max_f),
                     format_double(r.step_sq), format_double(r.p_entropy)});
  }
  return out;
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::string out =
      "trial_id,M,arm,seed_used,rel_error,success,chosen_set,true_set,"
      "iterations_run,error\n";
  for (const auto& r : records) {
    append_csv(out, {std::to_string(r.trial_id), std::to_string(r.m),
                     std::string(to_string(r.arm)), std::to_string(r.seed_used),
                     format_double(r.rel_error), r.success ? "1" : "0",
                     std::to_string(r.chosen_set), std::to_string(r.true_set),
                     std::to_string(r.iterations_run), csv_quote(r.error)});
  }
  return out;
}

std::string timing_csv(const std::vector<TrialRecord>& records) {
  std::string out = "trial_id,M,arm,wall_time\n";
  for (const auto& r : records) {
    append_csv(out, {std::to_string(r.trial_id), std::to_string(r.m),
                     std::string(to_string(r.arm)), format_double(r.wall_time)});
  }
  return out;
}

std::string phase_table_csv(const std::vector<PhaseRow>& rows) {
  std::string out =
      "M,trials,successes,success_rate,mean_rel_error,baseline_trials,"
      "baseline_successes,baseline_success_rate,baseline_mean_rel_error\n";
  for (const auto& r : rows) {
    append_csv(out, {std::to_string(r.m), std::to_string(r.trials),
                     std::to_string(r.successes), format_double(r.success_rate),
                     format_double(r.mean_rel_error), std::to_string(r.baseline_trials),
                     std::to_string(r.baseline_successes),
                     format_double(r.baseline_success_rate),
                     format_double(r.baseline_mean_rel_error)});
  }
  return out;
}

std::string convergence_csv(const std::vector<ConvergenceSeries>& series) {
  std::string out =
      "schedule,regularized,T,step_energy,step_energy_bound,mw_regret,"
      "mw_regret_bound,prox_gap,prox_gap_bound,inner_residual\n";
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      append_csv(out, {std::string(to_string(s.schedule)), s.regularized ? "1" : "0",
                       std::to_string(p.horizon), format_double(p.step_energy),
                       format_double(p.step_energy_bound), format_double(p.mw_regret),
                       format_double(p.mw_regret_bound), format_double(p.prox_gap),
                       format_double(p.prox_gap_bound), format_double(p.inner_residual)});
    }
  }
  return out;
}

std::string widths_csv(const std::vector<std::pair<std::string, WidthEstimate>>& rows) {
  std::string out = "set_id,mean,std_error,samples\n";
  for (const auto& [id, w] : rows) {
    append_csv(out, {csv_quote(id), format_double(w.mean), format_double(w.std_error),
                     std::to_string(w.samples)});
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace ucs
