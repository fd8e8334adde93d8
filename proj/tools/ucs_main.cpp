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

// ucs: solve / experiment / bounds / width front end. Every subcommand reads
// one JSON document (--config), applies --set overrides, and writes its
// artifacts into --out.
//
// Exit codes: 0 success, 1 an embedded experiment assertion failed,
// 2 a referenced file is missing, 3 invalid configuration or input.

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ucs/io.hpp"

namespace fs = std::filesystem;
using namespace ucs;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::vector<std::string> overrides;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Best effort: the line of the first occurrence of the key an error message
// names, so validation errors point into the file like parse errors do.
std::size_t guess_line(const std::string& text, const std::string& message) {
  std::string key;
  std::smatch m;
  if (std::regex_search(message, m, std::regex("'([A-Za-z0-9_]+)'"))) {
    key = m[1];
  } else if (std::regex_search(message, m, std::regex("^([A-Za-z0-9_.]+):"))) {
    key = m[1];
    if (const auto dot = key.rfind('.'); dot != std::string::npos) key = key.substr(dot + 1);
  }
  if (key.empty()) return 0;
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

struct Loaded {
  Json doc;
  std::string text;
  fs::path base;
};

Loaded load(const Common& c) {
  Loaded l;
  l.doc = read_json_file(c.config);
  std::ifstream in(c.config);
  std::ostringstream ss;
  ss << in.rdbuf();
  l.text = ss.str();
  l.base = fs::path(c.config).parent_path();
  for (const auto& o : c.overrides) apply_override(l.doc, o);
  return l;
}

// Interprets the document, converting validation failures into a message
// that names the config file and, where possible, the line.
template <typename Fn>
auto interpret(const Common& c, const Loaded& l, Fn&& fn) {
  try {
    return fn();
  } catch (const FileNotFound&) {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    const std::size_t line = guess_line(l.text, e.what());
    throw InputError(c.config + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                     e.what());
  }
}

Json overrides_json(const Common& c) {
  Json j = Json::array();
  for (const auto& o : c.overrides) j.push_back(o);
  return j;
}

void prepare_out(const Common& c) { fs::create_directories(c.out); }

void write_json(const fs::path& p, const Json& j) { write_text_file(p, j.dump(2) + "\n"); }

int cmd_solve(const Common& c) {
  Loaded l = load(c);
  if (c.seed) apply_override(l.doc, "solver.seed=" + std::to_string(*c.seed));
  auto [problem, cfg] = interpret(c, l, [&] {
    if (!l.doc.is_object() || !l.doc.contains("problem")) {
      throw InvalidArgument("config: 'problem' section required");
    }
    for (const auto& item : l.doc.items()) {
      if (item.key() != "problem" && item.key() != "solver") {
        throw InvalidArgument("config: unknown key '" + item.key() + "'");
      }
    }
    Problem pb = problem_from_json(l.doc["problem"], l.base);
    SolverConfig sc = l.doc.contains("solver") ? solver_config_from_json(l.doc["solver"])
                                               : SolverConfig{};
    return std::pair{std::move(pb), sc};
  });
  const SolverResult res = interpret(c, l, [&] { return solve(problem, cfg); });
  prepare_out(c);
  const fs::path out(c.out);
  write_vector_csv(out / "x_hat.csv", res.x_hat);
  write_text_file(out / "trace.csv", trace_csv(res.trace));
  if (cfg.certificates) write_json(out / "certificates.json", certificates_to_json(res.certificates));

  Json summary = {{"command", "solve"},
                  {"overrides", overrides_json(c)},
                  {"solver", solver_config_to_json(cfg)},
                  {"constants", constants_to_json(res.constants)},
                  {"chosen_set", res.chosen_set},
                  {"iterations_run", res.iterations_run},
                  {"x_hat_hash", hash_vector(res.x_hat)}};
  std::cout << "chosen_set " << res.chosen_set << "\n";
  if (problem.x_true) {
    const double scale = problem.x_true->norm();
    const double rel = (res.x_hat - *problem.x_true).norm() / (scale > 0.0 ? scale : 1.0);
    summary["rel_error"] = rel;
    std::cout << "rel_error " << format_double(rel) << "\n";
  }
  write_json(out / "summary.json", summary);
  return 0;
}

int cmd_experiment(const Common& c) {
  Loaded l = load(c);
  if (c.seed) apply_override(l.doc, "seed=" + std::to_string(*c.seed));
  const ExperimentDocument doc =
      interpret(c, l, [&] { return experiment_from_json(l.doc, l.base); });
  prepare_out(c);
  const fs::path out(c.out);
  Json summary = {{"command", "experiment"},
                  {"overrides", overrides_json(c)},
                  {"spec", experiment_spec_to_json(doc.spec)}};
  bool all_passed = true;

  if (doc.run_phase_transition) {
    const PhaseTable table = phase_transition(doc.spec);
    write_text_file(out / "trials.csv", trials_csv(table.records));
    write_text_file(out / "table.csv", phase_table_csv(table.rows));
    write_text_file(out / "timing.csv", timing_csv(table.records));
    for (const auto& row : table.rows) {
      std::cout << "M=" << row.m << " success=" << format_double(row.success_rate);
      if (row.baseline_trials > 0) {
        std::cout << " baseline=" << format_double(row.baseline_success_rate);
      }
      std::cout << "\n";
    }
    Json assertions = Json::array();
    for (const auto& o : evaluate_assertions(doc.assertions, table.rows)) {
      assertions.push_back({{"name", o.name}, {"passed", o.passed}, {"detail", o.detail}});
      std::cout << (o.passed ? "PASS " : "FAIL ") << o.name << ": " << o.detail << "\n";
      all_passed = all_passed && o.passed;
    }
    summary["assertions"] = assertions;
    for (const double level : {0.5, 0.9}) {
      const auto u = success_threshold(table.rows, level, Arm::kUnion);
      const auto b = success_threshold(table.rows, level, Arm::kBaseline);
      const std::string key = "threshold_" + format_double(level);
      summary[key] = {{"union", u ? Json(*u) : Json(nullptr)},
                      {"baseline", b ? Json(*b) : Json(nullptr)}};
    }
  }
  if (doc.convergence) {
    const auto series = convergence_study(doc.spec, *doc.convergence);
    write_text_file(out / "convergence.csv", convergence_csv(series));
    Json slopes = Json::array();
    for (const auto& s : series) {
      slopes.push_back({{"schedule", std::string(to_string(s.schedule))},
                        {"regularized", s.regularized},
                        {"step_energy_slope", format_double(s.step_energy_slope)},
                        {"mw_regret_slope", format_double(s.mw_regret_slope)}});
    }
    summary["convergence_slopes"] = slopes;
  }
  summary["all_assertions_passed"] = all_passed;
  write_json(out / "summary.json", summary);
  return all_passed ? 0 : 1;
}

struct WidthInputs {
  Index n = 0;
  std::vector<ConvexSet> sets;
  std::vector<SupportWindow> windows;  // filled when every set is a window
  long long samples = kDefaultWidthSamples;
  std::uint64_t seed = 0;
};

WidthInputs width_inputs(const Json& j, const fs::path& base, const std::set<std::string>& extra) {
  for (const auto& item : j.items()) {
    static const std::set<std::string> common = {"N", "sets", "sets_file", "samples", "seed"};
    if (!common.contains(item.key()) && !extra.contains(item.key())) {
      throw InvalidArgument("config: unknown key '" + item.key() + "'");
    }
  }
  WidthInputs w;
  if (!j.contains("N") || !j["N"].is_number_integer()) {
    throw InvalidArgument("config: integer 'N' required");
  }
  w.n = j["N"].get<Index>();
  if (j.contains("sets_file")) {
    w.sets = sets_from_json(read_json_file(base / j["sets_file"].get<std::string>()), w.n);
  } else if (j.contains("sets")) {
    w.sets = sets_from_json(j["sets"], w.n);
  }
  for (const auto& s : w.sets) {
    if (const auto* win = s.as<SupportWindow>()) w.windows.push_back(*win);
  }
  if (w.windows.size() != w.sets.size()) w.windows.clear();
  if (j.contains("samples")) w.samples = j["samples"].get<long long>();
  if (j.contains("seed")) w.seed = j["seed"].get<std::uint64_t>();
  return w;
}

int cmd_bounds(const Common& c) {
  Loaded l = load(c);
  if (c.seed) apply_override(l.doc, "seed=" + std::to_string(*c.seed));
  struct Setup {
    WidthInputs w;
    Index k = 0;
    double epsilon = 0.25;
    double target = 0.9;
    std::optional<long long> m;
    std::optional<double> omega_t;
    std::optional<double> pair_width;
    std::optional<long long> pair_count;
  };
  const Setup s = interpret(c, l, [&] {
    Setup st;
    st.w = width_inputs(l.doc, l.base,
                        {"K", "epsilon", "target", "M", "omega_T", "pair_width", "pair_count"});
    if (l.doc.contains("K")) st.k = l.doc["K"].get<Index>();
    if (l.doc.contains("epsilon")) st.epsilon = l.doc["epsilon"].get<double>();
    if (l.doc.contains("target")) st.target = l.doc["target"].get<double>();
    if (l.doc.contains("M")) st.m = l.doc["M"].get<long long>();
    if (l.doc.contains("omega_T")) st.omega_t = l.doc["omega_T"].get<double>();
    if (l.doc.contains("pair_width")) st.pair_width = l.doc["pair_width"].get<double>();
    if (l.doc.contains("pair_count")) st.pair_count = l.doc["pair_count"].get<long long>();
    if (st.pair_width.has_value() != st.pair_count.has_value()) {
      throw InvalidArgument("config: 'pair_width' and 'pair_count' go together");
    }
    if (!st.pair_width && st.w.windows.empty()) {
      throw InvalidArgument("config: 'sets' must be windows unless pair_width is given");
    }
    if (!st.omega_t && st.w.windows.empty()) {
      throw InvalidArgument("config: 'sets' must be windows unless omega_T is given");
    }
    return st;
  });

  prepare_out(c);
  const fs::path out(c.out);
  Json report;
  report["command"] = "bounds";
  report["overrides"] = overrides_json(c);

  // Tangent cone at a reference signal supported on the first window.
  double omega_t = 0.0;
  if (s.omega_t) {
    omega_t = *s.omega_t;
  } else {
    Vector x_ref = Vector::Zero(s.w.n);
    for (Index j = s.w.windows.front().first; j <= s.w.windows.front().last; ++j) x_ref[j] = 1.0;
    const WidthEstimate wt = width_tangent_cone(x_ref, s.w.samples, s.w.seed);
    omega_t = wt.mean;
    report["omega_T_estimate"] = width_to_json(wt);
  }
  std::vector<double> pairs;
  if (s.pair_width) {
    pairs.assign(static_cast<std::size_t>(*s.pair_count), *s.pair_width);
  } else {
    const PairWidths pw = width_difference_cones(s.w.windows, s.w.n, s.w.samples, s.w.seed + 1);
    pairs = pw.means();
    double max_se = 0.0;
    for (const auto& e : pw.packed()) max_se = std::max(max_se, e.std_error);
    report["pair_width_max_std_error"] = max_se;
  }

  const MeasurementSearch search = interpret(
      c, l, [&] { return min_measurements(omega_t, pairs, s.epsilon, s.target); });
  const long long m = s.m.value_or(search.constrained);
  const BoundReport br = interpret(
      c, l, [&] { return uniqueness_lower_bound(m, omega_t, pairs, s.epsilon); });
  Json bound = bound_report_to_json(br);
  // The full pair list can be large; the summary keeps its size and extremes.
  bound["omega_Cij"] = {{"count", pairs.size()},
                        {"min", pairs.empty() ? 0.0 : *std::min_element(pairs.begin(), pairs.end())},
                        {"max", pairs.empty() ? 0.0 : *std::max_element(pairs.begin(), pairs.end())}};
  report["bound"] = bound;
  report["target"] = s.target;
  report["min_measurements"] = {{"constrained", search.constrained},
                                {"unconstrained", search.unconstrained},
                                {"delta_M", search.savings()}};
  if (s.k > 0) {
    // Gate check for the M = 3K rule of thumb: does a_{3K} >= 2 a_K hold?
    const double a3k = expected_gauss_norm(3 * s.k);
    const double two_ak = 2.0 * expected_gauss_norm(s.k);
    report["three_k_gate"] = {{"M", 3 * s.k},
                              {"a_M", a3k},
                              {"two_a_K", two_ak},
                              {"holds", a3k >= two_ak},
                              {"min_M_satisfying_gate", min_m_for_gauss_norm(two_ak)}};
  }
  write_json(out / "bounds.json", report);
  std::cout << "pr_E_lower(M=" << m << ") = " << format_double(br.pr_e_lower) << "\n";
  std::cout << "Delta M = M_unconstrained - M_constrained = " << search.unconstrained << " - "
            << search.constrained << " = " << search.savings() << " (target "
            << format_double(s.target) << ")\n";
  return 0;
}

int cmd_width(const Common& c) {
  Loaded l = load(c);
  if (c.seed) apply_override(l.doc, "seed=" + std::to_string(*c.seed));
  struct Setup {
    WidthInputs w;
    std::string mode = "union";
    std::optional<Vector> x_ref;
    int ascent_steps = 500;
  };
  const Setup s = interpret(c, l, [&] {
    Setup st;
    st.w = width_inputs(l.doc, l.base, {"mode", "x_ref", "ascent_steps"});
    if (l.doc.contains("mode")) st.mode = l.doc["mode"].get<std::string>();
    if (l.doc.contains("ascent_steps")) st.ascent_steps = l.doc["ascent_steps"].get<int>();
    if (st.mode == "tangent") {
      if (!l.doc.contains("x_ref")) throw InvalidArgument("config: 'x_ref' required for mode tangent");
      const auto v = l.doc["x_ref"].get<std::vector<double>>();
      st.x_ref = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    } else if (st.mode == "union" || st.mode == "pairs") {
      if (st.w.sets.empty()) throw InvalidArgument("config: 'sets' required");
      if (st.mode == "pairs" && st.w.windows.empty()) {
        throw InvalidArgument("config: mode 'pairs' needs window sets");
      }
    } else {
      throw InvalidArgument("config: unknown mode '" + st.mode + "' (union, pairs, tangent)");
    }
    return st;
  });

  prepare_out(c);
  const fs::path out(c.out);
  std::vector<std::pair<std::string, WidthEstimate>> rows;
  interpret(c, l, [&] {
    if (s.mode == "tangent") {
      rows.emplace_back("tangent", width_tangent_cone(*s.x_ref, s.w.samples, s.w.seed));
    } else if (s.mode == "pairs") {
      const PairWidths pw = width_difference_cones(s.w.windows, s.w.n, s.w.samples, s.w.seed);
      for (Index i = 0; i < pw.num_sets(); ++i) {
        for (Index j = i; j < pw.num_sets(); ++j) {
          rows.emplace_back(std::to_string(i) + "-" + std::to_string(j), pw.at(i, j));
        }
      }
    } else if (!s.w.windows.empty()) {
      for (std::size_t i = 0; i < s.w.windows.size(); ++i) {
        rows.emplace_back(std::to_string(i),
                          width_support_union(std::span(&s.w.windows[i], 1), s.w.n,
                                              s.w.samples, s.w.seed));
      }
      rows.emplace_back("union", width_support_union(s.w.windows, s.w.n, s.w.samples, s.w.seed));
    } else {
      for (std::size_t i = 0; i < s.w.sets.size(); ++i) {
        rows.emplace_back(std::to_string(i),
                          width_sets(std::span(&s.w.sets[i], 1), s.w.samples, s.w.seed,
                                     Execution::kParallel, s.ascent_steps));
      }
      rows.emplace_back("union", width_sets(s.w.sets, s.w.samples, s.w.seed,
                                            Execution::kParallel, s.ascent_steps));
    }
    return 0;
  });
  write_text_file(out / "widths.csv", widths_csv(rows));
  Json summary = {{"command", "width"}, {"mode", s.mode}, {"overrides", overrides_json(c)}};
  summary["result"] = width_to_json(rows.back().second);
  write_json(out / "summary.json", summary);
  const auto& last = rows.back();
  std::cout << last.first << " width " << format_double(last.second.mean) << " +- "
            << format_double(last.second.std_error) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive sensing with a union-of-convex-sets prior"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    sub->add_option("--set", common.overrides, "Override a config entry: dotted.key=value");
    sub->add_option("--threads", common.threads, "OpenMP threads (0 = runtime default)");
    sub->add_option("--seed", common.seed, "Override the configuration seed");
    sub->add_flag("-v,--verbose", common.verbosity, "More output");
  };
  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one instance");
  CLI::App* exp_cmd = app.add_subcommand("experiment", "Run a phase-transition / convergence experiment");
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "Evaluate uniqueness bounds and minimal M");
  CLI::App* width_cmd = app.add_subcommand("width", "Estimate Gaussian widths");
  for (CLI::App* sub : {solve_cmd, exp_cmd, bounds_cmd, width_cmd}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // A missing --config file is reported like any other missing input.
    const int code = app.exit(e);
    if (e.get_name() == "ValidationError" &&
        std::string(e.what()).find("File does not exist") != std::string::npos) {
      return 2;
    }
    return code;
  }
  if (common.threads > 0) omp_set_num_threads(common.threads);

  try {
    if (*solve_cmd) return cmd_solve(common);
    if (*exp_cmd) return cmd_experiment(common);
    if (*bounds_cmd) return cmd_bounds(common);
    if (*width_cmd) return cmd_width(common);
  } catch (const FileNotFound& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
