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

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ucs/core.hpp"
#include "ucs/harness.hpp"
#include "ucs/sets.hpp"
#include "ucs/solver.hpp"
#include "ucs/theory.hpp"

namespace ucs {

using Json = nlohmann::json;

/// A referenced input file does not exist or cannot be opened.
class FileNotFound : public std::runtime_error {
 public:
  explicit FileNotFound(const std::filesystem::path& path)
      : std::runtime_error("cannot open file: " + path.string()), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Malformed input. `line` is 1-based, 0 when no position applies.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest decimal string that parses back to exactly `v` ("inf", "-inf",
/// "nan" for non-finite values).
std::string format_double(double v);

/// FNV-1a over the round-trip decimal rendering of every entry.
std::string hash_vector(const Vector& v);

Json read_json_file(const std::filesystem::path& path);

/// Applies "dotted.key=value" to a JSON document. The value is parsed as JSON
/// when possible and kept as a string otherwise. Missing intermediate objects
/// are created; array elements are addressed by integer segments.
void apply_override(Json& doc, std::string_view assignment);

/// Dense numeric CSV (comma separated, no header). Errors name file and line.
Matrix read_matrix_csv(const std::filesystem::path& path);
Vector read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(const std::filesystem::path& path, const Vector& v);

/// Set descriptors. Windows use the 1-based {"start", "width"} form covering
/// coordinates start..start+width; "full" covers every coordinate.
Json set_to_json(const ConvexSet& set);
ConvexSet set_from_json(const Json& j, Index dim);
/// Either an array of descriptors or {"family": "windows", "K": k}.
std::vector<ConvexSet> sets_from_json(const Json& j, Index dim);

Json solver_config_to_json(const SolverConfig& cfg);
/// Unknown keys are rejected so typos in configs and overrides surface.
SolverConfig solver_config_from_json(const Json& j);

/// Problem with inline arrays ("A", "y", "x_true") or file references
/// ("A_file", "y_file", "x_true_file") resolved against base_dir.
Problem problem_from_json(const Json& j, const std::filesystem::path& base_dir);

/// Assertions an experiment document may embed; the CLI exit code reflects
/// them.
struct ExperimentAssertions {
  bool dominates_baseline = false;
  bool monotone = false;  // no significant drop between adjacent grid points
  /// The union arm reaches this rate at a strictly smaller grid M than the
  /// baseline arm (which must reach it too, or never reach it on the grid).
  std::optional<double> savings_level;
  std::vector<std::pair<Index, double>> min_success_rate;  // (M, rate)
  bool any() const {
    return dominates_baseline || monotone || savings_level ||
           !min_success_rate.empty();
  }
};

struct AssertionOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<AssertionOutcome> evaluate_assertions(
    const ExperimentAssertions& a, const std::vector<PhaseRow>& rows);

struct ExperimentDocument {
  ExperimentSpec spec;
  ExperimentAssertions assertions;
  bool run_phase_transition = true;
  std::optional<ConvergenceStudy> convergence;
};

ExperimentDocument experiment_from_json(const Json& j,
                                        const std::filesystem::path& base_dir);
Json experiment_spec_to_json(const ExperimentSpec& spec);

Json certificates_to_json(const CertificateReport& r);
Json constants_to_json(const SolverConstants& k);
Json bound_report_to_json(const BoundReport& r);
Json width_to_json(const WidthEstimate& w);

/// CSV renderers. Every numeric field uses format_double so files are
/// byte-identical across runs with the same inputs.
std::string trace_csv(const Trace& trace);
std::string trials_csv(const std::vector<TrialRecord>& records);
std::string timing_csv(const std::vector<TrialRecord>& records);
std::string phase_table_csv(const std::vector<PhaseRow>& rows);
std::string convergence_csv(const std::vector<ConvergenceSeries>& series);
std::string widths_csv(const std::vector<std::pair<std::string, WidthEstimate>>& rows);

std::string_view to_string(Arm arm);

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ucs
