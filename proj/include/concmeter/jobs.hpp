#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "concmeter/verify.hpp"

namespace concmeter {

/// Parses config text; syntax errors raise kConfig with line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& source = "config");

/// Validates one job and fills every default, producing the explicit form
/// stored in report inputs. `n` must be a single integer here. Throws kConfig
/// naming the offending field.
nlohmann::json resolve_job(const nlohmann::json& job, std::uint64_t default_seed,
                           std::optional<std::uint64_t> seed_override, const std::string& path = "job");

/// Validates a whole config, expands n-lists into one job per n (id suffix
/// "_n<n>") and resolves each job.
nlohmann::json resolve_config(const nlohmann::json& config, std::optional<std::uint64_t> seed_override);

struct JobResult {
  CheckReport report;
  /// CSV body without the leading comment line; empty when the job has none.
  std::string csv;
  /// File suffix for `csv`, e.g. ".curve.csv".
  std::string csv_suffix;
  /// Set when execution failed.
  std::optional<std::pair<int, std::string>> error;
};

/// Runs a resolved job. Execution errors are caught and returned in `error`.
JobResult run_job(const nlohmann::json& resolved, bool want_csv = true);

struct RunSummary {
  /// 0 all pass/not-applicable, 2 any fail, 1 any execution error.
  int exit_code = 0;
  std::vector<std::string> files;
};

/// Runs every job of a resolved config on `workers` threads and writes
/// <id>.json, optional <id><suffix> CSVs and summary.csv into `out_dir`.
/// Output bytes do not depend on `workers`.
RunSummary run_config(const nlohmann::json& resolved_config, const std::string& out_dir, unsigned workers);

/// Norm from its config form ({"kind":"lp","p":..,"dim":..} or "l2"-style
/// shorthand). `dim` fills a missing "dim" and must match a present one.
NormSpec norm_from_json(const nlohmann::json& j, std::optional<std::size_t> dim = std::nullopt);
/// Measure from its config form ({"family":..,"dim":..,"p":..,"norm":..}).
MeasureSpec measure_from_json(const nlohmann::json& j, std::optional<std::size_t> dim = std::nullopt);

/// "# <label>: <compact json>\n"
std::string comment_line(const std::string& label, const nlohmann::json& value);

}  // namespace concmeter
