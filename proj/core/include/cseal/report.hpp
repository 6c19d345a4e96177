#pragma once

// Run results, their on-disk records, and the aggregate tables: budget curves,
// per-budget mean/std summaries, and class-wise AUROC gains over a baseline.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cseal/active_loop.hpp"
#include "cseal/trainer.hpp"

namespace cseal::report {

struct RunResult {
  std::string method;
  std::string sampler;
  std::uint64_t seed = 0;
  std::vector<double> test_prevalence;
  std::vector<active::RoundReport> rounds;

  /// "method+sampler", e.g. "enot+au".
  [[nodiscard]] std::string run_id() const { return method + "+" + sampler; }
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- run records -------------------------------------------------------------

std::string epoch_json_line(const train::EpochRecord& rec);
std::string round_json_line(const RunResult& run, const active::RoundReport& rep);
active::RoundReport parse_round_json_line(const std::string& line);

/// Writes summary.json for a finished run (rounds.jsonl is streamed by the caller).
void write_run_summary(const RunResult& run, const std::filesystem::path& run_dir);
/// Reads summary.json and rounds.jsonl. Throws ReportError on missing or
/// malformed files.
RunResult load_run(const std::filesystem::path& run_dir);

// ---- aggregation --------------------------------------------------------------

enum class PrevalenceOrder { Descending, Ascending };

struct GainTable {
  std::vector<std::size_t> classes;  // in prevalence order
  std::vector<double> prevalence;    // same order
  std::vector<std::string> run_ids;
  /// gains[i][j]: class classes[i], run run_ids[j], percentage points.
  std::vector<std::vector<double>> gains;
};

/// Final-budget per-class AUROC of each run id, averaged over its seeds,
/// minus the baseline's seed-averaged value, times 100. Throws ReportError
/// when budgets or class counts differ between runs, or the baseline is absent.
GainTable class_gain_table(std::span<const RunResult> runs, const std::string& baseline = "esup+random",
                           PrevalenceOrder order = PrevalenceOrder::Descending);

struct BudgetStat {
  std::string method;
  std::string sampler;
  double budget = 0.0;
  std::size_t seeds = 0;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;  // sample standard deviation; 0 for a single seed
  double auprc_mean = 0.0;
  double auprc_std = 0.0;
};

std::vector<BudgetStat> budget_summary(std::span<const RunResult> runs);

struct EmitOptions {
  std::string baseline = "esup+random";
  PrevalenceOrder order = PrevalenceOrder::Descending;
};

/// Writes budget_curves.csv, budget_summary.csv, class_gains.csv (when the
/// baseline is among the runs) and summary.json. Output is a deterministic
/// function of the inputs.
void emit_reports(std::span<const RunResult> runs, const std::filesystem::path& out_dir,
                  const EmitOptions& options = {});

/// Fixed six-decimal rendering used by every table; "nan" for NaN.
std::string format_real(double value);

}  // namespace cseal::report
