#include "cseal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace cseal::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json reals(std::span<const double> values) {
  json arr = json::array();
  for (double v : values) arr.push_back(real_or_null(v));
  return arr;
}

std::vector<double> reals_from(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(real_from(v));
  return out;
}

json round_json(const active::RoundReport& rep) {
  return json{{"round", rep.round},
              {"budget", rep.budget_fraction},
              {"labelled", rep.labelled},
              {"unlabelled", rep.unlabelled},
              {"validation", rep.validation},
              {"sampler", active::to_string(rep.sampler)},
              {"model_choice", active::to_string(rep.model_choice)},
              {"reported_choice", active::to_string(rep.reported_choice)},
              {"epochs", rep.epochs},
              {"val_auroc", real_or_null(rep.val_auroc)},
              {"macro_auroc", real_or_null(rep.test.macro_auroc)},
              {"macro_auprc", real_or_null(rep.test.macro_auprc)},
              {"per_class_auroc", reals(rep.test.per_class_auroc)},
              {"per_class_auprc", reals(rep.test.per_class_auprc)},
              {"skipped_classes", rep.test.skipped_classes},
              {"vat_fallback_rows", rep.vat_fallback_rows}};
}

active::ModelChoice parse_choice(const std::string& s) {
  if (s == "raw") return active::ModelChoice::Raw;
  if (s == "ema") return active::ModelChoice::Ema;
  throw ReportError("unknown model choice '" + s + "'");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError("cannot write " + path.string());
  out << content;
  if (!out) throw ReportError("failed writing " + path.string());
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n == 0 ? kNaN : s / static_cast<double>(n);
}

double sample_std(const std::vector<double>& v) {
  std::vector<double> finite;
  for (double x : v) {
    if (!std::isnan(x)) finite.push_back(x);
  }
  if (finite.size() < 2) return finite.empty() ? kNaN : 0.0;
  const double m = mean_of(finite);
  double ss = 0.0;
  for (double x : finite) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(finite.size() - 1));
}

std::vector<RunResult> sorted_runs(std::span<const RunResult> runs) {
  std::vector<RunResult> out(runs.begin(), runs.end());
  std::stable_sort(out.begin(), out.end(), [](const RunResult& a, const RunResult& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.sampler != b.sampler) return a.sampler < b.sampler;
    return a.seed < b.seed;
  });
  return out;
}

std::vector<double> budgets_of(const RunResult& run) {
  std::vector<double> b;
  for (const auto& r : run.rounds) b.push_back(r.budget_fraction);
  return b;
}

void check_compatible(std::span<const RunResult> runs) {
  if (runs.empty()) throw ReportError("no runs to aggregate");
  const std::vector<double> ref = budgets_of(runs.front());
  const std::size_t k = runs.front().test_prevalence.size();
  for (const RunResult& run : runs) {
    const std::string who = run.run_id() + " seed " + std::to_string(run.seed);
    if (run.rounds.empty()) throw ReportError("run " + who + " has no rounds");
    if (budgets_of(run) != ref) throw ReportError("run " + who + " has a different budget grid");
    if (run.test_prevalence.size() != k) throw ReportError("run " + who + " has a different class count");
    for (const auto& r : run.rounds) {
      if (r.test.per_class_auroc.size() != k) throw ReportError("run " + who + " has a different class count");
    }
  }
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::string epoch_json_line(const train::EpochRecord& rec) {
  return json{{"round", rec.round},
              {"epoch", rec.epoch},
              {"lr", rec.lr},
              {"train_loss", real_or_null(rec.train_loss)},
              {"val_loss", real_or_null(rec.val_loss)},
              {"val_auroc_raw", real_or_null(rec.val_auroc_raw)},
              {"val_auroc_ema", real_or_null(rec.val_auroc_ema)}}
      .dump();
}

std::string round_json_line(const RunResult& run, const active::RoundReport& rep) {
  json j = round_json(rep);
  j["method"] = run.method;
  j["seed"] = run.seed;
  return j.dump();
}

active::RoundReport parse_round_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    active::RoundReport rep;
    rep.round = j.at("round").get<int>();
    rep.budget_fraction = j.at("budget").get<double>();
    rep.labelled = j.at("labelled").get<std::size_t>();
    rep.unlabelled = j.at("unlabelled").get<std::size_t>();
    rep.validation = j.at("validation").get<std::size_t>();
    rep.sampler = active::parse_sampler(j.at("sampler").get<std::string>());
    rep.model_choice = parse_choice(j.at("model_choice").get<std::string>());
    rep.reported_choice = parse_choice(j.at("reported_choice").get<std::string>());
    rep.epochs = j.at("epochs").get<int>();
    rep.val_auroc = real_from(j.at("val_auroc"));
    rep.test.macro_auroc = real_from(j.at("macro_auroc"));
    rep.test.macro_auprc = real_from(j.at("macro_auprc"));
    rep.test.per_class_auroc = reals_from(j.at("per_class_auroc"));
    rep.test.per_class_auprc = reals_from(j.at("per_class_auprc"));
    rep.test.skipped_classes = j.at("skipped_classes").get<std::vector<std::size_t>>();
    rep.vat_fallback_rows = j.value("vat_fallback_rows", std::size_t{0});
    return rep;
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed round record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ReportError(std::string("malformed round record: ") + e.what());
  }
}

void write_run_summary(const RunResult& run, const fs::path& run_dir) {
  json rounds = json::array();
  for (const auto& r : run.rounds) rounds.push_back(round_json(r));
  const json j{{"method", run.method},
               {"sampler", run.sampler},
               {"seed", run.seed},
               {"test_prevalence", reals(run.test_prevalence)},
               {"final_macro_auroc", run.rounds.empty() ? json(nullptr)
                                                        : real_or_null(run.rounds.back().test.macro_auroc)},
               {"rounds", std::move(rounds)}};
  write_file(run_dir / "summary.json", j.dump(2) + "\n");
}

RunResult load_run(const fs::path& run_dir) {
  const fs::path summary = run_dir / "summary.json";
  std::ifstream in(summary);
  if (!in) throw ReportError("run directory " + run_dir.string() + " has no summary.json");
  RunResult run;
  try {
    const json j = json::parse(in);
    run.method = j.at("method").get<std::string>();
    run.sampler = j.at("sampler").get<std::string>();
    run.seed = j.at("seed").get<std::uint64_t>();
    run.test_prevalence = reals_from(j.at("test_prevalence"));
  } catch (const json::exception& e) {
    throw ReportError(summary.string() + ": " + e.what());
  }
  std::ifstream rounds(run_dir / "rounds.jsonl");
  if (!rounds) throw ReportError("run directory " + run_dir.string() + " has no rounds.jsonl");
  std::string line;
  while (std::getline(rounds, line)) {
    if (!line.empty()) run.rounds.push_back(parse_round_json_line(line));
  }
  return run;
}

GainTable class_gain_table(std::span<const RunResult> runs_in, const std::string& baseline,
                           PrevalenceOrder order) {
  const std::vector<RunResult> runs = sorted_runs(runs_in);
  check_compatible(runs);

  std::vector<std::string> ids;
  std::map<std::string, std::vector<const RunResult*>> by_id;
  for (const RunResult& r : runs) {
    if (by_id.find(r.run_id()) == by_id.end()) ids.push_back(r.run_id());
    by_id[r.run_id()].push_back(&r);
  }
  if (by_id.find(baseline) == by_id.end()) throw ReportError("baseline run '" + baseline + "' not found");

  const std::size_t k = runs.front().test_prevalence.size();
  const auto final_mean = [&](const std::string& id, std::size_t c) {
    std::vector<double> v;
    for (const RunResult* r : by_id.at(id)) v.push_back(r->rounds.back().test.per_class_auroc[c]);
    return mean_of(v);
  };

  GainTable t;
  t.run_ids = ids;
  t.classes.resize(k);
  std::iota(t.classes.begin(), t.classes.end(), std::size_t{0});
  const auto& prev = runs.front().test_prevalence;
  std::stable_sort(t.classes.begin(), t.classes.end(), [&](std::size_t a, std::size_t b) {
    return order == PrevalenceOrder::Descending ? prev[a] > prev[b] : prev[a] < prev[b];
  });
  for (std::size_t c : t.classes) {
    t.prevalence.push_back(prev[c]);
    const double base = final_mean(baseline, c);
    std::vector<double> row;
    for (const std::string& id : ids) row.push_back((final_mean(id, c) - base) * 100.0);
    t.gains.push_back(std::move(row));
  }
  return t;
}

std::vector<BudgetStat> budget_summary(std::span<const RunResult> runs_in) {
  const std::vector<RunResult> runs = sorted_runs(runs_in);
  check_compatible(runs);
  std::vector<BudgetStat> out;
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t j = i;
    while (j < runs.size() && runs[j].run_id() == runs[i].run_id()) ++j;
    for (std::size_t b = 0; b < runs[i].rounds.size(); ++b) {
      std::vector<double> auroc;
      std::vector<double> auprc;
      for (std::size_t s = i; s < j; ++s) {
        auroc.push_back(runs[s].rounds[b].test.macro_auroc);
        auprc.push_back(runs[s].rounds[b].test.macro_auprc);
      }
      out.push_back({runs[i].method, runs[i].sampler, runs[i].rounds[b].budget_fraction, j - i,
                     mean_of(auroc), sample_std(auroc), mean_of(auprc), sample_std(auprc)});
    }
    i = j;
  }
  return out;
}

void emit_reports(std::span<const RunResult> runs_in, const fs::path& out_dir,
                  const EmitOptions& options) {
  const std::vector<RunResult> runs = sorted_runs(runs_in);
  check_compatible(runs);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ReportError("cannot create " + out_dir.string() + ": " + ec.message());

  std::ostringstream curves;
  curves << "method,sampler,seed,budget,macro_auroc,macro_auprc\n";
  for (const RunResult& r : runs) {
    for (const auto& rep : r.rounds) {
      curves << r.method << ',' << r.sampler << ',' << r.seed << ',' << format_real(rep.budget_fraction)
             << ',' << format_real(rep.test.macro_auroc) << ',' << format_real(rep.test.macro_auprc)
             << '\n';
    }
  }
  write_file(out_dir / "budget_curves.csv", curves.str());

  const std::vector<BudgetStat> stats = budget_summary(runs);
  std::ostringstream summary_csv;
  summary_csv << "method,sampler,budget,seeds,macro_auroc_mean,macro_auroc_std,macro_auprc_mean,"
                 "macro_auprc_std\n";
  json stats_json = json::array();
  for (const BudgetStat& s : stats) {
    summary_csv << s.method << ',' << s.sampler << ',' << format_real(s.budget) << ',' << s.seeds << ','
                << format_real(s.auroc_mean) << ',' << format_real(s.auroc_std) << ','
                << format_real(s.auprc_mean) << ',' << format_real(s.auprc_std) << '\n';
    stats_json.push_back({{"method", s.method},
                          {"sampler", s.sampler},
                          {"budget", format_real(s.budget)},
                          {"seeds", s.seeds},
                          {"macro_auroc_mean", format_real(s.auroc_mean)},
                          {"macro_auroc_std", format_real(s.auroc_std)},
                          {"macro_auprc_mean", format_real(s.auprc_mean)},
                          {"macro_auprc_std", format_real(s.auprc_std)}});
  }
  write_file(out_dir / "budget_summary.csv", summary_csv.str());

  json gains_json = nullptr;
  const bool has_baseline = std::any_of(runs.begin(), runs.end(), [&](const RunResult& r) {
    return r.run_id() == options.baseline;
  });
  if (has_baseline) {
    const GainTable t = class_gain_table(runs, options.baseline, options.order);
    std::ostringstream gains;
    gains << "class,prevalence";
    for (const auto& id : t.run_ids) gains << ',' << id;
    gains << '\n';
    gains_json = json::array();
    for (std::size_t i = 0; i < t.classes.size(); ++i) {
      gains << t.classes[i] << ',' << format_real(t.prevalence[i]);
      json row{{"class", t.classes[i]}, {"prevalence", format_real(t.prevalence[i])}};
      for (std::size_t j = 0; j < t.run_ids.size(); ++j) {
        gains << ',' << format_real(t.gains[i][j]);
        row[t.run_ids[j]] = format_real(t.gains[i][j]);
      }
      gains << '\n';
      gains_json.push_back(std::move(row));
    }
    write_file(out_dir / "class_gains.csv", gains.str());
  }

  const json summary{{"runs", runs.size()},
                     {"baseline", has_baseline ? json(options.baseline) : json(nullptr)},
                     {"prevalence_order",
                      options.order == PrevalenceOrder::Descending ? "descending" : "ascending"},
                     {"budget_summary", std::move(stats_json)},
                     {"class_gains", std::move(gains_json)}};
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace cseal::report
