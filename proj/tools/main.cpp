#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    out.push_back(std::stod(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cseal::cli;
  CLI::App app{"Evidential semi-supervised active learning experiments"};
  app.require_subcommand(1);

  GenDataArgs gen;
  std::string prevalence_text;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic multi-label dataset");
  gen_cmd->add_option("--config", gen.config_path, "JSON config; its synthetic section is used");
  gen_cmd->add_option("--out", gen.out_path, "Dataset CSV to write")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--n-train-pool", gen.n_train_pool, "Train-pool rows");
  gen_cmd->add_option("--n-test", gen.n_test, "Test rows");
  gen_cmd->add_option("--prevalence", prevalence_text, "Comma-separated class prevalences");
  gen_cmd->add_option("--label-noise", gen.label_noise, "Label flip probability");

  RunArgs run;
  std::string seeds_text;
  auto* run_cmd = app.add_subcommand("run", "Run active learning for each seed");
  run_cmd->add_option("--config", run.config_path, "JSON config file");
  run_cmd->add_option("--method", run.overrides.method, "esup, epsu, evat, emt or enot");
  run_cmd->add_option("--sampler", run.overrides.sampler, "au or random");
  run_cmd->add_option("--regime", run.overrides.regime, "low, mid or custom");
  run_cmd->add_option("--seeds", seeds_text, "Seed list, e.g. 0,1,2 or 0-4");
  run_cmd->add_option("--out", run.overrides.output_dir, "Output root");
  run_cmd->add_option("--data", run.overrides.data_path, "Dataset CSV (default: generate)");
  run_cmd->add_flag("--enforce-class-coverage", run.overrides.enforce_class_coverage,
                    "Grow the initial labelled set until every class has a positive");
  run_cmd->add_option("--aggregation", run.overrides.aggregation, "mean, sum or max");
  run_cmd->add_flag("--quiet", run.quiet, "Suppress per-round progress");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Aggregate finished runs into tables");
  report_cmd->add_option("runs", report.run_dirs, "Run directories or roots to search")->required();
  report_cmd->add_option("--out", report.out_dir, "Directory for the tables")->required();
  report_cmd->add_option("--baseline", report.baseline, "Run id for class gains");
  report_cmd->add_option("--order", report.order, "Class order by prevalence")
      ->check(CLI::IsMember({"ascending", "descending"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      if (!prevalence_text.empty()) gen.prevalence = parse_reals(prevalence_text);
      return cmd_gen_data(gen);
    }
    if (*run_cmd) {
      if (!seeds_text.empty()) run.overrides.seeds = cseal::config::parse_seed_list(seeds_text);
      return cmd_run(run);
    }
    return cmd_report(report);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
