#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cseal/active_loop.hpp"
#include "cseal/data.hpp"
#include "cseal/report.hpp"
#include "json.hpp"

namespace cseal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config::ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

fs::path output_root(const config::ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return "runs";
}

}  // namespace

int cmd_gen_data(const GenDataArgs& args) {
  data::SyntheticSpec spec =
      config::resolve(args.config_path.empty() ? "" : read_text(args.config_path)).synthetic;
  if (args.seed) spec.seed = *args.seed;
  if (args.n_train_pool) spec.n_train_pool = *args.n_train_pool;
  if (args.n_test) spec.n_test = *args.n_test;
  if (args.prevalence) {
    spec.prevalence = *args.prevalence;
    spec.n_classes = spec.prevalence.size();
  }
  if (args.label_noise) spec.label_noise = *args.label_noise;
  spec.validate();

  const data::Dataset ds = data::generate(spec);
  const fs::path out = args.out_path;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  data::save_dataset(ds, out);

  const json provenance{{"generator", "cseal gen-data"},
                        {"seed", spec.seed},
                        {"spec",
                         {{"n_train_pool", spec.n_train_pool},
                          {"n_test", spec.n_test},
                          {"n_features", spec.n_features},
                          {"n_classes", spec.n_classes},
                          {"latent_dim", spec.latent_dim},
                          {"prevalence", spec.prevalence},
                          {"label_noise", spec.label_noise},
                          {"score_noise", spec.score_noise},
                          {"observation_noise", spec.observation_noise},
                          {"class_correlation", spec.class_correlation},
                          {"seed", spec.seed}}}};
  write_text(fs::path(out.string() + ".provenance.json"), provenance.dump(2) + "\n");
  std::cout << "wrote " << ds.size() << " rows to " << out.string() << "\n";
  return kExitOk;
}

int cmd_run(const RunArgs& args) {
  config::ExperimentConfig cfg =
      config::resolve(args.config_path.empty() ? "" : read_text(args.config_path), args.overrides);

  const data::Dataset ds =
      cfg.data_path.empty() ? data::generate(cfg.synthetic) : data::load_dataset(cfg.data_path);
  cfg.model.input_dim = ds.num_features();
  cfg.model.num_classes = ds.num_classes();
  cfg.validate();

  const std::vector<std::size_t> test_rows = ds.rows_in(data::Split::Test);
  const fs::path root = output_root(cfg);
  int status = kExitOk;

  for (std::uint64_t seed : cfg.seeds) {
    report::RunResult run;
    run.method = losses::to_string(cfg.method);
    run.sampler = active::to_string(cfg.sampler);
    run.seed = seed;
    run.test_prevalence = ds.prevalence(test_rows);

    const fs::path dir = root / run.run_id() / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    config::ExperimentConfig effective = cfg;
    effective.seeds = {seed};
    write_text(dir / "config.json", config::to_json(effective));

    std::ofstream epochs(dir / "epochs.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream rounds(dir / "rounds.jsonl", std::ios::binary | std::ios::trunc);
    std::error_code ec;
    fs::remove(dir / "summary.json", ec);
    fs::remove(dir / "error.txt", ec);

    active::RunHooks hooks;
    hooks.on_epoch = [&](const train::EpochRecord& rec) {
      epochs << report::epoch_json_line(rec) << '\n';
      epochs.flush();
    };
    hooks.on_round = [&](const active::PoolState&, const active::RoundReport& rep) {
      rounds << report::round_json_line(run, rep) << '\n';
      rounds.flush();
      if (!args.quiet) {
        std::cout << run.run_id() << " seed " << seed << " budget "
                  << report::format_real(rep.budget_fraction) << " labelled " << rep.labelled
                  << " epochs " << rep.epochs << " test macro AUROC "
                  << report::format_real(rep.test.macro_auroc) << std::endl;
      }
    };
    hooks.on_log = [&](const std::string& msg) { std::cerr << run.run_id() << " seed " << seed << ": " << msg << "\n"; };

    try {
      run.rounds = active::run_active_learning(config::to_active_config(cfg, seed), ds, hooks);
      report::write_run_summary(run, dir);
    } catch (const active::RunError& e) {
      std::cerr << "error: " << run.run_id() << " seed " << seed << ": " << e.what() << "\n";
      write_text(dir / "error.txt", std::string(e.what()) + "\n");
      status = kExitRuntime;
    }
  }
  return status;
}

int cmd_report(const ReportArgs& args) {
  std::vector<fs::path> dirs;
  for (const std::string& d : args.run_dirs) {
    const fs::path p = d;
    if (!fs::is_directory(p)) throw std::runtime_error("not a directory: " + d);
    if (fs::exists(p / "summary.json") && fs::exists(p / "rounds.jsonl")) {
      dirs.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(p)) {
      if (entry.is_directory() && fs::exists(entry.path() / "summary.json") &&
          fs::exists(entry.path() / "rounds.jsonl")) {
        found.push_back(entry.path());
      }
    }
    std::sort(found.begin(), found.end());
    dirs.insert(dirs.end(), found.begin(), found.end());
  }
  if (dirs.empty()) throw std::runtime_error("no completed runs found");

  std::vector<report::RunResult> runs;
  for (const fs::path& d : dirs) runs.push_back(report::load_run(d));
  report::EmitOptions opts;
  opts.baseline = args.baseline;
  opts.order = args.order == "ascending" ? report::PrevalenceOrder::Ascending
                                         : report::PrevalenceOrder::Descending;
  report::emit_reports(runs, args.out_dir, opts);
  std::cout << "aggregated " << runs.size() << " runs into " << args.out_dir << "\n";
  return kExitOk;
}

}  // namespace cseal::cli
