#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cseal/config.hpp"

namespace cseal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "CSEAL_OUTPUT_ROOT";

struct GenDataArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_train_pool;
  std::optional<std::size_t> n_test;
  std::optional<std::vector<double>> prevalence;
  std::optional<double> label_noise;
};

struct RunArgs {
  std::string config_path;
  config::Overrides overrides;
  bool quiet = false;
};

struct ReportArgs {
  std::vector<std::string> run_dirs;
  std::string out_dir;
  std::string baseline = "esup+random";
  std::string order = "descending";
};

int cmd_gen_data(const GenDataArgs& args);
int cmd_run(const RunArgs& args);
int cmd_report(const ReportArgs& args);

}  // namespace cseal::cli
