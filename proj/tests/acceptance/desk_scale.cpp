#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "criteria.hpp"
#include "cseal/active_loop.hpp"
#include "cseal/config.hpp"
#include "cseal/data.hpp"

namespace cseal::acceptance {

namespace {

constexpr double kFloor = 0.80;
constexpr double kPairBudgetSeconds = 45.0 * 60.0;

struct Pair {
  const char* method;
  const char* sampler;
};

// eSUP+random and both eNoT samplers feed the paired comparisons; the other
// SSL methods run with AU for the floor check.
constexpr Pair kPairs[] = {{"esup", "random"}, {"enot", "au"}, {"enot", "random"},
                           {"epsu", "au"},     {"evat", "au"}, {"emt", "au"}};

}  // namespace

Outcome desk_scale_trend(const DeskOptions& options) {
  std::map<std::string, std::vector<double>> finals;
  std::ostringstream problems;
  bool pass = true;
  double lowest = 1.0;
  std::string lowest_run;

  std::optional<data::Dataset> dataset;
  for (const Pair& pair : kPairs) {
    config::Overrides ov;
    ov.method = pair.method;
    ov.sampler = pair.sampler;
    ov.regime = "low";
    config::ExperimentConfig cfg = config::load(options.config_path, ov);
    if (!dataset) dataset = data::generate(cfg.synthetic);
    cfg.model.input_dim = dataset->num_features();
    cfg.model.num_classes = dataset->num_classes();
    const std::string id = std::string(pair.method) + "+" + pair.sampler;

    const auto start = std::chrono::steady_clock::now();
    for (const std::uint64_t seed : options.seeds) {
      const auto reports = active::run_active_learning(config::to_active_config(cfg, seed), *dataset);
      const double auroc = reports.back().test.macro_auroc;
      finals[id].push_back(auroc);
      if (options.verbose) std::printf("  %-12s seed %llu  final macro AUROC %.4f\n", id.c_str(),
                                       static_cast<unsigned long long>(seed), auroc);
      std::fflush(stdout);
      if (!(auroc >= kFloor)) {
        pass = false;
        problems << id << " seed " << seed << " below floor; ";
      }
      if (auroc < lowest) {
        lowest = auroc;
        lowest_run = id;
      }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.verbose) std::printf("  %-12s %.0f s\n", id.c_str(), seconds);
    if (seconds > kPairBudgetSeconds) {
      pass = false;
      problems << id << " took " << static_cast<int>(seconds) << " s; ";
    }
  }

  const auto wins = [&](const std::string& a, const std::string& b) {
    int n = 0;
    for (std::size_t i = 0; i < options.seeds.size(); ++i) n += finals[a][i] >= finals[b][i] ? 1 : 0;
    return n;
  };
  const int need = static_cast<int>(options.seeds.size() / 2 + 1);
  const int b = wins("enot+au", "esup+random");
  const int c = wins("enot+au", "enot+random");
  if (b < need) pass = false;
  if (c < need) pass = false;

  std::ostringstream detail;
  detail << "(a) min " << lowest << " [" << lowest_run << "] vs floor " << kFloor << "; (b) enot+au >= esup+random in "
         << b << "/" << options.seeds.size() << "; (c) enot au >= random in " << c << "/" << options.seeds.size();
  if (!problems.str().empty()) detail << "; " << problems.str();
  return {pass, detail.str()};
}

}  // namespace cseal::acceptance
