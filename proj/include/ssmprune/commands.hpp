#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ssmprune/config.hpp"
#include "ssmprune/report.hpp"

namespace ssmprune {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Runs `body`, mapping exceptions to exit codes and printing them to `err`:
/// config/range errors -> 1, io/data/checkpoint errors -> 2, anything else -> 3.
int run_guarded(const std::function<int()>& body, std::ostream& err);

/// Trains (and prunes, if enabled) into cfg.output_dir: metrics.csv,
/// prune_log.csv, model.ssmp and summary.txt.
TrainResult run_train(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log, std::ostream& err);

struct AnalyzeOptions {
  std::filesystem::path checkpoint;
  MetricKind metric = MetricKind::L2;
  RankMethod method = RankMethod::Area;
  std::filesystem::path output_dir = ".";
};

/// Writes ssm_<layer>.csv and ranking_<layer>.csv per conv layer.
void run_analyze(const AnalyzeOptions& opts, std::ostream& log);
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& log, std::ostream& err);

/// One training run per ratio (0 = no pruning) under
/// cfg.output_dir/ratio_<r>/, plus a combined cfg.output_dir/sweep.csv.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::vector<double>& ratios,
                                std::ostream& log);
int cmd_sweep(const RunConfig& cfg, const std::vector<double>& ratios, std::ostream& log,
              std::ostream& err);

}  // namespace ssmprune
