#include "ssmprune/commands.hpp"

#include <fstream>
#include <ostream>

#include "ssmprune/error.hpp"

namespace ssmprune {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Exact bookkeeping checks on a finished run.
void check_run_invariants(const TrainResult& r, std::int64_t initial_params) {
  std::int64_t prev = initial_params;
  for (const auto& rep : r.reports) {
    if (rep.conv_params_before != prev) throw InvariantError("prune report does not chain");
    std::int64_t before = 0, after = 0;
    for (const auto& l : rep.layers) {
      before += l.conv_params_before;
      after += l.conv_params_after;
    }
    if (before != rep.conv_params_before || after != rep.conv_params_after) {
      throw InvariantError("per-layer counts do not sum to report totals");
    }
    if (rep.reduction_percent != reduction_percent(rep.conv_params_before, rep.conv_params_after)) {
      throw InvariantError("report reduction_percent inconsistent");
    }
    prev = rep.conv_params_after;
  }
  if (conv_param_count(r.graph) != prev) throw InvariantError("final model does not match reports");
}

}  // namespace

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RangeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

TrainResult run_train(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  DatasetSpec spec = cfg.data;
  spec.seed = cfg.train.seed;
  auto [train, test] = load_cifar10(spec);

  VggMiniOptions model = cfg.model;
  model.input = train.shape;
  ModelGraph g = vgg_mini(model, cfg.train.seed);
  const std::int64_t initial = conv_param_count(g);

  std::filesystem::create_directories(cfg.output_dir);
  {
    const auto path = cfg.output_dir / "summary.txt";
    auto out = open_out(path);
    out << "# resolved configuration\n" << format_run_config(cfg);
    out << "\n# train examples: " << train.size() << ", test examples: " << test.size()
        << "\n# initial conv params: " << initial << " (without bias: " << conv_param_count(g, false)
        << ")\n";
    check_written(out, path);
  }

  log << "training " << train.size() << " examples, " << cfg.train.epochs << " epochs, "
      << (cfg.prune_enabled ? "pruning " + to_string(cfg.prune.method) + "/" + to_string(cfg.prune.metric) +
                                  " ratio " + format_real(cfg.prune.ratio)
                            : std::string("no pruning"))
      << '\n';
  auto result = train_prune(std::move(g), train, test, cfg.resolved_train(), [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << "  loss " << r.train_loss << "  train " << r.train_acc << "%  test "
        << r.test_acc << "%  conv params " << r.conv_params << " (-" << r.cumulative_reduction_percent
        << "%)\n";
  });
  check_run_invariants(result, initial);

  {
    const auto path = cfg.output_dir / "metrics.csv";
    auto out = open_out(path);
    write_metrics_csv(out, result.records);
    check_written(out, path);
  }
  {
    const auto path = cfg.output_dir / "prune_log.csv";
    auto out = open_out(path);
    write_prune_log_csv(out, result.reports);
    check_written(out, path);
  }
  save_checkpoint(result.graph, cfg.output_dir / "model.ssmp");
  {
    const auto path = cfg.output_dir / "summary.txt";
    std::ofstream out(path, std::ios::app);
    const auto& last = result.records.back();
    out << "# final conv params: " << last.conv_params << " (without bias: "
        << conv_param_count(result.graph, false) << ")\n# final reduction_pct: "
        << last.cumulative_reduction_percent << "\n# final test_acc: " << last.test_acc << "\n";
    check_written(out, path);
  }
  return result;
}

int cmd_train(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  return run_guarded([&] {
    run_train(cfg, log);
    return static_cast<int>(kExitOk);
  }, err);
}

void run_analyze(const AnalyzeOptions& opts, std::ostream& log) {
  const ModelGraph g = load_checkpoint(opts.checkpoint);
  std::filesystem::create_directories(opts.output_dir);
  for (const auto& name : conv_layer_names(g)) {
    const auto& conv = std::get<Conv<float>>(g.layers[*g.find(name)].op);
    if (conv.out_channels() < 2) {
      log << name << ": single filter, skipped\n";
      continue;
    }
    const auto ssm = build_ssm(flatten_filters(conv.weight), opts.metric);
    const auto ranking = rank(ssm, opts.method);
    {
      const auto path = opts.output_dir / ("ssm_" + name + ".csv");
      auto out = open_out(path);
      write_ssm_csv(out, ssm);
      check_written(out, path);
    }
    {
      const auto path = opts.output_dir / ("ranking_" + name + ".csv");
      auto out = open_out(path);
      write_ranking_csv(out, ranking);
      check_written(out, path);
    }
    log << name << ": " << conv.out_channels() << " filters, most redundant " << ranking.order.front()
        << " (score " << ranking.scores[static_cast<std::size_t>(ranking.order.front())] << ")\n";
  }
}

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& log, std::ostream& err) {
  return run_guarded([&] {
    run_analyze(opts, log);
    return static_cast<int>(kExitOk);
  }, err);
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::vector<double>& ratios,
                                std::ostream& log) {
  if (ratios.empty()) throw ConfigError("sweep needs at least one ratio");
  std::vector<SweepRow> rows;
  for (double ratio : ratios) {
    RunConfig run = cfg;
    run.prune_enabled = ratio > 0.0;
    if (run.prune_enabled) run.prune.ratio = ratio;
    run.output_dir = cfg.output_dir / ("ratio_" + format_real(ratio));
    log << "== sweep ratio " << format_real(ratio) << '\n';
    TrainResult result;
    try {
      result = run_train(run, log);
    } catch (...) {
      log << "sweep aborted at ratio " << format_real(ratio) << '\n';
      throw;
    }
    for (const auto& r : result.records) {
      rows.push_back({ratio, r.epoch, r.test_acc, r.cumulative_reduction_percent});
    }
  }
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / "sweep.csv";
  auto out = open_out(path);
  write_sweep_csv(out, rows);
  check_written(out, path);
  return rows;
}

int cmd_sweep(const RunConfig& cfg, const std::vector<double>& ratios, std::ostream& log,
              std::ostream& err) {
  return run_guarded([&] {
    run_sweep(cfg, ratios, log);
    return static_cast<int>(kExitOk);
  }, err);
}

}  // namespace ssmprune
