#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ssmprune/commands.hpp"
#include "ssmprune/error.hpp"

namespace {

using namespace ssmprune;

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return "--" + f;
}

/// Registers `--config` plus one flag per config key on `app`.
struct ConfigFlags {
  std::string config_path;
  bool no_prune = false;
  std::map<std::string, std::string> values;  // "section.key" -> text

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "Run configuration file")->check(CLI::ExistingFile);
    app->add_flag("--no-prune", no_prune, "Train without pruning (baseline)");
    for (const auto& k : config_keys()) {
      std::string names = flag_name(k.key);
      if (k.section == "data" && k.key == "path") names += ",--data";
      if (k.section == "output" && k.key == "dir") names += ",-o,--out";
      app->add_option(names, values[k.section + "." + k.key], "[" + k.section + "] " + k.key);
    }
  }

  RunConfig resolve(const CLI::App* app) const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& k : config_keys()) {
      if (app->count(flag_name(k.key)) > 0) {
        set_config_value(cfg, k.section, k.key, values.at(k.section + "." + k.key));
      }
    }
    if (no_prune) cfg.prune_enabled = false;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similarity-matrix filter pruning for small CNNs"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train a model, pruning after each epoch");
  ConfigFlags train_flags;
  train_flags.attach(train);

  auto* sweep = app.add_subcommand("sweep", "Train once per pruning ratio and write sweep.csv");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::vector<double> ratios;
  sweep->add_option("--ratios", ratios, "Pruning ratios; 0 means no pruning")->delimiter(',')->required();

  auto* analyze = app.add_subcommand("analyze", "Write SSM and ranking CSVs for a checkpoint");
  AnalyzeOptions analyze_opts;
  std::string metric = "l2", method = "area", checkpoint, analyze_out = ".";
  analyze->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  analyze->add_option("--metric", metric, "l2, cosine, cityblock or kl");
  analyze->add_option("--method", method, "greedy or area");
  analyze->add_option("-o,--out", analyze_out, "Output directory");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in CIFAR-10 binary format");
  SyntheticSpec synth_spec;
  std::string synth_out;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--train", synth_spec.train_records, "Training records");
  synth->add_option("--test", synth_spec.test_records, "Test records");
  synth->add_option("--noise", synth_spec.noise, "Pixel noise standard deviation");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (train->parsed()) {
    return run_guarded([&] { return cmd_train(train_flags.resolve(train), std::cout, std::cerr); },
                       std::cerr);
  }
  if (sweep->parsed()) {
    return run_guarded([&] { return cmd_sweep(sweep_flags.resolve(sweep), ratios, std::cout, std::cerr); },
                       std::cerr);
  }
  if (analyze->parsed()) {
    return run_guarded([&] {
      analyze_opts.checkpoint = checkpoint;
      analyze_opts.metric = parse_metric(metric);
      analyze_opts.method = parse_method(method);
      analyze_opts.output_dir = analyze_out;
      return cmd_analyze(analyze_opts, std::cout, std::cerr);
    }, std::cerr);
  }
  return run_guarded([&] {
    write_synthetic_cifar(synth_out, synth_spec);
    std::cout << "wrote " << synth_spec.train_records << " train and " << synth_spec.test_records
              << " test records to " << synth_out << '\n';
    return static_cast<int>(kExitOk);
  }, std::cerr);
}
