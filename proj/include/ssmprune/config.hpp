#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ssmprune/engine.hpp"
#include "ssmprune/io.hpp"
#include "ssmprune/trainer.hpp"

namespace ssmprune {

/// Everything one training run needs. Text form is `key = value` lines under
/// `[train]`, `[prune]`, `[data]`, `[model]`, `[output]` headers; `#` starts
/// a comment.
struct RunConfig {
  TrainConfig train;       // train.prune is filled from `prune` when enabled
  PruneConfig prune;
  bool prune_enabled = true;
  DatasetSpec data;
  VggMiniOptions model;
  std::filesystem::path output_dir = "run";

  /// TrainConfig with the prune section attached (or not) and seeds shared.
  TrainConfig resolved_train() const;
};

struct ConfigKey {
  std::string section;
  std::string key;
};

/// Every accepted key, in canonical order.
const std::vector<ConfigKey>& config_keys();

/// Sets `key` (section optional if the key is unique) from its text value.
/// Throws ConfigError tagged with `line` on unknown keys or bad values.
void set_config_value(RunConfig& cfg, std::string_view section, std::string_view key,
                      std::string_view value, std::size_t line = 0);

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text form; parse_run_config(format_run_config(c)) reproduces c.
std::string format_run_config(const RunConfig& cfg);

/// Checks cross-field constraints (prune_epochs <= epochs etc).
void validate(const RunConfig& cfg);

}  // namespace ssmprune
