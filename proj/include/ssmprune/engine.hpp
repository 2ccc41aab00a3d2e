#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ssmprune/model.hpp"
#include "ssmprune/ranking.hpp"

namespace ssmprune {

enum class RatioBase { Current, Original };

RatioBase parse_ratio_base(std::string_view name);
std::string to_string(RatioBase base);

struct PruneConfig {
  double ratio = 0.10;
  RankMethod method = RankMethod::Area;
  MetricKind metric = MetricKind::L2;
  Index min_filters = 4;
  /// Honoured by the greedy ranker only.
  bool pair_dedup = true;
  RatioBase ratio_base = RatioBase::Current;
  int prune_epochs = 5;
  std::uint64_t seed = 0;
};

/// Throws RangeError on an out-of-range field.
void validate(const PruneConfig& cfg);

struct LayerPruneEntry {
  std::string layer_id;
  std::vector<Index> pruned_indices;
  Index filters_before = 0;
  Index filters_after = 0;
  /// This layer's conv parameters (weights + bias) at the start and end of
  /// the step; upstream prunes shrink its input channels too.
  std::int64_t conv_params_before = 0;
  std::int64_t conv_params_after = 0;
};

struct PruneReport {
  int epoch = 0;
  std::vector<LayerPruneEntry> layers;
  std::int64_t conv_params_before = 0;
  std::int64_t conv_params_after = 0;
  std::int64_t conv_weights_before = 0;  // bias excluded
  std::int64_t conv_weights_after = 0;
  double reduction_percent = 0.0;

  Index filters_pruned() const;
};

/// 100 * (1 - after / before); 0 when before is 0.
double reduction_percent(std::int64_t before, std::int64_t after);

/// Removes the selected filters (output channels) of a conv layer and the
/// matching input slices downstream: the next conv's input channels, or the
/// columns [c*H*W, (c+1)*H*W) of the first dense layer after a flatten.
template <typename Scalar>
BasicModelGraph<Scalar> prune_conv_layer(BasicModelGraph<Scalar> g, const std::string& layer_id,
                                         std::span<const Index> indices);

inline ModelGraph prune_conv_layer(ModelGraph g, const PruneSelection& sel) {
  return prune_conv_layer<float>(std::move(g), sel.layer_id, sel.indices);
}

/// One pass of SSM -> rank -> select -> prune over every conv layer, in
/// graph order. A no-op (empty report) when epoch > cfg.prune_epochs.
struct PruneStepResult {
  ModelGraph graph;
  PruneReport report;
};
PruneStepResult prune_step(ModelGraph g, const PruneConfig& cfg, int epoch);

/// Replays a report's per-layer removals on a graph of the same topology
/// (e.g. optimizer state shaped like the model).
template <typename Scalar>
BasicModelGraph<Scalar> apply_report(BasicModelGraph<Scalar> g, const PruneReport& report);

}  // namespace ssmprune
