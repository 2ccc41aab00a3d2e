#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ssmprune/dataset.hpp"
#include "ssmprune/engine.hpp"
#include "ssmprune/nn.hpp"

namespace ssmprune {

struct TrainConfig {
  int epochs = 30;
  Index batch_size = 128;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  /// Epochs after which the rate is multiplied by lr_gamma. Empty means
  /// 50% and 75% of `epochs`.
  std::vector<int> lr_milestones;
  double lr_gamma = 0.1;
  bool augment_flip = false;
  std::uint64_t seed = 0;
  /// Absent for a baseline (no-prune) run.
  std::optional<PruneConfig> prune;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // percent
  double test_acc = 0.0;   // percent, after this epoch's prune step
  std::int64_t conv_params = 0;
  double cumulative_reduction_percent = 0.0;
};

struct TrainResult {
  ModelGraph graph;
  std::vector<EpochRecord> records;
  std::vector<PruneReport> reports;
};

double learning_rate_at(const TrainConfig& cfg, int epoch);

/// Percent of examples whose argmax logit equals the label.
double evaluate_accuracy(const ModelGraph& g, const Dataset& data, Index batch_size = 256);

/// SGD with momentum and L2 weight decay on weights (not biases):
/// v <- mu*v + grad + wd*w;  w <- w - lr*v.
class SgdMomentum {
 public:
  SgdMomentum(const ModelGraph& g, double momentum, double weight_decay);

  void step(ModelGraph& g, Gradients<float>& grads, double lr);

  /// Drops the velocity slices of pruned filters.
  void apply(const PruneReport& report) { velocity_ = apply_report(std::move(velocity_), report); }

  const ModelGraph& velocity() const { return velocity_; }

 private:
  ModelGraph velocity_;
  double momentum_;
  double weight_decay_;
};

/// Train for cfg.epochs; after each epoch <= prune_epochs run one prune step.
/// Single-threaded and deterministic for a fixed seed.
TrainResult train_prune(ModelGraph g, const Dataset& train, const Dataset& test,
                        const TrainConfig& cfg,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace ssmprune
