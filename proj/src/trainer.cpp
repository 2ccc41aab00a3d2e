#include "ssmprune/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "ssmprune/error.hpp"

namespace ssmprune {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw RangeError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw RangeError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw RangeError("learning_rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw RangeError("momentum must be in [0,1)");
  if (!(cfg.weight_decay >= 0.0)) throw RangeError("weight_decay must be >= 0");
  if (cfg.prune) {
    validate(*cfg.prune);
    if (cfg.prune->prune_epochs > cfg.epochs) throw RangeError("prune_epochs exceeds epochs");
  }
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  std::vector<int> milestones = cfg.lr_milestones;
  if (milestones.empty()) milestones = {cfg.epochs / 2, (3 * cfg.epochs) / 4};
  double lr = cfg.learning_rate;
  for (int m : milestones) {
    if (m > 0 && epoch > m) lr *= cfg.lr_gamma;
  }
  return lr;
}

double evaluate_accuracy(const ModelGraph& g, const Dataset& data, Index batch_size) {
  if (data.size() == 0) return 0.0;
  Index correct = 0;
  for (Index start = 0; start < data.size(); start += batch_size) {
    const Index n = std::min(batch_size, data.size() - start);
    const Matrix logits = forward<float>(g, data.images.middleRows(start, n));
    for (Index b = 0; b < n; ++b) {
      Index arg;
      logits.row(b).maxCoeff(&arg);
      if (arg == data.labels[static_cast<std::size_t>(start + b)]) ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

SgdMomentum::SgdMomentum(const ModelGraph& g, double momentum, double weight_decay)
    : velocity_(zeros_like(g)), momentum_(momentum), weight_decay_(weight_decay) {}

void SgdMomentum::step(ModelGraph& g, Gradients<float>& grads, double lr) {
  using Map = Eigen::Map<Vector>;
  std::vector<Map> w, v, d;
  std::vector<bool> bias;
  for_each_parameter(g, [&](Map m, bool is_bias) {
    w.push_back(m);
    bias.push_back(is_bias);
  });
  for_each_parameter(velocity_, [&](Map m, bool) { v.push_back(m); });
  for_each_parameter(grads, [&](Map m, bool) { d.push_back(m); });
  if (w.size() != v.size() || w.size() != d.size()) {
    throw InvariantError("optimizer state does not match model structure");
  }
  const auto mu = static_cast<float>(momentum_);
  const auto wd = static_cast<float>(weight_decay_);
  const auto rate = static_cast<float>(lr);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k].size() != v[k].size() || w[k].size() != d[k].size()) {
      throw InvariantError("optimizer state does not match model structure");
    }
    if (bias[k]) {
      v[k] = mu * v[k] + d[k];
    } else {
      v[k] = mu * v[k] + d[k] + wd * w[k];
    }
    w[k] -= rate * v[k];
  }
}

namespace {

void flip_horizontal(float* image, const Shape3& s) {
  for (Index c = 0; c < s.c; ++c) {
    for (Index y = 0; y < s.h; ++y) {
      float* row = image + (c * s.h + y) * s.w;
      std::reverse(row, row + s.w);
    }
  }
}

}  // namespace

TrainResult train_prune(ModelGraph g, const Dataset& train, const Dataset& test,
                        const TrainConfig& cfg,
                        const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(cfg);
  validate(g);
  if (train.size() == 0) throw DataError("training set is empty");
  if (train.shape.size() != g.input.size()) throw ShapeError("dataset shape does not match model input");

  TrainResult result;
  const std::int64_t initial_params = conv_param_count(g);
  SgdMomentum opt(g, cfg.momentum, cfg.weight_decay);
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 augment_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution coin(0.5);

  std::vector<Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Matrix batch_images;
  std::vector<std::int32_t> batch_labels;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = learning_rate_at(cfg, epoch);
    double loss_sum = 0.0;
    Index correct = 0;

    for (Index start = 0; start < train.size(); start += cfg.batch_size) {
      const Index n = std::min(cfg.batch_size, train.size() - start);
      batch_images.resize(n, train.images.cols());
      batch_labels.resize(static_cast<std::size_t>(n));
      for (Index b = 0; b < n; ++b) {
        const Index src = order[static_cast<std::size_t>(start + b)];
        batch_images.row(b) = train.images.row(src);
        batch_labels[static_cast<std::size_t>(b)] = train.labels[static_cast<std::size_t>(src)];
        if (cfg.augment_flip && coin(augment_rng)) flip_horizontal(batch_images.row(b).data(), train.shape);
      }
      ForwardCache<float> cache;
      forward<float>(g, batch_images, &cache);
      for (Index b = 0; b < n; ++b) {
        Index arg;
        cache.logits.row(b).maxCoeff(&arg);
        if (arg == batch_labels[static_cast<std::size_t>(b)]) ++correct;
      }
      double loss = 0.0;
      auto grads = backward<float>(g, cache, batch_labels, &loss);
      loss_sum += loss * static_cast<double>(n);
      opt.step(g, grads, lr);
    }

    if (cfg.prune && epoch <= cfg.prune->prune_epochs) {
      auto step = prune_step(std::move(g), *cfg.prune, epoch);
      g = std::move(step.graph);
      opt.apply(step.report);
      result.reports.push_back(std::move(step.report));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(train.size());
    rec.test_acc = evaluate_accuracy(g, test);
    rec.conv_params = conv_param_count(g);
    rec.cumulative_reduction_percent = reduction_percent(initial_params, rec.conv_params);
    result.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.graph = std::move(g);
  return result;
}

}  // namespace ssmprune
