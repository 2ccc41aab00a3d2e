#include "ssmprune/engine.hpp"

#include <algorithm>
#include <cctype>

#include "ssmprune/error.hpp"

namespace ssmprune {

RatioBase parse_ratio_base(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "current") return RatioBase::Current;
  if (lower == "original") return RatioBase::Original;
  throw ConfigError("unknown ratio base '" + std::string(name) + "' (expected current, original)");
}

std::string to_string(RatioBase base) { return base == RatioBase::Current ? "current" : "original"; }

void validate(const PruneConfig& cfg) {
  if (!(cfg.ratio > 0.0 && cfg.ratio < 1.0)) {
    throw RangeError("prune ratio must be in (0,1), got " + std::to_string(cfg.ratio));
  }
  if (cfg.min_filters < 1) throw RangeError("min_filters must be >= 1");
  if (cfg.prune_epochs < 0) throw RangeError("prune_epochs must be >= 0");
}

Index PruneReport::filters_pruned() const {
  Index n = 0;
  for (const auto& l : layers) n += static_cast<Index>(l.pruned_indices.size());
  return n;
}

double reduction_percent(std::int64_t before, std::int64_t after) {
  if (before == 0) return 0.0;
  return 100.0 * (1.0 - static_cast<double>(after) / static_cast<double>(before));
}

template <typename Scalar>
BasicModelGraph<Scalar> prune_conv_layer(BasicModelGraph<Scalar> g, const std::string& layer_id,
                                         std::span<const Index> indices) {
  const auto pos = g.find(layer_id);
  if (!pos) throw StructuralError("no layer named '" + layer_id + "'");
  auto* conv = std::get_if<Conv<Scalar>>(&g.layers[*pos].op);
  if (!conv) throw StructuralError("layer '" + layer_id + "' is not a conv layer");
  if (indices.empty()) return g;

  const Dims4 d = conv->weight.dims();
  if (static_cast<Index>(indices.size()) >= d.out) {
    throw StructuralError("pruning would remove every filter of '" + layer_id + "'");
  }
  const auto shapes = infer_shapes(g);

  MatrixX<Scalar> w = remove_rows<Scalar>(conv->weight.as_matrix(), indices);
  Dims4 nd = d;
  nd.out = w.rows();
  conv->weight = Tensor4<Scalar>(nd, {w.data(), static_cast<std::size_t>(w.size())});
  conv->bias = remove_entries<Scalar>(conv->bias, indices);

  // Walk to the consumer of these channels.
  const Shape3 produced = shapes[*pos];
  Shape3 at = produced;
  for (std::size_t li = *pos + 1; li < g.layers.size(); ++li) {
    auto& layer = g.layers[li];
    switch (layer.kind()) {
      case LayerKind::ReLU:
        continue;
      case LayerKind::MaxPool:
        at = shapes[li];
        continue;
      case LayerKind::Conv: {
        auto& next = std::get<Conv<Scalar>>(layer.op);
        const Dims4 dn = next.weight.dims();
        const Index k = dn.kh * dn.kw;
        std::vector<Index> cols;
        cols.reserve(indices.size() * static_cast<std::size_t>(k));
        for (Index c : indices) {
          for (Index j = 0; j < k; ++j) cols.push_back(c * k + j);
        }
        MatrixX<Scalar> nw = remove_cols<Scalar>(next.weight.as_matrix(), cols);
        Dims4 nnd = dn;
        nnd.in = dn.in - static_cast<Index>(indices.size());
        next.weight = Tensor4<Scalar>(nnd, {nw.data(), static_cast<std::size_t>(nw.size())});
        validate(g);
        return g;
      }
      case LayerKind::Flatten: {
        const Index hw = at.h * at.w;
        for (std::size_t lj = li + 1; lj < g.layers.size(); ++lj) {
          auto& after = g.layers[lj];
          if (after.kind() == LayerKind::ReLU) continue;
          if (after.kind() != LayerKind::Dense) {
            throw StructuralError("flatten after '" + layer_id + "' does not feed a dense layer");
          }
          auto& dense = std::get<Dense<Scalar>>(after.op);
          std::vector<Index> cols;
          cols.reserve(indices.size() * static_cast<std::size_t>(hw));
          for (Index c : indices) {
            for (Index j = 0; j < hw; ++j) cols.push_back(c * hw + j);
          }
          dense.weight = remove_cols<Scalar>(dense.weight, cols);
          validate(g);
          return g;
        }
        throw StructuralError("flatten after '" + layer_id + "' has no consumer");
      }
      case LayerKind::Dense:
      case LayerKind::SoftmaxXent:
        throw StructuralError("layer '" + layer.name + "' consumes '" + layer_id +
                              "' without a flatten");
    }
  }
  validate(g);
  return g;
}

PruneStepResult prune_step(ModelGraph g, const PruneConfig& cfg, int epoch) {
  if (epoch < 1) throw RangeError("epoch must be >= 1");
  validate(cfg);
  PruneReport report;
  report.epoch = epoch;
  report.conv_params_before = conv_param_count(g);
  report.conv_weights_before = conv_param_count(g, false);

  const auto names = conv_layer_names(g);
  std::vector<std::int64_t> before;
  for (const auto& name : names) {
    before.push_back(conv_params(std::get<Conv<float>>(g.layers[*g.find(name)].op)));
  }

  if (epoch <= cfg.prune_epochs) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& conv = std::get<Conv<float>>(g.layers[*g.find(names[k])].op);
      LayerPruneEntry entry;
      entry.layer_id = names[k];
      entry.filters_before = conv.out_channels();
      const Index base = cfg.ratio_base == RatioBase::Current ? conv.out_channels() : conv.initial_out;

      if (prune_count(conv.out_channels(), base, cfg.ratio, cfg.min_filters) > 0) {
        const auto ssm = build_ssm(flatten_filters(conv.weight), cfg.metric);
        auto sel = select_prune_set(rank(ssm, cfg.method), conv.out_channels(), cfg.ratio,
                                    cfg.min_filters, cfg.pair_dedup, base);
        sel.layer_id = names[k];
        g = prune_conv_layer(std::move(g), sel);
        entry.pruned_indices = std::move(sel.indices);
      }
      entry.filters_after = entry.filters_before - static_cast<Index>(entry.pruned_indices.size());
      report.layers.push_back(std::move(entry));
    }
  } else {
    for (const auto& name : names) {
      const auto& conv = std::get<Conv<float>>(g.layers[*g.find(name)].op);
      report.layers.push_back({name, {}, conv.out_channels(), conv.out_channels(), 0, 0});
    }
  }

  for (std::size_t k = 0; k < names.size(); ++k) {
    report.layers[k].conv_params_before = before[k];
    report.layers[k].conv_params_after =
        conv_params(std::get<Conv<float>>(g.layers[*g.find(names[k])].op));
  }
  report.conv_params_after = conv_param_count(g);
  report.conv_weights_after = conv_param_count(g, false);
  report.reduction_percent = reduction_percent(report.conv_params_before, report.conv_params_after);
  return {std::move(g), std::move(report)};
}

template <typename Scalar>
BasicModelGraph<Scalar> apply_report(BasicModelGraph<Scalar> g, const PruneReport& report) {
  for (const auto& entry : report.layers) {
    g = prune_conv_layer<Scalar>(std::move(g), entry.layer_id, entry.pruned_indices);
  }
  return g;
}

template BasicModelGraph<float> prune_conv_layer(BasicModelGraph<float>, const std::string&,
                                                 std::span<const Index>);
template BasicModelGraph<double> prune_conv_layer(BasicModelGraph<double>, const std::string&,
                                                  std::span<const Index>);
template BasicModelGraph<float> apply_report(BasicModelGraph<float>, const PruneReport&);
template BasicModelGraph<double> apply_report(BasicModelGraph<double>, const PruneReport&);

}  // namespace ssmprune
