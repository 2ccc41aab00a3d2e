#include "ssmprune/model.hpp"

#include <cmath>
#include <random>

#include "ssmprune/error.hpp"

namespace ssmprune {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string shape_str(const Shape3& s) {
  return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

}  // namespace

template <typename Scalar>
std::optional<std::size_t> BasicModelGraph<Scalar>::find(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == name) return i;
  }
  return std::nullopt;
}

template <typename Scalar>
std::vector<Shape3> infer_shapes(const BasicModelGraph<Scalar>& g) {
  std::vector<Shape3> shapes;
  shapes.reserve(g.layers.size());
  if (g.input.size() < 1) throw StructuralError("input shape must be positive");
  Shape3 cur = g.input;
  bool flat = false;
  for (std::size_t li = 0; li < g.layers.size(); ++li) {
    const auto& layer = g.layers[li];
    const auto fail = [&](const std::string& msg) {
      throw StructuralError("layer '" + layer.name + "': " + msg);
    };
    if (li + 1 < g.layers.size() && layer.kind() == LayerKind::SoftmaxXent) {
      fail("softmax cross-entropy must be the last layer");
    }
    std::visit(
        overloaded{
            [&](const Conv<Scalar>& c) {
              if (flat) fail("conv after flatten");
              const auto& d = c.weight.dims();
              if (d.in != cur.c) {
                fail("expects " + std::to_string(d.in) + " input channels, predecessor gives " +
                     std::to_string(cur.c));
              }
              if (c.bias.size() != d.out) fail("bias length does not match out channels");
              if (c.stride < 1 || c.padding < 0) fail("invalid stride/padding");
              const Index h = (cur.h + 2 * c.padding - d.kh) / c.stride + 1;
              const Index w = (cur.w + 2 * c.padding - d.kw) / c.stride + 1;
              if (cur.h + 2 * c.padding < d.kh || cur.w + 2 * c.padding < d.kw) {
                fail("kernel larger than padded input " + shape_str(cur));
              }
              cur = {d.out, h, w};
            },
            [&](const ReLU&) {},
            [&](const MaxPool& p) {
              if (flat) fail("pool after flatten");
              if (p.window < 1 || p.stride < 1) fail("invalid pool window/stride");
              if (cur.h < p.window || cur.w < p.window) fail("pool window larger than input");
              cur = {cur.c, (cur.h - p.window) / p.stride + 1, (cur.w - p.window) / p.stride + 1};
            },
            [&](const Flatten&) {
              cur = {cur.size(), 1, 1};
              flat = true;
            },
            [&](const Dense<Scalar>& d) {
              if (!flat) fail("dense layer requires a flattened input");
              if (d.weight.cols() != cur.c) {
                fail("expects " + std::to_string(d.weight.cols()) + " inputs, predecessor gives " +
                     std::to_string(cur.c));
              }
              if (d.bias.size() != d.weight.rows()) fail("bias length does not match out features");
              cur = {d.weight.rows(), 1, 1};
            },
            [&](const SoftmaxXent&) {
              if (!flat) fail("softmax cross-entropy requires a flattened input");
            },
        },
        layer.op);
    shapes.push_back(cur);
  }
  return shapes;
}

template <typename Scalar>
Index num_classes(const BasicModelGraph<Scalar>& g) {
  const auto shapes = infer_shapes(g);
  return shapes.empty() ? g.input.size() : shapes.back().size();
}

template <typename Scalar>
std::vector<std::string> conv_layer_names(const BasicModelGraph<Scalar>& g) {
  std::vector<std::string> names;
  for (const auto& l : g.layers) {
    if (l.kind() == LayerKind::Conv) names.push_back(l.name);
  }
  return names;
}

template <typename To, typename From>
BasicModelGraph<To> cast_graph(const BasicModelGraph<From>& g) {
  BasicModelGraph<To> out;
  out.input = g.input;
  out.layers.reserve(g.layers.size());
  for (const auto& l : g.layers) {
    LayerOp<To> op = std::visit(
        overloaded{
            [](const Conv<From>& c) -> LayerOp<To> {
              return Conv<To>{c.weight.template cast<To>(), c.bias.template cast<To>(), c.stride,
                              c.padding, c.initial_out};
            },
            [](const Dense<From>& d) -> LayerOp<To> {
              return Dense<To>{d.weight.template cast<To>(), d.bias.template cast<To>()};
            },
            [](const ReLU& r) -> LayerOp<To> { return r; },
            [](const MaxPool& p) -> LayerOp<To> { return p; },
            [](const Flatten& f) -> LayerOp<To> { return f; },
            [](const SoftmaxXent& s) -> LayerOp<To> { return s; },
        },
        l.op);
    out.layers.push_back({l.name, std::move(op)});
  }
  return out;
}

template <typename Scalar>
BasicModelGraph<Scalar> zeros_like(const BasicModelGraph<Scalar>& g) {
  BasicModelGraph<Scalar> z = g;
  for (auto& l : z.layers) {
    if (auto* c = std::get_if<Conv<Scalar>>(&l.op)) {
      c->weight.as_matrix().setZero();
      c->bias.setZero();
    } else if (auto* d = std::get_if<Dense<Scalar>>(&l.op)) {
      d->weight.setZero();
      d->bias.setZero();
    }
  }
  return z;
}

template <typename Scalar>
std::int64_t conv_params(const Conv<Scalar>& c, bool with_bias) {
  const auto& d = c.weight.dims();
  return static_cast<std::int64_t>(d.size()) + (with_bias ? static_cast<std::int64_t>(d.out) : 0);
}

template <typename Scalar>
std::int64_t conv_param_count(const BasicModelGraph<Scalar>& g, bool with_bias) {
  std::int64_t total = 0;
  for (const auto& l : g.layers) {
    if (const auto* c = std::get_if<Conv<Scalar>>(&l.op)) total += conv_params(*c, with_bias);
  }
  return total;
}

template <typename Scalar>
bool operator==(const BasicModelGraph<Scalar>& a, const BasicModelGraph<Scalar>& b) {
  if (!(a.input == b.input) || a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& la = a.layers[i];
    const auto& lb = b.layers[i];
    if (la.name != lb.name || la.op.index() != lb.op.index()) return false;
    if (const auto* ca = std::get_if<Conv<Scalar>>(&la.op)) {
      const auto& cb = std::get<Conv<Scalar>>(lb.op);
      if (!(ca->weight == cb.weight) || ca->bias != cb.bias || ca->stride != cb.stride ||
          ca->padding != cb.padding || ca->initial_out != cb.initial_out) {
        return false;
      }
    } else if (const auto* da = std::get_if<Dense<Scalar>>(&la.op)) {
      const auto& db = std::get<Dense<Scalar>>(lb.op);
      if (da->weight != db.weight || da->bias != db.bias) return false;
    } else if (const auto* pa = std::get_if<MaxPool>(&la.op)) {
      const auto& pb = std::get<MaxPool>(lb.op);
      if (pa->window != pb.window || pa->stride != pb.stride) return false;
    }
  }
  return true;
}

void he_initialize(ModelGraph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : g.layers) {
    if (auto* c = std::get_if<Conv<float>>(&l.op)) {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(c->weight.dims().filter_size())));
      auto& w = c->weight.as_matrix();
      for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<float>(dist(rng));
      c->bias.setZero();
    } else if (auto* d = std::get_if<Dense<float>>(&l.op)) {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(d->weight.cols())));
      for (Index i = 0; i < d->weight.size(); ++i) d->weight.data()[i] = static_cast<float>(dist(rng));
      d->bias.setZero();
    }
  }
}

ModelGraph vgg_mini(const VggMiniOptions& opts, std::uint64_t seed) {
  if (opts.conv_channels.empty()) throw StructuralError("vgg_mini needs at least one conv layer");
  ModelGraph g;
  g.input = opts.input;
  Index in_ch = opts.input.c;
  Index h = opts.input.h, w = opts.input.w;
  int pool_id = 0;
  for (std::size_t i = 0; i < opts.conv_channels.size(); ++i) {
    const Index out = opts.conv_channels[i];
    const auto n = std::to_string(i + 1);
    Conv<float> conv{Tensor4<float>({out, in_ch, 3, 3}), Vector::Zero(out), 1, 1, out};
    g.layers.push_back({"conv" + n, std::move(conv)});
    g.layers.push_back({"relu" + n, ReLU{}});
    in_ch = out;
    if (i % 2 == 1 || i + 1 == opts.conv_channels.size()) {
      g.layers.push_back({"pool" + std::to_string(++pool_id), MaxPool{2, 2}});
      h /= 2;
      w /= 2;
    }
  }
  g.layers.push_back({"flatten", Flatten{}});
  const Index flat = in_ch * h * w;
  g.layers.push_back({"fc1", Dense<float>{Matrix::Zero(opts.dense_units, flat), Vector::Zero(opts.dense_units)}});
  g.layers.push_back({"relu_fc1", ReLU{}});
  g.layers.push_back({"fc2", Dense<float>{Matrix::Zero(opts.classes, opts.dense_units), Vector::Zero(opts.classes)}});
  g.layers.push_back({"loss", SoftmaxXent{}});
  validate(g);
  he_initialize(g, seed);
  return g;
}

#define SSMPRUNE_INSTANTIATE(S)                                                    \
  template struct BasicModelGraph<S>;                                              \
  template std::vector<Shape3> infer_shapes(const BasicModelGraph<S>&);            \
  template Index num_classes(const BasicModelGraph<S>&);                           \
  template std::vector<std::string> conv_layer_names(const BasicModelGraph<S>&);   \
  template BasicModelGraph<S> zeros_like(const BasicModelGraph<S>&);               \
  template std::int64_t conv_params(const Conv<S>&, bool);                         \
  template std::int64_t conv_param_count(const BasicModelGraph<S>&, bool);         \
  template bool operator==(const BasicModelGraph<S>&, const BasicModelGraph<S>&);

SSMPRUNE_INSTANTIATE(float)
SSMPRUNE_INSTANTIATE(double)
#undef SSMPRUNE_INSTANTIATE

template BasicModelGraph<double> cast_graph(const BasicModelGraph<float>&);
template BasicModelGraph<float> cast_graph(const BasicModelGraph<double>&);
template BasicModelGraph<float> cast_graph(const BasicModelGraph<float>&);

}  // namespace ssmprune
