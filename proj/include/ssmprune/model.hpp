#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ssmprune/tensor.hpp"

namespace ssmprune {

/// Channel-major activation shape of a single example.
struct Shape3 {
  Index c = 1;
  Index h = 1;
  Index w = 1;

  Index size() const { return c * h * w; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

template <typename Scalar>
struct Conv {
  Tensor4<Scalar> weight;
  VectorX<Scalar> bias;
  Index stride = 1;
  Index padding = 0;
  /// Filter count at construction; the base for ratio_base = original.
  Index initial_out = 0;

  Index out_channels() const { return weight.dims().out; }
  Index in_channels() const { return weight.dims().in; }
};

struct ReLU {};

struct MaxPool {
  Index window = 2;
  Index stride = 2;
};

/// Channel-major flatten: index c*H*W + y*W + x.
struct Flatten {};

template <typename Scalar>
struct Dense {
  MatrixX<Scalar> weight;  // out x in
  VectorX<Scalar> bias;
};

/// Terminal layer; forward passes logits through, the loss is mean
/// softmax cross-entropy.
struct SoftmaxXent {};

template <typename Scalar>
using LayerOp = std::variant<Conv<Scalar>, ReLU, MaxPool, Flatten, Dense<Scalar>, SoftmaxXent>;

enum class LayerKind : std::uint8_t { Conv = 0, ReLU = 1, MaxPool = 2, Flatten = 3, Dense = 4, SoftmaxXent = 5 };

template <typename Scalar>
struct Layer {
  std::string name;
  LayerOp<Scalar> op;

  LayerKind kind() const { return static_cast<LayerKind>(op.index()); }
};

/// A linear chain of layers applied to inputs of shape `input`.
template <typename Scalar>
struct BasicModelGraph {
  Shape3 input;
  std::vector<Layer<Scalar>> layers;

  /// Index of the named layer, or nullopt.
  std::optional<std::size_t> find(const std::string& name) const;
};

using ModelGraph = BasicModelGraph<float>;

/// Output shape of every layer. Throws StructuralError when the chain is
/// not shape-consistent.
template <typename Scalar>
std::vector<Shape3> infer_shapes(const BasicModelGraph<Scalar>& g);

template <typename Scalar>
void validate(const BasicModelGraph<Scalar>& g) {
  (void)infer_shapes(g);
}

template <typename Scalar>
Index num_classes(const BasicModelGraph<Scalar>& g);

template <typename Scalar>
std::vector<std::string> conv_layer_names(const BasicModelGraph<Scalar>& g);

template <typename To, typename From>
BasicModelGraph<To> cast_graph(const BasicModelGraph<From>& g);

/// Same topology, every parameter zero.
template <typename Scalar>
BasicModelGraph<Scalar> zeros_like(const BasicModelGraph<Scalar>& g);

/// Weights-plus-bias parameter count of one conv layer.
template <typename Scalar>
std::int64_t conv_params(const Conv<Scalar>& c, bool with_bias = true);

/// Sum over all conv layers.
template <typename Scalar>
std::int64_t conv_param_count(const BasicModelGraph<Scalar>& g, bool with_bias = true);

template <typename Scalar>
bool operator==(const BasicModelGraph<Scalar>& a, const BasicModelGraph<Scalar>& b);

struct VggMiniOptions {
  Shape3 input{3, 32, 32};
  /// Convolutions are grouped in pairs, each pair followed by a 2x2 max-pool.
  std::vector<Index> conv_channels{32, 32, 64, 64};
  Index dense_units = 256;
  Index classes = 10;
};

/// 3x3/pad-1 conv stack, ReLUs, pools, then Dense-ReLU-Dense-SoftmaxXent.
/// Weights are He-initialized from `seed`.
ModelGraph vgg_mini(const VggMiniOptions& opts, std::uint64_t seed);

/// He (fan-in) normal initialization of all conv/dense weights; zero biases.
void he_initialize(ModelGraph& g, std::uint64_t seed);

}  // namespace ssmprune
