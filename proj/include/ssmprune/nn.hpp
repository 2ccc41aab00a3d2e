#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssmprune/model.hpp"

namespace ssmprune {

/// Per-layer state kept by forward() for backward().
template <typename Scalar>
struct ForwardCache {
  /// Parameter shapes of the graph that produced this cache.
  std::vector<Index> signature;
  /// Input activation of each layer, one example per row.
  std::vector<MatrixX<Scalar>> inputs;
  /// Flat argmax positions for each max-pool output element.
  std::vector<std::vector<std::int32_t>> argmax;
  MatrixX<Scalar> logits;
};

template <typename Scalar>
using Gradients = BasicModelGraph<Scalar>;

/// Fingerprint of a graph's structure (input shape and every parameter shape).
template <typename Scalar>
std::vector<Index> structure_signature(const BasicModelGraph<Scalar>& g);

/// Runs the chain on `images` (B x C*H*W, channel-major rows) and returns
/// B x num_classes logits. Fills `cache` when non-null.
template <typename Scalar>
MatrixX<Scalar> forward(const BasicModelGraph<Scalar>& g, const MatrixX<Scalar>& images,
                        ForwardCache<Scalar>* cache = nullptr);

/// Mean softmax cross-entropy, accumulated in double. Writes
/// d(loss)/d(logits) when `dlogits` is non-null.
template <typename Scalar>
double softmax_cross_entropy(const MatrixX<Scalar>& logits, std::span<const std::int32_t> labels,
                             MatrixX<Scalar>* dlogits = nullptr);

/// Gradients of the mean cross-entropy with respect to every conv/dense
/// weight and bias, shaped like `g`. Throws StaleCacheError if `cache` came
/// from a differently shaped graph.
template <typename Scalar>
Gradients<Scalar> backward(const BasicModelGraph<Scalar>& g, const ForwardCache<Scalar>& cache,
                           std::span<const std::int32_t> labels, double* loss = nullptr);

/// Unrolls one C x H x W image into a (C*kh*kw) x (Ho*Wo) patch matrix.
template <typename Scalar>
void im2col(const Scalar* image, const Shape3& in, Index kh, Index kw, Index stride, Index pad,
            MatrixX<Scalar>& cols);

/// Adjoint of im2col: scatters-adds patch gradients back onto the image.
template <typename Scalar>
void col2im(const MatrixX<Scalar>& cols, const Shape3& in, Index kh, Index kw, Index stride,
            Index pad, Scalar* image);

/// Visits every trainable tensor of `g` as a flat vector, weights before
/// biases, in layer order. `fn(Eigen::Map<VectorX<Scalar>>, bool is_bias)`.
template <typename Scalar, typename Fn>
void for_each_parameter(BasicModelGraph<Scalar>& g, Fn&& fn) {
  for (auto& l : g.layers) {
    if (auto* c = std::get_if<Conv<Scalar>>(&l.op)) {
      auto& w = c->weight.as_matrix();
      fn(Eigen::Map<VectorX<Scalar>>(w.data(), w.size()), false);
      fn(Eigen::Map<VectorX<Scalar>>(c->bias.data(), c->bias.size()), true);
    } else if (auto* d = std::get_if<Dense<Scalar>>(&l.op)) {
      fn(Eigen::Map<VectorX<Scalar>>(d->weight.data(), d->weight.size()), false);
      fn(Eigen::Map<VectorX<Scalar>>(d->bias.data(), d->bias.size()), true);
    }
  }
}

}  // namespace ssmprune
