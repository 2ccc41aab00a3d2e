#include "ssmprune/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssmprune/error.hpp"

namespace ssmprune {

template <typename Scalar>
std::vector<Index> structure_signature(const BasicModelGraph<Scalar>& g) {
  std::vector<Index> sig{g.input.c, g.input.h, g.input.w};
  for (const auto& l : g.layers) {
    sig.push_back(static_cast<Index>(l.kind()));
    if (const auto* c = std::get_if<Conv<Scalar>>(&l.op)) {
      const auto& d = c->weight.dims();
      sig.insert(sig.end(), {d.out, d.in, d.kh, d.kw, c->stride, c->padding});
    } else if (const auto* d = std::get_if<Dense<Scalar>>(&l.op)) {
      sig.insert(sig.end(), {d->weight.rows(), d->weight.cols()});
    } else if (const auto* p = std::get_if<MaxPool>(&l.op)) {
      sig.insert(sig.end(), {p->window, p->stride});
    }
  }
  return sig;
}

template <typename Scalar>
void im2col(const Scalar* image, const Shape3& in, Index kh, Index kw, Index stride, Index pad,
            MatrixX<Scalar>& cols) {
  const Index ho = (in.h + 2 * pad - kh) / stride + 1;
  const Index wo = (in.w + 2 * pad - kw) / stride + 1;
  cols.resize(in.c * kh * kw, ho * wo);
  for (Index c = 0; c < in.c; ++c) {
    const Scalar* plane = image + c * in.h * in.w;
    for (Index ky = 0; ky < kh; ++ky) {
      for (Index kx = 0; kx < kw; ++kx) {
        Scalar* dst = cols.row((c * kh + ky) * kw + kx).data();
        for (Index oy = 0; oy < ho; ++oy) {
          const Index y = oy * stride - pad + ky;
          if (y < 0 || y >= in.h) {
            std::fill(dst + oy * wo, dst + (oy + 1) * wo, Scalar(0));
            continue;
          }
          for (Index ox = 0; ox < wo; ++ox) {
            const Index x = ox * stride - pad + kx;
            dst[oy * wo + ox] = (x < 0 || x >= in.w) ? Scalar(0) : plane[y * in.w + x];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im(const MatrixX<Scalar>& cols, const Shape3& in, Index kh, Index kw, Index stride,
            Index pad, Scalar* image) {
  const Index ho = (in.h + 2 * pad - kh) / stride + 1;
  const Index wo = (in.w + 2 * pad - kw) / stride + 1;
  for (Index c = 0; c < in.c; ++c) {
    Scalar* plane = image + c * in.h * in.w;
    for (Index ky = 0; ky < kh; ++ky) {
      for (Index kx = 0; kx < kw; ++kx) {
        const Scalar* src = cols.row((c * kh + ky) * kw + kx).data();
        for (Index oy = 0; oy < ho; ++oy) {
          const Index y = oy * stride - pad + ky;
          if (y < 0 || y >= in.h) continue;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index x = ox * stride - pad + kx;
            if (x >= 0 && x < in.w) plane[y * in.w + x] += src[oy * wo + ox];
          }
        }
      }
    }
  }
}

template <typename Scalar>
MatrixX<Scalar> forward(const BasicModelGraph<Scalar>& g, const MatrixX<Scalar>& images,
                        ForwardCache<Scalar>* cache) {
  const auto shapes = infer_shapes(g);
  if (images.cols() != g.input.size()) {
    throw ShapeError("forward: images have " + std::to_string(images.cols()) +
                     " values per example, graph expects " + std::to_string(g.input.size()));
  }
  const Index batch = images.rows();
  if (cache) {
    cache->signature = structure_signature(g);
    cache->inputs.assign(g.layers.size(), {});
    cache->argmax.assign(g.layers.size(), {});
  }

  MatrixX<Scalar> x = images;
  Shape3 in = g.input;
  MatrixX<Scalar> cols;
  for (std::size_t li = 0; li < g.layers.size(); ++li) {
    const auto& layer = g.layers[li];
    const Shape3 out = shapes[li];
    MatrixX<Scalar> y;
    switch (layer.kind()) {
      case LayerKind::Conv: {
        const auto& conv = std::get<Conv<Scalar>>(layer.op);
        const auto& d = conv.weight.dims();
        y.resize(batch, out.size());
        for (Index b = 0; b < batch; ++b) {
          im2col(x.row(b).data(), in, d.kh, d.kw, conv.stride, conv.padding, cols);
          Eigen::Map<MatrixX<Scalar>> yb(y.row(b).data(), out.c, out.h * out.w);
          yb.noalias() = conv.weight.as_matrix() * cols;
          yb.colwise() += conv.bias;
        }
        break;
      }
      case LayerKind::ReLU:
        y = x.cwiseMax(Scalar(0));
        break;
      case LayerKind::MaxPool: {
        const auto& pool = std::get<MaxPool>(layer.op);
        y.resize(batch, out.size());
        std::vector<std::int32_t>* arg = cache ? &cache->argmax[li] : nullptr;
        if (arg) arg->resize(static_cast<std::size_t>(batch * out.size()));
        for (Index b = 0; b < batch; ++b) {
          const Scalar* src = x.row(b).data();
          Scalar* dst = y.row(b).data();
          for (Index c = 0; c < out.c; ++c) {
            for (Index oy = 0; oy < out.h; ++oy) {
              for (Index ox = 0; ox < out.w; ++ox) {
                Scalar best = -std::numeric_limits<Scalar>::infinity();
                Index best_at = -1;
                for (Index ky = 0; ky < pool.window; ++ky) {
                  for (Index kx = 0; kx < pool.window; ++kx) {
                    const Index pos = (c * in.h + oy * pool.stride + ky) * in.w + ox * pool.stride + kx;
                    if (src[pos] > best || best_at < 0) {
                      best = src[pos];
                      best_at = pos;
                    }
                  }
                }
                const Index o = (c * out.h + oy) * out.w + ox;
                dst[o] = best;
                if (arg) (*arg)[static_cast<std::size_t>(b * out.size() + o)] = static_cast<std::int32_t>(best_at);
              }
            }
          }
        }
        break;
      }
      case LayerKind::Flatten:
      case LayerKind::SoftmaxXent:
        y = x;
        break;
      case LayerKind::Dense: {
        const auto& dense = std::get<Dense<Scalar>>(layer.op);
        y.noalias() = x * dense.weight.transpose();
        y.rowwise() += dense.bias.transpose();
        break;
      }
    }
    if (cache) cache->inputs[li] = std::move(x);
    x = std::move(y);
    in = out;
  }
  if (cache) cache->logits = x;
  return x;
}

template <typename Scalar>
double softmax_cross_entropy(const MatrixX<Scalar>& logits, std::span<const std::int32_t> labels,
                             MatrixX<Scalar>* dlogits) {
  const Index batch = logits.rows();
  const Index classes = logits.cols();
  if (static_cast<Index>(labels.size()) != batch) {
    throw ShapeError("labels: " + std::to_string(labels.size()) + " for batch of " + std::to_string(batch));
  }
  if (dlogits) dlogits->resize(batch, classes);
  double total = 0.0;
  std::vector<double> p(static_cast<std::size_t>(classes));
  for (Index b = 0; b < batch; ++b) {
    const std::int32_t y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= classes) throw RangeError("label " + std::to_string(y) + " out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < classes; ++k) mx = std::max(mx, static_cast<double>(logits(b, k)));
    double sum = 0.0;
    for (Index k = 0; k < classes; ++k) {
      p[k] = std::exp(static_cast<double>(logits(b, k)) - mx);
      sum += p[k];
    }
    total += std::log(sum) - (static_cast<double>(logits(b, y)) - mx);
    if (dlogits) {
      for (Index k = 0; k < classes; ++k) {
        const double grad = p[k] / sum - (k == y ? 1.0 : 0.0);
        (*dlogits)(b, k) = static_cast<Scalar>(grad / static_cast<double>(batch));
      }
    }
  }
  return total / static_cast<double>(batch);
}

template <typename Scalar>
Gradients<Scalar> backward(const BasicModelGraph<Scalar>& g, const ForwardCache<Scalar>& cache,
                           std::span<const std::int32_t> labels, double* loss) {
  if (cache.signature != structure_signature(g) || cache.inputs.size() != g.layers.size()) {
    throw StaleCacheError("backward: cache was produced by a different graph structure");
  }
  const auto shapes = infer_shapes(g);
  Gradients<Scalar> grads = zeros_like(g);
  const Index batch = cache.logits.rows();

  MatrixX<Scalar> dy;
  const double l = softmax_cross_entropy(cache.logits, labels, &dy);
  if (loss) *loss = l;

  MatrixX<Scalar> cols;
  MatrixX<Scalar> dcols;
  for (std::size_t li = g.layers.size(); li-- > 0;) {
    const auto& layer = g.layers[li];
    const MatrixX<Scalar>& x = cache.inputs[li];
    const Shape3 in = li == 0 ? g.input : shapes[li - 1];
    const Shape3 out = shapes[li];
    const bool need_dx = li > 0;
    MatrixX<Scalar> dx;
    switch (layer.kind()) {
      case LayerKind::Conv: {
        const auto& conv = std::get<Conv<Scalar>>(layer.op);
        auto& gconv = std::get<Conv<Scalar>>(grads.layers[li].op);
        const auto& d = conv.weight.dims();
        if (need_dx) dx = MatrixX<Scalar>::Zero(batch, in.size());
        for (Index b = 0; b < batch; ++b) {
          im2col(x.row(b).data(), in, d.kh, d.kw, conv.stride, conv.padding, cols);
          Eigen::Map<const MatrixX<Scalar>> dyb(dy.row(b).data(), out.c, out.h * out.w);
          gconv.weight.as_matrix().noalias() += dyb * cols.transpose();
          gconv.bias += dyb.rowwise().sum();
          if (need_dx) {
            dcols.noalias() = conv.weight.as_matrix().transpose() * dyb;
            col2im(dcols, in, d.kh, d.kw, conv.stride, conv.padding, dx.row(b).data());
          }
        }
        break;
      }
      case LayerKind::ReLU:
        dx = (x.array() > Scalar(0)).select(dy, Scalar(0));
        break;
      case LayerKind::MaxPool: {
        const auto& arg = cache.argmax[li];
        dx = MatrixX<Scalar>::Zero(batch, in.size());
        for (Index b = 0; b < batch; ++b) {
          for (Index o = 0; o < out.size(); ++o) {
            dx(b, arg[static_cast<std::size_t>(b * out.size() + o)]) += dy(b, o);
          }
        }
        break;
      }
      case LayerKind::Flatten:
      case LayerKind::SoftmaxXent:
        dx = std::move(dy);
        break;
      case LayerKind::Dense: {
        const auto& dense = std::get<Dense<Scalar>>(layer.op);
        auto& gdense = std::get<Dense<Scalar>>(grads.layers[li].op);
        gdense.weight.noalias() = dy.transpose() * x;
        gdense.bias = dy.colwise().sum().transpose();
        if (need_dx) dx.noalias() = dy * dense.weight;
        break;
      }
    }
    dy = std::move(dx);
  }
  return grads;
}

#define SSMPRUNE_INSTANTIATE(S)                                                                     \
  template std::vector<Index> structure_signature(const BasicModelGraph<S>&);                      \
  template void im2col(const S*, const Shape3&, Index, Index, Index, Index, MatrixX<S>&);          \
  template void col2im(const MatrixX<S>&, const Shape3&, Index, Index, Index, Index, S*);          \
  template MatrixX<S> forward(const BasicModelGraph<S>&, const MatrixX<S>&, ForwardCache<S>*);     \
  template double softmax_cross_entropy(const MatrixX<S>&, std::span<const std::int32_t>,          \
                                        MatrixX<S>*);                                              \
  template Gradients<S> backward(const BasicModelGraph<S>&, const ForwardCache<S>&,                \
                                 std::span<const std::int32_t>, double*);

SSMPRUNE_INSTANTIATE(float)
SSMPRUNE_INSTANTIATE(double)
#undef SSMPRUNE_INSTANTIATE

}  // namespace ssmprune
