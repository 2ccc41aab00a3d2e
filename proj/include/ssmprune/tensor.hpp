#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace ssmprune {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<float>;
using Vector = VectorX<float>;

using Index = Eigen::Index;

struct Dims4 {
  Index out = 1;
  Index in = 1;
  Index kh = 1;
  Index kw = 1;

  Index filter_size() const { return in * kh * kw; }
  Index size() const { return out * filter_size(); }
  friend bool operator==(const Dims4&, const Dims4&) = default;
};

/// Dense (out, in, kh, kw) weight tensor of a convolution, row-major.
///
/// Storage is an out x (in*kh*kw) row-major matrix, so the flat data is the
/// canonical row-major layout and each row is one filter.
template <typename Scalar>
class Tensor4 {
 public:
  Tensor4() : Tensor4(Dims4{}) {}
  explicit Tensor4(const Dims4& dims);
  Tensor4(const Dims4& dims, std::span<const Scalar> data);

  const Dims4& dims() const { return dims_; }
  Index size() const { return dims_.size(); }

  Scalar& operator()(Index o, Index i, Index y, Index x) {
    return rows_(o, (i * dims_.kh + y) * dims_.kw + x);
  }
  Scalar operator()(Index o, Index i, Index y, Index x) const {
    return rows_(o, (i * dims_.kh + y) * dims_.kw + x);
  }

  Scalar* data() { return rows_.data(); }
  const Scalar* data() const { return rows_.data(); }
  std::span<const Scalar> flat() const { return {rows_.data(), static_cast<std::size_t>(rows_.size())}; }

  /// out x (in*kh*kw) view, one filter per row.
  MatrixX<Scalar>& as_matrix() { return rows_; }
  const MatrixX<Scalar>& as_matrix() const { return rows_; }

  template <typename Other>
  Tensor4<Other> cast() const {
    Tensor4<Other> t(dims_);
    t.as_matrix() = rows_.template cast<Other>();
    return t;
  }

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.dims_ == b.dims_ && a.rows_ == b.rows_;
  }

 private:
  Dims4 dims_;
  MatrixX<Scalar> rows_;
};

/// The ordered filters of one layer, flattened to vectors (one per row).
struct FilterSet {
  Matrix vectors;

  Index n() const { return vectors.rows(); }
  Index dim() const { return vectors.cols(); }
};

FilterSet flatten_filters(const Tensor4<float>& w);
Tensor4<float> unflatten_filters(const FilterSet& fs, const Dims4& dims);

/// Deletes the listed rows (strictly increasing, each < rows()).
template <typename Scalar>
MatrixX<Scalar> remove_rows(const MatrixX<Scalar>& m, std::span<const Index> idx);

/// Deletes columns in `idx` (strictly increasing, each < cols()).
template <typename Scalar>
MatrixX<Scalar> remove_cols(const MatrixX<Scalar>& m, std::span<const Index> idx);

template <typename Scalar>
VectorX<Scalar> remove_entries(const VectorX<Scalar>& v, std::span<const Index> idx);

}  // namespace ssmprune
