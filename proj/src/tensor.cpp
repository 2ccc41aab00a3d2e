#include "ssmprune/tensor.hpp"

#include <algorithm>
#include <string>

#include "ssmprune/error.hpp"

namespace ssmprune {

namespace {

void check_dims(const Dims4& d) {
  if (d.out < 1 || d.in < 1 || d.kh < 1 || d.kw < 1) {
    throw ShapeError("tensor dims must all be >= 1, got (" + std::to_string(d.out) + "," +
                     std::to_string(d.in) + "," + std::to_string(d.kh) + "," +
                     std::to_string(d.kw) + ")");
  }
}

void check_index_set(std::span<const Index> idx, Index bound, const char* what) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= bound) {
      throw RangeError(std::string(what) + " index " + std::to_string(idx[k]) +
                       " out of range [0," + std::to_string(bound) + ")");
    }
    if (k > 0 && idx[k] <= idx[k - 1]) {
      throw RangeError(std::string(what) + " indices must be strictly increasing");
    }
  }
}

// Complement of a sorted index set within [0, bound).
std::vector<Index> keep_list(std::span<const Index> drop, Index bound) {
  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(bound) - drop.size());
  std::size_t d = 0;
  for (Index i = 0; i < bound; ++i) {
    if (d < drop.size() && drop[d] == i) {
      ++d;
    } else {
      keep.push_back(i);
    }
  }
  return keep;
}

}  // namespace

template <typename Scalar>
Tensor4<Scalar>::Tensor4(const Dims4& dims) : dims_(dims) {
  check_dims(dims);
  rows_ = MatrixX<Scalar>::Zero(dims.out, dims.filter_size());
}

template <typename Scalar>
Tensor4<Scalar>::Tensor4(const Dims4& dims, std::span<const Scalar> data) : Tensor4(dims) {
  if (static_cast<Index>(data.size()) != dims.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " != " +
                     std::to_string(dims.size()));
  }
  std::copy(data.begin(), data.end(), rows_.data());
}

template class Tensor4<float>;
template class Tensor4<double>;

FilterSet flatten_filters(const Tensor4<float>& w) { return FilterSet{w.as_matrix()}; }

Tensor4<float> unflatten_filters(const FilterSet& fs, const Dims4& dims) {
  if (fs.n() != dims.out || fs.dim() != dims.filter_size()) {
    throw ShapeError("filter set " + std::to_string(fs.n()) + "x" + std::to_string(fs.dim()) +
                     " does not match dims (" + std::to_string(dims.out) + "," +
                     std::to_string(dims.in) + "," + std::to_string(dims.kh) + "," +
                     std::to_string(dims.kw) + ")");
  }
  Tensor4<float> t(dims);
  t.as_matrix() = fs.vectors;
  return t;
}

template <typename Scalar>
MatrixX<Scalar> remove_rows(const MatrixX<Scalar>& m, std::span<const Index> idx) {
  check_index_set(idx, m.rows(), "row");
  const auto keep = keep_list(idx, m.rows());
  return m(keep, Eigen::all);
}

template <typename Scalar>
MatrixX<Scalar> remove_cols(const MatrixX<Scalar>& m, std::span<const Index> idx) {
  check_index_set(idx, m.cols(), "column");
  const auto keep = keep_list(idx, m.cols());
  return m(Eigen::all, keep);
}

template <typename Scalar>
VectorX<Scalar> remove_entries(const VectorX<Scalar>& v, std::span<const Index> idx) {
  check_index_set(idx, v.size(), "entry");
  const auto keep = keep_list(idx, v.size());
  return v(keep);
}

template MatrixX<float> remove_rows(const MatrixX<float>&, std::span<const Index>);
template MatrixX<double> remove_rows(const MatrixX<double>&, std::span<const Index>);
template MatrixX<float> remove_cols(const MatrixX<float>&, std::span<const Index>);
template MatrixX<double> remove_cols(const MatrixX<double>&, std::span<const Index>);
template VectorX<float> remove_entries(const VectorX<float>&, std::span<const Index>);
template VectorX<double> remove_entries(const VectorX<double>&, std::span<const Index>);

}  // namespace ssmprune
