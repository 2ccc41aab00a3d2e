#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssmprune/tensor.hpp"

namespace ssmprune {

enum class MetricKind { L2, Cosine, Cityblock, KLDivergence };

/// Accepts "l2", "cosine", "cityblock", "kl" in any case.
MetricKind parse_metric(std::string_view name);
std::string to_string(MetricKind metric);

/// True for the metrics whose SSM is symmetric with a zero diagonal.
constexpr bool is_symmetric(MetricKind m) { return m != MetricKind::KLDivergence; }

/// Softmax with max-subtraction, evaluated in double.
std::vector<double> normalize_for_kl(std::span<const float> x);

/// Distance-style dissimilarity: small means similar. Accumulates in double.
///
/// Cosine is 1 - cos(x, y) in [0, 2]; a zero vector is at distance 1 from any
/// nonzero vector and 0 from another zero vector. KL is
/// KL(softmax(x) || softmax(y)) and is not symmetric.
double distance(MetricKind metric, std::span<const float> x, std::span<const float> y);

/// N x N matrix S(i, j) = distance(metric, x_i, x_j) over one layer's filters.
struct SimilarityMatrix {
  MetricKind metric = MetricKind::L2;
  Matrix values;

  Index n() const { return values.rows(); }
  float operator()(Index i, Index j) const { return values(i, j); }
};

/// Requires fs.n() >= 2. Symmetric metrics compute the upper triangle and
/// mirror it; KL evaluates every ordered pair.
SimilarityMatrix build_ssm(const FilterSet& fs, MetricKind metric);

}  // namespace ssmprune
