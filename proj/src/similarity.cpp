#include "ssmprune/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "ssmprune/error.hpp"

namespace ssmprune {

MetricKind parse_metric(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "l2") return MetricKind::L2;
  if (lower == "cosine") return MetricKind::Cosine;
  if (lower == "cityblock") return MetricKind::Cityblock;
  if (lower == "kl") return MetricKind::KLDivergence;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected l2, cosine, cityblock, kl)");
}

std::string to_string(MetricKind metric) {
  switch (metric) {
    case MetricKind::L2:
      return "l2";
    case MetricKind::Cosine:
      return "cosine";
    case MetricKind::Cityblock:
      return "cityblock";
    case MetricKind::KLDivergence:
      return "kl";
  }
  return "?";
}

namespace {

double log_sum_exp(std::span<const float> x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (float v : x) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : x) sum += std::exp(static_cast<double>(v) - mx);
  return mx + std::log(sum);
}

double kl_divergence(std::span<const float> x, std::span<const float> y) {
  const double lse_x = log_sum_exp(x);
  const double lse_y = log_sum_exp(y);
  double kl = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double log_p = static_cast<double>(x[i]) - lse_x;
    const double log_q = static_cast<double>(y[i]) - lse_y;
    kl += std::exp(log_p) * (log_p - log_q);
  }
  // Gibbs' inequality; only rounding can push it below zero.
  return std::max(kl, 0.0);
}

double cosine_distance(std::span<const float> x, std::span<const float> y) {
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i], b = y[i];
    dot += a * b;
    xx += a * a;
    yy += b * b;
  }
  if (xx == 0.0 && yy == 0.0) return 0.0;
  if (xx == 0.0 || yy == 0.0) return 1.0;
  // sqrt(xx * yy) rather than sqrt(xx) * sqrt(yy): exact for x == y.
  const double cos = dot / std::sqrt(xx * yy);
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

}  // namespace

std::vector<double> normalize_for_kl(std::span<const float> x) {
  if (x.empty()) throw ShapeError("normalize_for_kl: empty vector");
  double mx = -std::numeric_limits<double>::infinity();
  for (float v : x) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(static_cast<double>(x[i]) - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double distance(MetricKind metric, std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw ShapeError("distance: length mismatch " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  if (x.empty()) throw ShapeError("distance: empty vectors");

  switch (metric) {
    case MetricKind::L2: {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        acc += d * d;
      }
      return std::sqrt(acc);
    }
    case MetricKind::Cityblock: {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        acc += std::abs(static_cast<double>(x[i]) - static_cast<double>(y[i]));
      }
      return acc;
    }
    case MetricKind::Cosine:
      return cosine_distance(x, y);
    case MetricKind::KLDivergence:
      return kl_divergence(x, y);
  }
  return 0.0;
}

SimilarityMatrix build_ssm(const FilterSet& fs, MetricKind metric) {
  const Index n = fs.n();
  if (n < 2) {
    throw TooFewFiltersError("build_ssm needs at least 2 filters, got " + std::to_string(n));
  }
  const auto row = [&](Index i) {
    return std::span<const float>(fs.vectors.row(i).data(), static_cast<std::size_t>(fs.dim()));
  };

  SimilarityMatrix s{metric, Matrix::Zero(n, n)};
  if (is_symmetric(metric)) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const auto v = static_cast<float>(distance(metric, row(i), row(j)));
        s.values(i, j) = v;
        s.values(j, i) = v;
      }
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        s.values(i, j) = static_cast<float>(distance(metric, row(i), row(j)));
      }
    }
  }
  return s;
}

}  // namespace ssmprune
