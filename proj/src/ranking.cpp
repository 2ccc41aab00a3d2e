#include "ssmprune/ranking.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssmprune/error.hpp"

namespace ssmprune {

RankMethod parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "greedy") return RankMethod::Greedy;
  if (lower == "area") return RankMethod::Area;
  throw ConfigError("unknown ranking method '" + std::string(name) + "' (expected greedy, area)");
}

std::string to_string(RankMethod method) {
  return method == RankMethod::Greedy ? "greedy" : "area";
}

std::vector<Index> stable_argsort(std::span<const double> scores) {
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] < scores[b]; });
  return order;
}

double trapezoidal_area(std::span<const float> values) {
  double area = 0.0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    area += 0.5 * (static_cast<double>(values[j - 1]) + static_cast<double>(values[j]));
  }
  return area;
}

namespace {

void require_rankable(const SimilarityMatrix& s) {
  if (s.n() < 2) {
    throw TooFewFiltersError("ranking needs at least 2 filters, got " + std::to_string(s.n()));
  }
  if (s.values.cols() != s.n()) throw ShapeError("similarity matrix is not square");
}

}  // namespace

Ranking greedy_rank(const SimilarityMatrix& s) {
  require_rankable(s);
  const Index n = s.n();
  Ranking r;
  r.method = RankMethod::Greedy;
  r.scores.resize(static_cast<std::size_t>(n));
  r.nearest.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = -1;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double v = s(i, j);
      if (v < best) {
        best = v;
        arg = j;
      }
    }
    r.scores[i] = best;
    r.nearest[i] = arg;
  }
  r.order = stable_argsort(r.scores);
  return r;
}

Ranking area_rank(const SimilarityMatrix& s) {
  require_rankable(s);
  const Index n = s.n();
  Ranking r;
  r.method = RankMethod::Area;
  r.scores.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    r.scores[i] = trapezoidal_area({s.values.row(i).data(), static_cast<std::size_t>(n)});
  }
  r.order = stable_argsort(r.scores);
  return r;
}

Ranking rank(const SimilarityMatrix& s, RankMethod method) {
  return method == RankMethod::Greedy ? greedy_rank(s) : area_rank(s);
}

Index prune_count(Index n_current, Index base_count, double ratio, Index min_filters,
                  bool* floor_applied) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw RangeError("pruning ratio must be in (0,1), got " + std::to_string(ratio));
  }
  if (min_filters < 1) throw RangeError("min_filters must be >= 1");
  // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
  const auto intended = static_cast<Index>(std::floor(ratio * static_cast<double>(base_count) + 1e-9));
  const Index headroom = std::max<Index>(n_current - min_filters, 0);
  if (floor_applied) *floor_applied = intended > headroom;
  return std::min(intended, headroom);
}

PruneSelection select_prune_set(const Ranking& r, Index n_current, double ratio,
                                Index min_filters, bool pair_dedup, Index base_count) {
  if (static_cast<Index>(r.order.size()) != n_current) {
    throw ShapeError("ranking covers " + std::to_string(r.order.size()) + " filters, layer has " +
                     std::to_string(n_current));
  }
  PruneSelection sel;
  sel.ratio_used = ratio;
  const Index want =
      prune_count(n_current, base_count < 0 ? n_current : base_count, ratio, min_filters,
                  &sel.floor_applied);
  if (want == 0) return sel;

  const bool dedup = pair_dedup && r.method == RankMethod::Greedy && !r.nearest.empty();
  std::vector<char> chosen(static_cast<std::size_t>(n_current), 0);
  for (Index i : r.order) {
    if (static_cast<Index>(sel.indices.size()) == want) break;
    if (dedup) {
      const Index nn = r.nearest[i];
      if (chosen[nn] && r.nearest[nn] == i) continue;
    }
    chosen[i] = 1;
    sel.indices.push_back(i);
  }
  std::sort(sel.indices.begin(), sel.indices.end());
  return sel;
}

}  // namespace ssmprune
