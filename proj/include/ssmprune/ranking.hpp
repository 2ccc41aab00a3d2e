#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssmprune/similarity.hpp"

namespace ssmprune {

enum class RankMethod { Greedy, Area };

RankMethod parse_method(std::string_view name);
std::string to_string(RankMethod method);

/// Filters ordered most-redundant first.
struct Ranking {
  RankMethod method = RankMethod::Greedy;
  std::vector<Index> order;
  /// Row minimum (greedy) or trapezoidal row area (area), indexed by filter.
  std::vector<double> scores;
  /// Greedy only: argmin over j != i of S(i, j), lowest j on ties.
  std::vector<Index> nearest;
};

struct PruneSelection {
  std::string layer_id;
  std::vector<Index> indices;  // sorted ascending
  double ratio_used = 0.0;
  /// True when min_filters reduced the count below floor(ratio * base).
  bool floor_applied = false;
};

/// Stable ascending argsort; equal scores keep ascending index order.
std::vector<Index> stable_argsort(std::span<const double> scores);

/// Unit-spacing trapezoid rule over the full sequence.
double trapezoidal_area(std::span<const float> values);

/// Nearest-neighbour distance per filter, diagonal excluded.
Ranking greedy_rank(const SimilarityMatrix& s);

/// Area under each SSM row, diagonal included.
Ranking area_rank(const SimilarityMatrix& s);

Ranking rank(const SimilarityMatrix& s, RankMethod method);

/// Number of filters a prune step may remove from a layer of `n_current`
/// filters: floor(ratio * base_count), clamped so at least `min_filters`
/// survive. Sets `floor_applied` when the clamp bites.
Index prune_count(Index n_current, Index base_count, double ratio, Index min_filters,
                  bool* floor_applied = nullptr);

/// Picks the prune set from the head of the ranking. With `pair_dedup`
/// (greedy only) a nearest-neighbour pair contributes at most one filter:
/// i is skipped when nearest[i] is already selected and nearest[nearest[i]] == i.
/// `base_count` defaults to `n_current`; pass the layer's original filter
/// count to apply the ratio against it.
PruneSelection select_prune_set(const Ranking& r, Index n_current, double ratio,
                                Index min_filters, bool pair_dedup, Index base_count = -1);

}  // namespace ssmprune
