#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ssmprune/model.hpp"

namespace ssmprune {

/// Images as rows (channel-major C*H*W floats) with one label per row.
struct Dataset {
  Shape3 shape{3, 32, 32};
  Matrix images;
  std::vector<std::int32_t> labels;

  Index size() const { return images.rows(); }
};

/// Per-channel mean and standard deviation.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Accumulated in double over every pixel of every image.
ChannelStats channel_stats(const Dataset& d);

/// x <- (x - mean_c) / std_c in place.
void normalize(Dataset& d, const ChannelStats& stats);

}  // namespace ssmprune
