#include "ssmprune/dataset.hpp"

#include <cmath>

namespace ssmprune {

ChannelStats channel_stats(const Dataset& d) {
  const Index plane = d.shape.h * d.shape.w;
  ChannelStats s;
  s.mean.assign(static_cast<std::size_t>(d.shape.c), 0.0);
  s.stddev.assign(static_cast<std::size_t>(d.shape.c), 0.0);
  if (d.size() == 0) {
    s.stddev.assign(s.stddev.size(), 1.0);
    return s;
  }
  const double count = static_cast<double>(d.size() * plane);
  for (Index c = 0; c < d.shape.c; ++c) {
    double sum = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
      const float* p = d.images.row(i).data() + c * plane;
      for (Index k = 0; k < plane; ++k) sum += p[k];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
      const float* p = d.images.row(i).data() + c * plane;
      for (Index k = 0; k < plane; ++k) sq += (p[k] - mean) * (p[k] - mean);
    }
    s.mean[c] = mean;
    const double sd = std::sqrt(sq / count);
    s.stddev[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void normalize(Dataset& d, const ChannelStats& stats) {
  const Index plane = d.shape.h * d.shape.w;
  for (Index i = 0; i < d.size(); ++i) {
    for (Index c = 0; c < d.shape.c; ++c) {
      float* p = d.images.row(i).data() + c * plane;
      const double m = stats.mean[c];
      const double s = stats.stddev[c];
      for (Index k = 0; k < plane; ++k) p[k] = static_cast<float>((p[k] - m) / s);
    }
  }
}

}  // namespace ssmprune
