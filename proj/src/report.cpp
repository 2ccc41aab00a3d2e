#include "ssmprune/report.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

namespace ssmprune {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& records) {
  os << "epoch,train_loss,train_acc,test_acc,conv_params,reduction_pct\n";
  for (const auto& r : records) {
    os << r.epoch << ',' << fixed(r.train_loss, 6) << ',' << fixed(r.train_acc, 4) << ','
       << fixed(r.test_acc, 4) << ',' << r.conv_params << ',' << fixed(r.cumulative_reduction_percent, 6)
       << '\n';
  }
}

void write_prune_log_csv(std::ostream& os, const std::vector<PruneReport>& reports) {
  os << "epoch,layer,indices,params_before,params_after\n";
  for (const auto& rep : reports) {
    for (const auto& l : rep.layers) {
      os << rep.epoch << ',' << l.layer_id << ',';
      for (std::size_t i = 0; i < l.pruned_indices.size(); ++i) {
        os << (i ? ";" : "") << l.pruned_indices[i];
      }
      os << ',' << l.conv_params_before << ',' << l.conv_params_after << '\n';
    }
  }
}

void write_ssm_csv(std::ostream& os, const SimilarityMatrix& s) {
  os << "filter";
  for (Index j = 0; j < s.n(); ++j) os << ',' << j;
  os << '\n';
  for (Index i = 0; i < s.n(); ++i) {
    os << i;
    for (Index j = 0; j < s.n(); ++j) os << ',' << format_real(static_cast<double>(s(i, j)));
    os << '\n';
  }
}

void write_ranking_csv(std::ostream& os, const Ranking& r) {
  os << "rank,filter_index,score\n";
  for (std::size_t k = 0; k < r.order.size(); ++k) {
    os << k << ',' << r.order[k] << ',' << format_real(r.scores[static_cast<std::size_t>(r.order[k])]) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "ratio,epoch,test_acc,reduction_pct\n";
  for (const auto& r : rows) {
    os << format_real(r.ratio) << ',' << r.epoch << ',' << fixed(r.test_acc, 4) << ','
       << fixed(r.reduction_pct, 6) << '\n';
  }
}

}  // namespace ssmprune
