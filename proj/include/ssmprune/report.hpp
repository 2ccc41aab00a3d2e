#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ssmprune/engine.hpp"
#include "ssmprune/trainer.hpp"

namespace ssmprune {

// CSV writers. Headers are fixed; list-valued fields use ';' so no field
// ever carries a comma.

/// epoch,train_loss,train_acc,test_acc,conv_params,reduction_pct
void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& records);

/// epoch,layer,indices,params_before,params_after (one row per conv layer
/// per prune step; indices joined by ';').
void write_prune_log_csv(std::ostream& os, const std::vector<PruneReport>& reports);

/// Header `filter,0,1,...,N-1`, then one row per filter.
void write_ssm_csv(std::ostream& os, const SimilarityMatrix& s);

/// rank,filter_index,score in ranking order.
void write_ranking_csv(std::ostream& os, const Ranking& r);

struct SweepRow {
  double ratio = 0.0;  // 0 for the no-prune baseline
  int epoch = 0;
  double test_acc = 0.0;
  double reduction_pct = 0.0;
};

/// ratio,epoch,test_acc,reduction_pct
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Shortest round-trip decimal form of a double.
std::string format_real(double v);

}  // namespace ssmprune
