#pragma once

#include <string>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "mechanism.hpp"
#include "paramstore.hpp"
#include "rng.hpp"
#include "valuations.hpp"

namespace deepauction::regretnet {

using diffcore::Graph;
using diffcore::ParamStore;
using diffcore::Tensor;
using valuations::ValuationClass;

// Feed-forward allocation + payment networks whose outputs are feasible
// and individually rational by construction. Bid batches are
// B x (bidders * report_dim), bidder-major.
struct ArchSpec {
  ValuationClass cls = ValuationClass::kAdditive;
  int bidders = 1;
  int items = 1;
  int hidden_layers = 2;  // R
  int hidden_width = 100;  // K

  int bundle_count() const { return (1 << items) - 1; }
  int report_dim() const {
    return cls == ValuationClass::kCombinatorial ? bundle_count() : items;
  }
  int alloc_cols() const { return bidders * report_dim(); }
  int input_dim() const { return bidders * report_dim(); }

  static ArchSpec for_setting(const valuations::SettingSpec& spec,
                              int hidden_layers = 2, int hidden_width = 100);
};

// Glorot-uniform weights, zero biases.
ParamStore init_params(const ArchSpec& arch, Rng& rng);

// Feasible-allocation transforms. Score layouts are bidder-major; the
// per-item combinatorial score tensors follow comb_item_cols order.
// Every softmax carries an implicit fixed zero "dummy" score that holds
// the residual probability.
int additive_alloc(Graph& g, const ArchSpec& arch, int scores);
int unit_demand_alloc(Graph& g, const ArchSpec& arch, int scores_over_bidders,
                      int scores_over_items);
int comb_alloc(Graph& g, const ArchSpec& arch, int bidder_scores,
               const std::vector<int>& item_scores);

// Columns of the full bidder-major bundle layout that contain `item`,
// ordered by bidder then bundle mask; this is the layout of the item-wise
// combinatorial score heads.
std::vector<std::size_t> comb_item_cols(int bidders, int items, int item);

struct ForwardNodes {
  int bids = -1;
  int alloc = -1;
  int pay = -1;
  int frac = -1;
};

// Appends the whole network to `g`, with parameters as graph inputs named
// exactly like the ParamStore entries. `bids` is an existing node.
ForwardNodes build_forward(Graph& g, const ArchSpec& arch, int bids);

// Binds every parameter tensor onto the matching graph inputs present in
// the executor's graph.
void bind_params(diffcore::Executor& ex, const ParamStore& params);

// Convenience single-shot forward.
Outcome forward(const ArchSpec& arch, const ParamStore& params,
                const Tensor& bids);

// Per-bidder utilities for true values against an outcome computed at
// some bid profile: u_i = <v_i, z_i> - p_i. Batched, returns B x n.
Tensor utilities(const ArchSpec& arch, const Tensor& true_vals,
                 const Outcome& outcome_at_bids);

// Lemma-style constructive score recovery. Given a strictly positive
// doubly substochastic z (n x m with row and column sums < 1), returns
// scores (s, s') that reproduce z through unit_demand_alloc.
std::pair<Tensor, Tensor> recover_ds_scores(const Tensor& z);

// Combinatorial analogue: scores for the bidder-wise and item-wise
// softmaxes that reproduce a strictly positive combinatorial-feasible z
// (n x (2^m-1), per-bidder and per-item sums < 1) through comb_alloc.
struct CfScores {
  Tensor bidder_scores;             // n x (2^m-1)
  std::vector<Tensor> item_scores;  // per item, 1 x (n * 2^(m-1))
};
CfScores recover_cf_scores(const Tensor& z, int bidders, int items);

// Mechanism wrapper around a trained parameter store.
class RegretNetMechanism : public Mechanism, public BidGradientOracle {
 public:
  RegretNetMechanism(ArchSpec arch, ParamStore params);

  valuations::ValuationClass valuation_class() const override {
    return arch_.cls;
  }
  int bidders() const override { return arch_.bidders; }
  int items() const override { return arch_.items; }
  int report_dim() const override { return arch_.report_dim(); }

  Outcome run(const Tensor& bids) const override;

  void utility_and_grad(int bidder, const Tensor& bids, const Tensor& true_vals,
                        Tensor* u, Tensor* grad) override;

  const ArchSpec& arch() const { return arch_; }
  const ParamStore& params() const { return params_; }

 private:
  ArchSpec arch_;
  ParamStore params_;
  Graph graph_;
  ForwardNodes nodes_;
  // Per-bidder misreport-utility graphs, built lazily.
  struct BidderGraph {
    Graph g;
    int bids = -1;
    int vals = -1;
    int u_vec = -1;
    int u_sum = -1;
  };
  std::vector<std::unique_ptr<BidderGraph>> bidder_graphs_;
  std::vector<std::unique_ptr<diffcore::Executor>> bidder_execs_;
};

// Builds the per-bidder utility graph used for misreport ascent: inputs
// "bids" (B x n*d) and "vals" (B x n*d, true values); exposes the
// per-row utility of `bidder` and its sum.
struct BidderUtilityNodes {
  int bids = -1;
  int vals = -1;
  int u_vec = -1;  // B x 1
  int u_sum = -1;  // scalar
};
BidderUtilityNodes build_bidder_utility(Graph& g, const ArchSpec& arch,
                                        int bidder);

}  // namespace deepauction::regretnet
