#include "regretnet.hpp"

#include <cmath>

namespace deepauction::regretnet {

using diffcore::Executor;
using diffcore::GroupSpec;

ArchSpec ArchSpec::for_setting(const valuations::SettingSpec& spec,
                               int hidden_layers, int hidden_width) {
  ArchSpec a;
  a.cls = spec.valuation_class();
  a.bidders = spec.bidders();
  a.items = spec.items();
  a.hidden_layers = hidden_layers;
  a.hidden_width = hidden_width;
  return a;
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor w({fan_in, fan_out});
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = rng.uniform(-limit, limit);
  }
  return w;
}

void init_mlp(ParamStore& p, const std::string& prefix, std::size_t in_dim,
              int layers, std::size_t width, Rng& rng) {
  std::size_t cur = in_dim;
  for (int k = 1; k <= layers; ++k) {
    std::string base = prefix + ".h" + std::to_string(k);
    p.set(base + ".w", glorot(cur, width, rng));
    p.set(base + ".b", Tensor({1, width}));
    cur = width;
  }
}

// Hidden stack with tanh activations, reading weights from graph inputs.
int mlp_hidden(Graph& g, int x, const std::string& prefix, int layers) {
  int h = x;
  for (int k = 1; k <= layers; ++k) {
    std::string base = prefix + ".h" + std::to_string(k);
    h = g.tanh(g.add_row(g.matmul(h, g.input(base + ".w")), g.input(base + ".b")));
  }
  return h;
}

int linear_head(Graph& g, int h, const std::string& base) {
  return g.add_row(g.matmul(h, g.input(base + ".w")), g.input(base + ".b"));
}

// n*d x n block indicator: column i sums bidder i's coordinates.
Tensor bidder_block_indicator(int bidders, int d) {
  Tensor m({static_cast<std::size_t>(bidders) * d, static_cast<std::size_t>(bidders)});
  for (int i = 0; i < bidders; ++i) {
    for (int k = 0; k < d; ++k) {
      m.at(static_cast<std::size_t>(i) * d + k, static_cast<std::size_t>(i)) = 1.0;
    }
  }
  return m;
}

}  // namespace

ParamStore init_params(const ArchSpec& arch, Rng& rng) {
  ParamStore p;
  std::size_t in_dim = static_cast<std::size_t>(arch.input_dim());
  std::size_t width = static_cast<std::size_t>(arch.hidden_width);
  init_mlp(p, "alloc", in_dim, arch.hidden_layers, width, rng);
  init_mlp(p, "pay", in_dim, arch.hidden_layers, width, rng);
  std::size_t cols = static_cast<std::size_t>(arch.alloc_cols());
  p.set("alloc.score.w", glorot(width, cols, rng));
  p.set("alloc.score.b", Tensor({1, cols}));
  if (arch.cls == ValuationClass::kUnitDemand) {
    p.set("alloc.score2.w", glorot(width, cols, rng));
    p.set("alloc.score2.b", Tensor({1, cols}));
  } else if (arch.cls == ValuationClass::kCombinatorial) {
    std::size_t per_item = static_cast<std::size_t>(arch.bidders) *
                           (1u << (arch.items - 1));
    for (int j = 1; j <= arch.items; ++j) {
      std::string base = "alloc.item" + std::to_string(j);
      p.set(base + ".w", glorot(width, per_item, rng));
      p.set(base + ".b", Tensor({1, per_item}));
    }
  }
  p.set("pay.score.w", glorot(width, static_cast<std::size_t>(arch.bidders), rng));
  p.set("pay.score.b", Tensor({1, static_cast<std::size_t>(arch.bidders)}));
  return p;
}

int additive_alloc(Graph& g, const ArchSpec& arch, int scores) {
  // Softmax across bidders (plus dummy) for each item; columns for item j
  // sit at i*m + j.
  std::size_t n = static_cast<std::size_t>(arch.bidders);
  std::size_t m = static_cast<std::size_t>(arch.items);
  return g.group_softmax_dummy(scores, GroupSpec{m, n, m, 1});
}

int unit_demand_alloc(Graph& g, const ArchSpec& arch, int scores_over_bidders,
                      int scores_over_items) {
  std::size_t n = static_cast<std::size_t>(arch.bidders);
  std::size_t m = static_cast<std::size_t>(arch.items);
  int by_item = g.group_softmax_dummy(scores_over_bidders, GroupSpec{m, n, m, 1});
  int by_bidder =
      g.group_softmax_dummy(scores_over_items, GroupSpec::contiguous(n, m));
  return g.min(by_item, by_bidder);
}

std::vector<std::size_t> comb_item_cols(int bidders, int items, int item) {
  std::vector<std::size_t> cols;
  unsigned q = (1u << items) - 1;
  for (int i = 0; i < bidders; ++i) {
    for (unsigned mask = 1; mask <= q; ++mask) {
      if (mask & (1u << item)) {
        cols.push_back(static_cast<std::size_t>(i) * q + (mask - 1));
      }
    }
  }
  return cols;
}

int comb_alloc(Graph& g, const ArchSpec& arch, int bidder_scores,
               const std::vector<int>& item_scores) {
  std::size_t n = static_cast<std::size_t>(arch.bidders);
  std::size_t q = static_cast<std::size_t>(arch.bundle_count());
  int z = g.group_softmax_dummy(bidder_scores, GroupSpec::contiguous(n, q));
  for (int j = 0; j < arch.items; ++j) {
    std::vector<std::size_t> cols = comb_item_cols(arch.bidders, arch.items, j);
    int normalized = g.group_softmax_dummy(
        item_scores[static_cast<std::size_t>(j)],
        GroupSpec::whole_row(cols.size()));
    z = g.min_scatter(z, normalized, cols);
  }
  return z;
}

ForwardNodes build_forward(Graph& g, const ArchSpec& arch, int bids) {
  ForwardNodes out;
  out.bids = bids;

  int h = mlp_hidden(g, bids, "alloc", arch.hidden_layers);
  int scores = linear_head(g, h, "alloc.score");
  switch (arch.cls) {
    case ValuationClass::kAdditive:
      out.alloc = additive_alloc(g, arch, scores);
      break;
    case ValuationClass::kUnitDemand: {
      int scores2 = linear_head(g, h, "alloc.score2");
      out.alloc = unit_demand_alloc(g, arch, scores, scores2);
      break;
    }
    case ValuationClass::kCombinatorial: {
      std::vector<int> item_scores;
      for (int j = 1; j <= arch.items; ++j) {
        item_scores.push_back(linear_head(g, h, "alloc.item" + std::to_string(j)));
      }
      out.alloc = comb_alloc(g, arch, scores, item_scores);
      break;
    }
  }

  int hp = mlp_hidden(g, bids, "pay", arch.hidden_layers);
  out.frac = g.sigmoid(linear_head(g, hp, "pay.score"));

  // p_i = frac_i * <b_i, z_i>
  int value = g.matmul(g.mul(bids, out.alloc),
                       g.constant(bidder_block_indicator(arch.bidders,
                                                         arch.report_dim())));
  out.pay = g.mul(out.frac, value);
  return out;
}

void bind_params(Executor& ex, const ParamStore& params) {
  const auto& ids = ex.graph().input_ids();
  for (const auto& [name, t] : params) {
    if (ids.count(name)) ex.bind(name, t);
  }
}

Outcome forward(const ArchSpec& arch, const ParamStore& params,
                const Tensor& bids) {
  Graph g;
  ForwardNodes nodes = build_forward(g, arch, g.input("bids"));
  Executor ex(g);
  ex.bind("bids", bids);
  bind_params(ex, params);
  ex.forward();
  return Outcome{ex.value(nodes.alloc), ex.value(nodes.pay)};
}

Tensor utilities(const ArchSpec& arch, const Tensor& true_vals,
                 const Outcome& outcome_at_bids) {
  std::size_t rows = true_vals.rows();
  std::size_t n = static_cast<std::size_t>(arch.bidders);
  std::size_t d = static_cast<std::size_t>(arch.report_dim());
  if (true_vals.cols() != n * d || outcome_at_bids.alloc.cols() != n * d) {
    throw diffcore::DiffError("utilities: shape mismatch");
  }
  Tensor u({rows, n});
  for (std::size_t l = 0; l < rows; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        v += true_vals.at(l, i * d + k) * outcome_at_bids.alloc.at(l, i * d + k);
      }
      u.at(l, i) = v - outcome_at_bids.pay.at(l, i);
    }
  }
  return u;
}

std::pair<Tensor, Tensor> recover_ds_scores(const Tensor& z) {
  std::size_t n = z.rows();
  std::size_t m = z.cols();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] <= 0.0) {
      throw diffcore::DiffError(
          "recover_ds_scores: zero entry, log undefined (floor z first)");
    }
  }
  std::vector<double> row_sum(n, 0.0), col_sum(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row_sum[i] += z.at(i, j);
      col_sum[j] += z.at(i, j);
    }
  }
  for (double s : row_sum) {
    if (s >= 1.0) throw diffcore::DiffError("recover_ds_scores: row sum >= 1");
  }
  for (double s : col_sum) {
    if (s >= 1.0) throw diffcore::DiffError("recover_ds_scores: column sum >= 1");
  }
  // With the dummy's fixed zero score, a per-group shift of
  // -log(1 - group sum) makes the normalized score reproduce z exactly.
  Tensor s({n, m}), s2({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      s.at(i, j) = std::log(z.at(i, j)) - std::log(1.0 - col_sum[j]);
      s2.at(i, j) = std::log(z.at(i, j)) - std::log(1.0 - row_sum[i]);
    }
  }
  return {s, s2};
}

CfScores recover_cf_scores(const Tensor& z, int bidders, int items) {
  std::size_t n = static_cast<std::size_t>(bidders);
  unsigned q = (1u << items) - 1;
  if (z.rows() != n || z.cols() != q) {
    throw diffcore::DiffError("recover_cf_scores: bad z shape");
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] <= 0.0) {
      throw diffcore::DiffError("recover_cf_scores: zero entry, log undefined");
    }
  }
  std::vector<double> bidder_sum(n, 0.0), item_sum(static_cast<std::size_t>(items), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (unsigned mask = 1; mask <= q; ++mask) {
      bidder_sum[i] += z.at(i, mask - 1);
      for (int j = 0; j < items; ++j) {
        if (mask & (1u << j)) item_sum[static_cast<std::size_t>(j)] += z.at(i, mask - 1);
      }
    }
  }
  for (double s : bidder_sum) {
    if (s >= 1.0) throw diffcore::DiffError("recover_cf_scores: bidder sum >= 1");
  }
  for (double s : item_sum) {
    if (s >= 1.0) throw diffcore::DiffError("recover_cf_scores: item sum >= 1");
  }
  CfScores out;
  out.bidder_scores = Tensor({n, static_cast<std::size_t>(q)});
  for (std::size_t i = 0; i < n; ++i) {
    for (unsigned mask = 1; mask <= q; ++mask) {
      out.bidder_scores.at(i, mask - 1) =
          std::log(z.at(i, mask - 1)) - std::log(1.0 - bidder_sum[i]);
    }
  }
  for (int j = 0; j < items; ++j) {
    std::vector<std::size_t> cols = comb_item_cols(bidders, items, j);
    Tensor sj({1, cols.size()});
    for (std::size_t p = 0; p < cols.size(); ++p) {
      double zv = z[cols[p]];
      sj[p] = std::log(zv) - std::log(1.0 - item_sum[static_cast<std::size_t>(j)]);
    }
    out.item_scores.push_back(std::move(sj));
  }
  return out;
}

BidderUtilityNodes build_bidder_utility(Graph& g, const ArchSpec& arch,
                                        int bidder) {
  BidderUtilityNodes out;
  out.bids = g.input("bids");
  out.vals = g.input("vals");
  ForwardNodes f = build_forward(g, arch, out.bids);
  std::size_t d = static_cast<std::size_t>(arch.report_dim());
  std::vector<std::size_t> block(d);
  for (std::size_t k = 0; k < d; ++k) {
    block[k] = static_cast<std::size_t>(bidder) * d + k;
  }
  int v_i = g.gather_cols(out.vals, block);
  int z_i = g.gather_cols(f.alloc, block);
  int value = g.reduce_sum_axis(g.mul(v_i, z_i), 1);            // B x 1
  int p_i = g.gather_cols(f.pay, {static_cast<std::size_t>(bidder)});
  out.u_vec = g.sub(value, p_i);
  out.u_sum = g.reduce_sum(out.u_vec);
  return out;
}

RegretNetMechanism::RegretNetMechanism(ArchSpec arch, ParamStore params)
    : arch_(arch), params_(std::move(params)) {
  nodes_ = build_forward(graph_, arch_, graph_.input("bids"));
  bidder_graphs_.resize(static_cast<std::size_t>(arch_.bidders));
  bidder_execs_.resize(static_cast<std::size_t>(arch_.bidders));
}

Outcome RegretNetMechanism::run(const Tensor& bids) const {
  Executor ex(graph_);
  ex.bind("bids", bids);
  bind_params(ex, params_);
  ex.forward();
  return Outcome{ex.value(nodes_.alloc), ex.value(nodes_.pay)};
}

void RegretNetMechanism::utility_and_grad(int bidder, const Tensor& bids,
                                          const Tensor& true_vals, Tensor* u,
                                          Tensor* grad) {
  auto& bg = bidder_graphs_[static_cast<std::size_t>(bidder)];
  auto& exec = bidder_execs_[static_cast<std::size_t>(bidder)];
  if (!bg) {
    bg = std::make_unique<BidderGraph>();
    BidderUtilityNodes nodes = build_bidder_utility(bg->g, arch_, bidder);
    bg->bids = nodes.bids;
    bg->vals = nodes.vals;
    bg->u_vec = nodes.u_vec;
    bg->u_sum = nodes.u_sum;
    exec = std::make_unique<Executor>(bg->g);
    bind_params(*exec, params_);
  }
  exec->bind(bg->bids, bids);
  exec->bind(bg->vals, true_vals);
  exec->forward();
  if (u) *u = exec->value(bg->u_vec);
  if (grad) {
    exec->backward(bg->u_sum);
    const Tensor& full = exec->grad(bg->bids);
    std::size_t rows = bids.rows();
    std::size_t d = static_cast<std::size_t>(arch_.report_dim());
    Tensor g_out({rows, d});
    for (std::size_t l = 0; l < rows; ++l) {
      for (std::size_t k = 0; k < d; ++k) {
        g_out.at(l, k) = full.at(l, static_cast<std::size_t>(bidder) * d + k);
      }
    }
    *grad = std::move(g_out);
  }
}

}  // namespace deepauction::regretnet
