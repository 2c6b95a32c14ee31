#include "rochetnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "adam.hpp"
#include "graph.hpp"

namespace deepauction::rochetnet {

using diffcore::Adam;
using diffcore::AdamConfig;
using diffcore::Executor;
using diffcore::Graph;
using diffcore::GroupSpec;

MenuNet::MenuNet(MenuMode mode, int items, int entries, double kappa)
    : mode_(mode), items_(items), entries_(entries), kappa_(kappa) {
  if (items < 1 || entries < 1 || kappa <= 0.0) {
    throw ConfigError("menu net: items, entries and kappa must be positive");
  }
  params_.set("alpha", Tensor({static_cast<std::size_t>(items),
                               static_cast<std::size_t>(entries)}));
  params_.set("beta", Tensor({1, static_cast<std::size_t>(entries)}));
  if (mode == MenuMode::kUnitDemand) {
    params_.set("scale", Tensor({1, static_cast<std::size_t>(entries)}));
  }
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor MenuNet::weights() const {
  const Tensor& alpha = params_.get("alpha");
  std::size_t m = static_cast<std::size_t>(items_);
  std::size_t j = static_cast<std::size_t>(entries_);
  Tensor w({j, m});
  if (mode_ == MenuMode::kAdditive) {
    for (std::size_t e = 0; e < j; ++e) {
      for (std::size_t k = 0; k < m; ++k) {
        w.at(e, k) = sigmoid(alpha.at(k, e));
      }
    }
    return w;
  }
  const Tensor& scale = params_.get("scale");
  for (std::size_t e = 0; e < j; ++e) {
    double colsum = 0.0;
    for (std::size_t k = 0; k < m; ++k) colsum += sigmoid(alpha.at(k, e));
    double f = sigmoid(scale[e]) / std::max(1.0, colsum);
    for (std::size_t k = 0; k < m; ++k) {
      w.at(e, k) = sigmoid(alpha.at(k, e)) * f;
    }
  }
  return w;
}

Tensor MenuNet::intercepts() const {
  Tensor b({static_cast<std::size_t>(entries_)});
  const Tensor& beta = params_.get("beta");
  for (std::size_t e = 0; e < b.size(); ++e) b[e] = beta[e];
  return b;
}

double MenuNet::utility(const double* v) const {
  Tensor w = weights();
  const Tensor& beta = params_.get("beta");
  double best = 0.0;
  for (int e = 0; e < entries_; ++e) {
    double t = beta[static_cast<std::size_t>(e)];
    for (int k = 0; k < items_; ++k) {
      t += w.at(static_cast<std::size_t>(e), static_cast<std::size_t>(k)) * v[k];
    }
    best = std::max(best, t);
  }
  return best;
}

double MenuNet::utility(const Tensor& v) const { return utility(v.data()); }

int MenuNet::choose(const double* b) const {
  Tensor w = weights();
  const Tensor& beta = params_.get("beta");
  int best = -1;
  double best_t = 0.0;
  for (int e = 0; e < entries_; ++e) {
    double t = beta[static_cast<std::size_t>(e)];
    for (int k = 0; k < items_; ++k) {
      t += w.at(static_cast<std::size_t>(e), static_cast<std::size_t>(k)) * b[k];
    }
    // An entry matching the zero option's utility still wins; among
    // entries the lowest index wins exact ties.
    if (t >= 0.0 && (best == -1 || t > best_t)) {
      best = e;
      best_t = t;
    }
  }
  return best;
}

void MenuNet::mechanism(const double* b, double* alloc, double* pay) const {
  int e = choose(b);
  if (e < 0) {
    for (int k = 0; k < items_; ++k) alloc[k] = 0.0;
    *pay = 0.0;
    return;
  }
  Tensor w = weights();
  for (int k = 0; k < items_; ++k) {
    alloc[k] = w.at(static_cast<std::size_t>(e), static_cast<std::size_t>(k));
  }
  *pay = -params_.get("beta")[static_cast<std::size_t>(e)];
}

void MenuNet::init(Rng& rng, const SettingSpec& spec) {
  Tensor& alpha = params_.get_mut("alpha");
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = rng.uniform(-1.0, 1.0);
  double price_span = 0.0;
  if (mode_ == MenuMode::kAdditive) {
    for (int k = 0; k < items_; ++k) price_span += spec.item_mean(0, k);
  } else {
    for (int k = 0; k < items_; ++k) {
      price_span = std::max(price_span, spec.item_mean(0, k));
    }
  }
  Tensor& beta = params_.get_mut("beta");
  for (std::size_t i = 0; i < beta.size(); ++i) {
    beta[i] = rng.uniform(-price_span, 0.0);
  }
  if (mode_ == MenuMode::kUnitDemand) {
    Tensor& scale = params_.get_mut("scale");
    for (std::size_t i = 0; i < scale.size(); ++i) {
      scale[i] = rng.uniform(-1.0, 1.0);
    }
  }
}

namespace {

struct LossNodes {
  int values = -1;
  int neg_inv_b = -1;
  int loss = -1;
};

// -(1/B) * sum_l (softmax(kappa T) . T0 - relu(rowmax T)), where
// T0 = V W and T = T0 + beta. The dummy entry of the softmax is the zero
// option.
LossNodes build_loss_graph(Graph& g, const MenuNet& net) {
  LossNodes out;
  out.values = g.input("values");
  out.neg_inv_b = g.input("neg_inv_b");
  std::size_t j = static_cast<std::size_t>(net.entries());

  int w;
  int sig_alpha = g.sigmoid(g.input("alpha"));
  if (net.mode() == MenuMode::kAdditive) {
    w = sig_alpha;
  } else {
    int colsum = g.reduce_sum_axis(sig_alpha, 0);            // 1 x J
    int denom = g.max_const(colsum, 1.0);
    int factor = g.div(g.sigmoid(g.input("scale")), denom);  // 1 x J
    w = g.mul_row(sig_alpha, factor);
  }
  int t0 = g.matmul(out.values, w);          // B x J
  int t = g.add_row(t0, g.input("beta"));    // B x J
  int q = g.group_softmax_dummy(g.scalar_mul(t, net.kappa()),
                                GroupSpec::whole_row(j));
  int uv = g.reduce_sum(g.mul(q, t0));
  int u = g.max_const(g.group_reduce_max(t, 1, j), 0.0);  // B x 1
  out.loss = g.mul(g.sub(uv, g.reduce_sum(u)), out.neg_inv_b);
  return out;
}

}  // namespace

double smoothed_revenue_loss(const MenuNet& net, const Tensor& batch) {
  Graph g;
  LossNodes nodes = build_loss_graph(g, net);
  Executor ex(g);
  for (const auto& [name, t] : net.params()) ex.bind(name, t);
  ex.bind("values", batch);
  // neg_inv_b bound to -1/B: the loss node is the negated batch mean.
  ex.bind("neg_inv_b",
          Tensor::scalar(-1.0 / static_cast<double>(batch.rows())));
  ex.forward();
  return ex.value(nodes.loss).scalar_value();
}

RochetTrainResult train_rochetnet(const RochetTrainConfig& cfg) {
  SettingSpec spec = SettingSpec::by_id(cfg.setting_id);
  if (spec.bidders() != 1) {
    throw ConfigError("rochetnet: setting '" + cfg.setting_id +
                      "' has more than one bidder");
  }
  if (spec.valuation_class() == valuations::ValuationClass::kCombinatorial) {
    throw ConfigError("rochetnet: combinatorial settings are not supported");
  }
  MenuMode mode = spec.valuation_class() == valuations::ValuationClass::kAdditive
                      ? MenuMode::kAdditive
                      : MenuMode::kUnitDemand;
  MenuNet net(mode, spec.items(), cfg.entries, cfg.kappa);

  Rng master(cfg.seed);
  Rng init_rng = master.fork("menu-init");
  net.init(init_rng, spec);
  Rng data_rng = master.fork("train-data");
  Tensor profiles = spec.sample_batch(data_rng, cfg.train_size);

  Graph g;
  LossNodes nodes = build_loss_graph(g, net);
  Executor ex(g);

  AdamConfig acfg;
  acfg.lr = cfg.adam_lr;
  Adam opt(acfg);

  RochetTrainResult out{std::move(net), {}};
  auto t0 = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(cfg.train_size);
  std::iota(order.begin(), order.end(), 0);
  std::size_t d = static_cast<std::size_t>(spec.items());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = master.fork("shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t k = cfg.train_size; k > 1; --k) {
      std::size_t j = shuffle_rng.index(k);
      std::swap(order[k - 1], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < cfg.train_size; begin += cfg.batch) {
      std::size_t b = std::min(cfg.batch, cfg.train_size - begin);
      Tensor batch({b, d});
      for (std::size_t l = 0; l < b; ++l) {
        for (std::size_t k = 0; k < d; ++k) {
          batch.at(l, k) = profiles.at(order[begin + l], k);
        }
      }
      for (const auto& [name, t] : out.net.params()) ex.bind(name, t);
      ex.bind("values", batch);
      ex.bind("neg_inv_b", Tensor::scalar(-1.0 / static_cast<double>(b)));
      ex.forward();
      ex.backward(nodes.loss);

      std::map<std::string, Tensor> grads;
      for (const auto& [name, t] : out.net.params()) {
        const Tensor& gt = ex.input_grad(name);
        if (!gt.all_finite()) {
          throw NumericError("rochetnet: non-finite gradient for '" + name + "'");
        }
        grads[name] = gt;
      }
      opt.step(out.net.params(), grads);
      epoch_loss += ex.value(nodes.loss).scalar_value() * static_cast<double>(b);
      seen += b;
    }
    RochetHistoryEntry e;
    e.epoch = epoch;
    e.loss = epoch_loss / static_cast<double>(seen);
    e.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.history.push_back(e);
    if (cfg.verbose) {
      std::fprintf(stderr, "rochet epoch %3d loss %.5f (%.1fs)\n", e.epoch,
                   e.loss, e.wall_time_s);
    }
  }
  return out;
}

Outcome RochetMechanism::run(const Tensor& bids) const {
  std::size_t rows = bids.rows();
  std::size_t m = static_cast<std::size_t>(net_.items());
  std::size_t j = static_cast<std::size_t>(net_.entries());
  Outcome out;
  out.alloc = Tensor({rows, m});
  out.pay = Tensor({rows, 1});
  for (std::size_t l = 0; l < rows; ++l) {
    const double* b = bids.data() + l * m;
    int best = -1;
    double best_t = 0.0;
    for (std::size_t e = 0; e < j; ++e) {
      double t = intercepts_[e];
      for (std::size_t k = 0; k < m; ++k) t += weights_.at(e, k) * b[k];
      if (t >= 0.0 && (best == -1 || t > best_t)) {
        best = static_cast<int>(e);
        best_t = t;
      }
    }
    if (best >= 0) {
      for (std::size_t k = 0; k < m; ++k) {
        out.alloc.at(l, k) = weights_.at(static_cast<std::size_t>(best), k);
      }
      out.pay[l] = -intercepts_[static_cast<std::size_t>(best)];
    }
  }
  return out;
}

void write_menu_csv(const MenuNet& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "entry";
  for (int k = 1; k <= net.items(); ++k) f << ",w" << k;
  f << ",price\n";
  f.precision(12);
  Tensor w = net.weights();
  Tensor b = net.intercepts();
  for (int e = 0; e < net.entries(); ++e) {
    f << e;
    for (int k = 0; k < net.items(); ++k) {
      f << ',' << w.at(static_cast<std::size_t>(e), static_cast<std::size_t>(k));
    }
    f << ',' << -b[static_cast<std::size_t>(e)] << "\n";
  }
}

}  // namespace deepauction::rochetnet
