#include "myersonnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "adam.hpp"
#include "graph.hpp"

namespace deepauction::myersonnet {

using diffcore::Adam;
using diffcore::AdamConfig;
using diffcore::Executor;
using diffcore::Graph;
using diffcore::GroupSpec;
using diffcore::ParamStore;

VirtualTransform::VirtualTransform(int k, int j)
    : k_groups(k),
      j_lines(j),
      alpha({static_cast<std::size_t>(k), static_cast<std::size_t>(j)}),
      beta({static_cast<std::size_t>(k), static_cast<std::size_t>(j)}) {
  if (k < 1 || j < 1) {
    throw ConfigError("virtual transform needs k, j >= 1");
  }
}

VirtualTransform VirtualTransform::identity() {
  VirtualTransform t(1, 1);
  t.alpha[0] = 0.0;
  t.beta[0] = 0.0;
  return t;
}

double phi(const VirtualTransform& t, double bid) {
  double outer = 0.0;
  for (int k = 0; k < t.k_groups; ++k) {
    double inner = -1e300;
    for (int j = 0; j < t.j_lines; ++j) {
      std::size_t idx = static_cast<std::size_t>(k) * t.j_lines + j;
      inner = std::max(inner, std::exp(t.alpha[idx]) * bid + t.beta[idx]);
    }
    outer = k == 0 ? inner : std::min(outer, inner);
  }
  return outer;
}

double phi_inverse(const VirtualTransform& t, double y) {
  double outer = 0.0;
  for (int k = 0; k < t.k_groups; ++k) {
    double inner = 1e300;
    for (int j = 0; j < t.j_lines; ++j) {
      std::size_t idx = static_cast<std::size_t>(k) * t.j_lines + j;
      inner = std::min(inner, std::exp(-t.alpha[idx]) * (y - t.beta[idx]));
    }
    outer = k == 0 ? inner : std::max(outer, inner);
  }
  return outer;
}

SpaOutcome spa0_exact(const std::vector<double>& virtual_bids) {
  SpaOutcome out;
  std::size_t n = virtual_bids.size();
  out.conditional_payment.assign(n, 0.0);
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (virtual_bids[i] > best) {
      best = virtual_bids[i];
      out.winner = static_cast<int>(i);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double other = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) other = std::max(other, virtual_bids[j]);
    }
    out.conditional_payment[i] = other;
  }
  return out;
}

std::vector<double> spa0_soft(const std::vector<double>& virtual_bids,
                              double kappa) {
  if (kappa <= 0.0) throw ConfigError("spa0_soft: kappa must be positive");
  std::size_t n = virtual_bids.size();
  double m = 0.0;  // dummy zero entry
  for (double b : virtual_bids) m = std::max(m, kappa * b);
  double denom = std::exp(-m);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(kappa * virtual_bids[i] - m);
    denom += out[i];
  }
  for (double& x : out) x /= denom;
  return out;
}

void MyersonNet::run_profile(const double* bids, double* alloc,
                             double* pay) const {
  int n = bidders();
  std::vector<double> vb(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    vb[static_cast<std::size_t>(i)] =
        phi(transforms_[static_cast<std::size_t>(i)], bids[i]);
  }
  SpaOutcome spa = spa0_exact(vb);
  for (int i = 0; i < n; ++i) {
    alloc[i] = 0.0;
    pay[i] = 0.0;
  }
  if (spa.winner >= 0) {
    alloc[spa.winner] = 1.0;
    pay[spa.winner] =
        phi_inverse(transforms_[static_cast<std::size_t>(spa.winner)],
                    spa.conditional_payment[static_cast<std::size_t>(spa.winner)]);
  }
}

Outcome MyersonMechanism::run(const Tensor& bids) const {
  std::size_t rows = bids.rows();
  std::size_t n = static_cast<std::size_t>(net_.bidders());
  Outcome out;
  out.alloc = Tensor({rows, n});
  out.pay = Tensor({rows, n});
  for (std::size_t l = 0; l < rows; ++l) {
    net_.run_profile(bids.data() + l * n, out.alloc.data() + l * n,
                     out.pay.data() + l * n);
  }
  return out;
}

namespace {

struct TrainNodes {
  int bids = -1;       // B x n
  int neg_inv_b = -1;  // scalar, -1/B
  int loss = -1;       // negated mean soft revenue
};

// Per bidder i: phi_i via exp(alpha_i) outer-producted against the bid
// column, then max over lines and min over groups. Soft allocation is a
// softmax over kappa * virtual bids with the zero dummy; the payment is
// phi_i^{-1} of the rival virtual-bid maximum (clamped at zero).
TrainNodes build_train_graph(Graph& g, int n, int k_groups, int j_lines,
                             double kappa) {
  TrainNodes out;
  out.bids = g.input("bids");
  out.neg_inv_b = g.input("neg_inv_b");

  std::vector<int> vbid_cols;
  std::vector<int> pay_cols;
  std::vector<int> exp_alpha(static_cast<std::size_t>(n));
  std::vector<int> exp_neg_alpha(static_cast<std::size_t>(n));
  std::vector<int> beta_in(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string ai = "alpha" + std::to_string(i);
    std::string bi = "beta" + std::to_string(i);
    int alpha = g.input(ai);  // 1 x K*J
    beta_in[static_cast<std::size_t>(i)] = g.input(bi);
    exp_alpha[static_cast<std::size_t>(i)] = g.exp(alpha);
    exp_neg_alpha[static_cast<std::size_t>(i)] = g.exp(g.scalar_mul(alpha, -1.0));

    int bid_col = g.gather_cols(out.bids, {static_cast<std::size_t>(i)});
    int lines = g.add_row(g.matmul(bid_col, exp_alpha[static_cast<std::size_t>(i)]),
                          beta_in[static_cast<std::size_t>(i)]);  // B x K*J
    int groups = g.group_reduce_max(lines, static_cast<std::size_t>(k_groups),
                                    static_cast<std::size_t>(j_lines));
    int vb = g.group_reduce_min(groups, 1, static_cast<std::size_t>(k_groups));
    vbid_cols.push_back(vb);
  }
  int vbids = g.concat_cols(vbid_cols);  // B x n

  int galloc = g.group_softmax_dummy(
      g.scalar_mul(vbids, kappa),
      GroupSpec::whole_row(static_cast<std::size_t>(n)));

  for (int i = 0; i < n; ++i) {
    std::vector<std::size_t> others;
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(static_cast<std::size_t>(j));
    }
    int t0;
    if (others.empty()) {
      // Single bidder: the rival maximum is identically zero.
      t0 = g.scalar_mul(g.gather_cols(vbids, {0}), 0.0);
    } else {
      int rivals = g.gather_cols(vbids, others);
      t0 = g.max_const(g.group_reduce_max(rivals, 1, others.size()), 0.0);
    }
    // phi^{-1}(t0) = max_k min_j e^{-alpha} t0 - e^{-alpha} beta
    int spread = g.matmul(t0, exp_neg_alpha[static_cast<std::size_t>(i)]);  // B x KJ
    int shift = g.mul(exp_neg_alpha[static_cast<std::size_t>(i)],
                      beta_in[static_cast<std::size_t>(i)]);  // 1 x KJ
    int lines = g.add_row(spread, g.scalar_mul(shift, -1.0));
    int groups = g.group_reduce_min(lines, static_cast<std::size_t>(k_groups),
                                    static_cast<std::size_t>(j_lines));
    int pay = g.group_reduce_max(groups, 1, static_cast<std::size_t>(k_groups));
    pay_cols.push_back(pay);
  }
  int pays = g.concat_cols(pay_cols);  // B x n, value-space conditional prices
  int rev = g.reduce_sum(g.mul(galloc, pays));
  out.loss = g.mul(rev, out.neg_inv_b);
  return out;
}

}  // namespace

MyersonTrainResult train_myersonnet(const MyersonTrainConfig& cfg) {
  SettingSpec spec = SettingSpec::by_id(cfg.setting_id);
  if (spec.items() != 1) {
    throw ConfigError("myersonnet: setting '" + cfg.setting_id +
                      "' is not a single-item environment");
  }
  int n = spec.bidders();

  Rng master(cfg.seed);
  Rng init_rng = master.fork("transform-init");
  ParamStore params;
  std::size_t kj = static_cast<std::size_t>(cfg.k_groups) * cfg.j_lines;
  for (int i = 0; i < n; ++i) {
    Tensor alpha({1, kj});
    Tensor beta({1, kj});
    // Intercepts start negative so the induced reserve (the value where
    // the transform crosses zero) sits inside the support: the rival-max
    // clamp then carries gradient from the first minibatch on. An
    // all-positive transform is a gradient plateau that never learns a
    // reserve.
    double span = 2.0 * spec.item_mean(i, 0);
    for (std::size_t x = 0; x < kj; ++x) {
      alpha[x] = init_rng.uniform(-1.0, 1.0);
      beta[x] = init_rng.uniform(-span, 0.0);
    }
    params.set("alpha" + std::to_string(i), alpha);
    params.set("beta" + std::to_string(i), beta);
  }

  Rng data_rng = master.fork("train-data");
  Tensor profiles = spec.sample_batch(data_rng, cfg.train_size);

  Graph g;
  TrainNodes nodes = build_train_graph(g, n, cfg.k_groups, cfg.j_lines, cfg.kappa);
  Executor ex(g);

  AdamConfig acfg;
  acfg.lr = cfg.adam_lr;
  Adam opt(acfg);

  MyersonTrainResult out;
  auto t0 = std::chrono::steady_clock::now();

  std::vector<std::size_t> order(cfg.train_size);
  std::iota(order.begin(), order.end(), 0);
  std::size_t d = static_cast<std::size_t>(n);

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
        for (std::size_t c = 0; c < d; ++c) {
          batch.at(l, c) = profiles.at(order[begin + l], c);
        }
      }
      for (const auto& [name, t] : params) ex.bind(name, t);
      ex.bind("bids", batch);
      ex.bind("neg_inv_b", Tensor::scalar(-1.0 / static_cast<double>(b)));
      ex.forward();
      ex.backward(nodes.loss);

      std::map<std::string, Tensor> grads;
      for (const auto& [name, t] : params) {
        const Tensor& gt = ex.input_grad(name);
        if (!gt.all_finite()) {
          throw NumericError("myersonnet: non-finite gradient for '" + name + "'");
        }
        grads[name] = gt;
      }
      opt.step(params, grads);
      for (int i = 0; i < n; ++i) {
        Tensor& alpha = params.get_mut("alpha" + std::to_string(i));
        for (std::size_t x = 0; x < alpha.size(); ++x) {
          alpha[x] = std::clamp(alpha[x], -cfg.alpha_bound, cfg.alpha_bound);
        }
      }
      epoch_loss += ex.value(nodes.loss).scalar_value() * static_cast<double>(b);
      seen += b;
    }
    MyersonHistoryEntry e;
    e.epoch = epoch;
    e.soft_revenue = -epoch_loss / static_cast<double>(seen);
    e.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.history.push_back(e);
    if (cfg.verbose) {
      std::fprintf(stderr, "myerson epoch %3d soft rev %.5f (%.1fs)\n", e.epoch,
                   e.soft_revenue, e.wall_time_s);
    }
  }

  std::vector<VirtualTransform> transforms;
  for (int i = 0; i < n; ++i) {
    VirtualTransform t(cfg.k_groups, cfg.j_lines);
    const Tensor& alpha = params.get("alpha" + std::to_string(i));
    const Tensor& beta = params.get("beta" + std::to_string(i));
    for (std::size_t x = 0; x < kj; ++x) {
      t.alpha[x] = alpha[x];
      t.beta[x] = beta[x];
    }
    transforms.push_back(std::move(t));
  }
  out.net = MyersonNet(std::move(transforms));
  return out;
}

void write_transforms_csv(const MyersonNet& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "bidder,group,line,slope,intercept\n";
  f.precision(12);
  for (int i = 0; i < net.bidders(); ++i) {
    const VirtualTransform& t = net.transforms()[static_cast<std::size_t>(i)];
    for (int k = 0; k < t.k_groups; ++k) {
      for (int j = 0; j < t.j_lines; ++j) {
        std::size_t idx = static_cast<std::size_t>(k) * t.j_lines + j;
        f << i << ',' << k << ',' << j << ',' << std::exp(t.alpha[idx]) << ','
          << t.beta[idx] << "\n";
      }
    }
  }
}

}  // namespace deepauction::myersonnet
