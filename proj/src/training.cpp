#include "training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "graph.hpp"

namespace deepauction::training {

using diffcore::Adam;
using diffcore::AdamConfig;
using diffcore::Executor;
using diffcore::Graph;
using regretnet::BidderUtilityNodes;
using regretnet::ForwardNodes;

// The regret terms of the Lagrangian gradient are averaged over the
// minibatch, matching the (1/B) normalization of the revenue term, so the
// multiplier updates work directly on per-profile regret scales.
namespace {
constexpr bool kNormalizeRegretTerms = true;

double term_scale(std::size_t batch) {
  return kNormalizeRegretTerms ? 1.0 / static_cast<double>(batch) : 1.0;
}
}  // namespace

void TrainConfig::validate() const {
  if (!valuations::SettingSpec::known_id(setting_id)) {
    throw ConfigError("unknown setting id '" + setting_id + "'");
  }
  if (hidden_layers < 1 || hidden_width < 1) {
    throw ConfigError("hidden_layers and hidden_width must be positive");
  }
  if (train_size == 0 || batch == 0 || epochs <= 0) {
    throw ConfigError("train_size, batch and epochs must be positive");
  }
  if (rho_init <= 0.0) throw ConfigError("rho_init must be positive");
  if (lagrange_every <= 0) throw ConfigError("lagrange_every must be positive");
  if (misreport_steps < 0 || misreport_lr <= 0.0) {
    throw ConfigError("misreport schedule must be positive");
  }
  if (mode == RegretMode::kSampleBased && misreport_samples == 0) {
    throw ConfigError("sample-based mode needs misreport_samples >= 1");
  }
  if (adam_lr <= 0.0) throw ConfigError("adam_lr must be positive");
}

void multiplier_update(LagrangeState& state, const std::vector<double>& rgt) {
  if (rgt.size() != state.lambda.size()) {
    throw ConfigError("multiplier_update: regret size mismatch");
  }
  for (std::size_t i = 0; i < state.lambda.size(); ++i) {
    state.lambda[i] += state.rho * rgt[i];
  }
}

MisreportCache MisreportCache::init(const SettingSpec& spec,
                                    std::size_t profiles, Rng& rng) {
  MisreportCache cache;
  std::size_t d = static_cast<std::size_t>(spec.report_dim());
  for (int i = 0; i < spec.bidders(); ++i) {
    Tensor t({profiles, d});
    for (std::size_t l = 0; l < profiles; ++l) {
      spec.sample_report(i, rng, t.data() + l * d);
    }
    cache.per_bidder.push_back(std::move(t));
  }
  return cache;
}

void adam_ascent(Tensor& x, int steps, double lr,
                 const std::function<Tensor(const Tensor&)>& grad_fn,
                 const std::function<void(double*)>& project_row) {
  AdamConfig cfg;
  cfg.lr = lr;
  Adam opt(cfg);
  ParamStore p;
  std::size_t rows = x.rows();
  std::size_t cols = x.cols();
  p.set("x", std::move(x));
  for (int s = 0; s < steps; ++s) {
    Tensor g = grad_fn(p.get("x"));
    std::map<std::string, Tensor> grads;
    grads.emplace("x", std::move(g));
    opt.step_ascent(p, grads);
    if (project_row) {
      Tensor& cur = p.get_mut("x");
      for (std::size_t l = 0; l < rows; ++l) {
        project_row(cur.data() + l * cols);
      }
    }
  }
  x = std::move(p.get_mut("x"));
}

namespace {

// Replaces bidder i's report block of a truthful batch with `block`.
Tensor with_block(const Tensor& batch, int bidder, std::size_t d,
                  const Tensor& block) {
  Tensor out = batch;
  for (std::size_t l = 0; l < batch.rows(); ++l) {
    for (std::size_t k = 0; k < d; ++k) {
      out.at(l, static_cast<std::size_t>(bidder) * d + k) = block.at(l, k);
    }
  }
  return out;
}

struct LagNodes {
  int bids = -1;
  int coeff = -1;      // 1 x n input: lambda_i + rho * rgt_i
  int neg_inv_b = -1;  // scalar input, bound to -1/B
  int reg_scale = -1;  // scalar input, regret-term normalization
  std::vector<int> mis;
  std::vector<int> u_truth;  // B x 1 per bidder
  std::vector<int> u_mis;    // B x 1 per bidder
  int revenue_sum = -1;
  int root = -1;
};

LagNodes build_lagrangian_graph(Graph& g, const ArchSpec& arch) {
  LagNodes out;
  out.bids = g.input("bids");
  out.coeff = g.input("coeff");
  out.neg_inv_b = g.input("neg_inv_b");
  out.reg_scale = g.input("reg_scale");
  ForwardNodes truth = regretnet::build_forward(g, arch, out.bids);
  out.revenue_sum = g.reduce_sum(truth.pay);

  std::size_t d = static_cast<std::size_t>(arch.report_dim());
  int objective = g.mul(out.revenue_sum, out.neg_inv_b);
  for (int i = 0; i < arch.bidders; ++i) {
    std::vector<std::size_t> block(d);
    for (std::size_t k = 0; k < d; ++k) {
      block[k] = static_cast<std::size_t>(i) * d + k;
    }
    int v_i = g.gather_cols(out.bids, block);

    int z_truth = g.gather_cols(truth.alloc, block);
    int p_truth = g.gather_cols(truth.pay, {static_cast<std::size_t>(i)});
    int ut = g.sub(g.reduce_sum_axis(g.mul(v_i, z_truth), 1), p_truth);
    out.u_truth.push_back(ut);

    int mis = g.input("mis" + std::to_string(i));
    out.mis.push_back(mis);
    ForwardNodes fm = regretnet::build_forward(g, arch, mis);
    int z_mis = g.gather_cols(fm.alloc, block);
    int p_mis = g.gather_cols(fm.pay, {static_cast<std::size_t>(i)});
    int um = g.sub(g.reduce_sum_axis(g.mul(v_i, z_mis), 1), p_mis);
    out.u_mis.push_back(um);

    int diff = g.sub(g.reduce_sum(um), g.reduce_sum(ut));
    int coeff_i = g.gather_cols(out.coeff, {static_cast<std::size_t>(i)});
    objective = g.add(objective, g.mul(g.mul(coeff_i, diff), out.reg_scale));
  }
  out.root = objective;
  return out;
}

std::vector<double> floored_mean_gains(const std::vector<Tensor>& gains) {
  std::vector<double> out;
  out.reserve(gains.size());
  for (const Tensor& g : gains) {
    double s = 0.0;
    for (std::size_t l = 0; l < g.size(); ++l) s += std::max(0.0, g[l]);
    out.push_back(s / static_cast<double>(g.size()));
  }
  return out;
}

}  // namespace

std::vector<double> empirical_regret(const ArchSpec& arch,
                                     const ParamStore& params,
                                     const Tensor& batch,
                                     const std::vector<Tensor>& misreports) {
  if (misreports.size() != static_cast<std::size_t>(arch.bidders)) {
    throw ConfigError("empirical_regret: one misreport block per bidder");
  }
  std::size_t d = static_cast<std::size_t>(arch.report_dim());
  Outcome truth = regretnet::forward(arch, params, batch);
  Tensor u_truth = regretnet::utilities(arch, batch, truth);
  std::vector<double> out;
  for (int i = 0; i < arch.bidders; ++i) {
    Tensor bids = with_block(batch, i, d, misreports[static_cast<std::size_t>(i)]);
    Outcome mis = regretnet::forward(arch, params, bids);
    Tensor u_mis = regretnet::utilities(arch, batch, mis);
    double s = 0.0;
    for (std::size_t l = 0; l < batch.rows(); ++l) {
      s += std::max(0.0, u_mis.at(l, static_cast<std::size_t>(i)) -
                             u_truth.at(l, static_cast<std::size_t>(i)));
    }
    out.push_back(s / static_cast<double>(batch.rows()));
  }
  return out;
}

SampleRegret sample_based_regret(const ArchSpec& arch, const ParamStore& params,
                                 const SettingSpec& spec, const Tensor& batch,
                                 std::size_t q, Rng& rng) {
  ReportSampler sampler = [&spec](int bidder, Rng& r, double* report) {
    spec.uniform_report(bidder, r, report);
  };
  return sample_based_regret(arch, params, sampler, batch, q, rng);
}

SampleRegret sample_based_regret(const ArchSpec& arch, const ParamStore& params,
                                 const ReportSampler& sampler,
                                 const Tensor& batch, std::size_t q, Rng& rng) {
  if (q == 0) throw ConfigError("sample_based_regret: q must be >= 1");
  std::size_t rows = batch.rows();
  std::size_t d = static_cast<std::size_t>(arch.report_dim());

  Graph g;
  std::vector<BidderUtilityNodes> nodes;
  for (int i = 0; i < arch.bidders; ++i) {
    nodes.push_back(regretnet::build_bidder_utility(g, arch, i));
  }
  Executor ex(g);
  regretnet::bind_params(ex, params);
  ex.bind("bids", batch);
  ex.bind("vals", batch);
  ex.forward();
  std::vector<Tensor> u_truth;
  for (int i = 0; i < arch.bidders; ++i) {
    u_truth.push_back(ex.value(nodes[static_cast<std::size_t>(i)].u_vec));
  }

  SampleRegret out;
  for (int i = 0; i < arch.bidders; ++i) {
    Tensor best_gain({rows, 1});
    best_gain.fill(-1e300);
    Tensor best_report({rows, d});
    Tensor candidate({rows, d});
    for (std::size_t s = 0; s < q; ++s) {
      for (std::size_t l = 0; l < rows; ++l) {
        sampler(i, rng, candidate.data() + l * d);
      }
      ex.bind("bids", with_block(batch, i, d, candidate));
      ex.forward();
      const Tensor& u_mis = ex.value(nodes[static_cast<std::size_t>(i)].u_vec);
      for (std::size_t l = 0; l < rows; ++l) {
        double gain = u_mis[l] - u_truth[static_cast<std::size_t>(i)][l];
        if (gain > best_gain[l]) {
          best_gain[l] = gain;
          for (std::size_t k = 0; k < d; ++k) {
            best_report.at(l, k) = candidate.at(l, k);
          }
        }
      }
    }
    double s = 0.0;
    for (std::size_t l = 0; l < rows; ++l) s += std::max(0.0, best_gain[l]);
    out.regret.push_back(s / static_cast<double>(rows));
    out.best_reports.push_back(std::move(best_report));
    out.gains.push_back(std::move(best_gain));
  }
  return out;
}

LagrangianEval eval_lagrangian(const ArchSpec& arch, const ParamStore& params,
                               const Tensor& batch,
                               const std::vector<Tensor>& misreports,
                               const std::vector<double>& lambda, double rho) {
  std::size_t n = static_cast<std::size_t>(arch.bidders);
  std::size_t b = batch.rows();
  std::size_t d = static_cast<std::size_t>(arch.report_dim());
  if (misreports.size() != n || lambda.size() != n) {
    throw ConfigError("eval_lagrangian: per-bidder inputs required");
  }

  Graph g;
  LagNodes nodes = build_lagrangian_graph(g, arch);
  Executor ex(g);
  regretnet::bind_params(ex, params);
  ex.bind("bids", batch);
  for (std::size_t i = 0; i < n; ++i) {
    ex.bind("mis" + std::to_string(i),
            with_block(batch, static_cast<int>(i), d, misreports[i]));
  }
  ex.bind("neg_inv_b", Tensor::scalar(-1.0 / static_cast<double>(b)));
  ex.bind("reg_scale", Tensor::scalar(term_scale(b)));
  ex.bind("coeff", Tensor({1, n}));
  ex.forward();

  std::vector<Tensor> gains(n);
  std::vector<double> diff_sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& ut = ex.value(nodes.u_truth[i]);
    const Tensor& um = ex.value(nodes.u_mis[i]);
    gains[i] = Tensor({b, 1});
    for (std::size_t l = 0; l < b; ++l) {
      gains[i][l] = um[l] - ut[l];
      diff_sums[i] += gains[i][l];
    }
  }
  LagrangianEval out;
  out.regret = floored_mean_gains(gains);
  out.revenue_sum = ex.value(nodes.revenue_sum).scalar_value();

  double scale = term_scale(b);
  out.value = -out.revenue_sum / static_cast<double>(b);
  for (std::size_t i = 0; i < n; ++i) {
    out.value += lambda[i] * scale * diff_sums[i];
    out.value += 0.5 * rho * scale * diff_sums[i] * diff_sums[i] /
                 static_cast<double>(b);
  }

  Tensor coeff({1, n});
  for (std::size_t i = 0; i < n; ++i) {
    coeff[i] = lambda[i] + rho * out.regret[i];
  }
  ex.bind("coeff", coeff);
  ex.forward();
  ex.backward(nodes.root);
  for (const auto& [name, t] : params) {
    if (g.input_ids().count(name)) {
      out.param_grads[name] = ex.input_grad(name);
    }
  }
  return out;
}

struct Trainer::BidderExec {
  Graph g;
  BidderUtilityNodes nodes;
  std::unique_ptr<Executor> ex;
};

Trainer::~Trainer() = default;

namespace {
SettingSpec validated_spec(const TrainConfig& cfg) {
  cfg.validate();
  return SettingSpec::by_id(cfg.setting_id);
}
}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg), spec_(validated_spec(cfg)) {
  arch_ = ArchSpec::for_setting(spec_, cfg_.hidden_layers, cfg_.hidden_width);
  Rng master(cfg_.seed);
  Rng init_rng = master.fork("param-init");
  params_ = regretnet::init_params(arch_, init_rng);
  Rng mis_rng = master.fork("misreport-init");
  cache_ = MisreportCache::init(spec_, cfg_.train_size, mis_rng);
  for (int i = 0; i < arch_.bidders; ++i) {
    auto be = std::make_unique<BidderExec>();
    be->nodes = regretnet::build_bidder_utility(be->g, arch_, i);
    be->ex = std::make_unique<Executor>(be->g);
    bidder_execs_.push_back(std::move(be));
  }
}

std::vector<Tensor> Trainer::optimize_misreports(
    const Tensor& batch, const std::vector<std::size_t>& rows) {
  std::vector<Tensor> mis_blocks;
  std::vector<Tensor> gains;
  misreport_phase(batch, rows, &mis_blocks, &gains);
  return mis_blocks;
}

void Trainer::misreport_phase(const Tensor& batch,
                              const std::vector<std::size_t>& rows,
                              std::vector<Tensor>* mis_blocks,
                              std::vector<Tensor>* gains) {
  std::size_t b = batch.rows();
  std::size_t d = static_cast<std::size_t>(arch_.report_dim());
  mis_blocks->assign(static_cast<std::size_t>(arch_.bidders), Tensor());
  gains->assign(static_cast<std::size_t>(arch_.bidders), Tensor());

  Outcome truth = regretnet::forward(arch_, params_, batch);
  Tensor u_truth = regretnet::utilities(arch_, batch, truth);

  for (int i = 0; i < arch_.bidders; ++i) {
    BidderExec& be = *bidder_execs_[static_cast<std::size_t>(i)];
    regretnet::bind_params(*be.ex, params_);
    be.ex->bind("vals", batch);

    Tensor& cached = cache_.per_bidder[static_cast<std::size_t>(i)];
    Tensor x({b, d});
    for (std::size_t l = 0; l < b; ++l) {
      for (std::size_t k = 0; k < d; ++k) {
        x.at(l, k) = cached.at(rows[l], k);
      }
    }

    auto grad_fn = [&](const Tensor& cur) {
      be.ex->bind("bids", with_block(batch, i, d, cur));
      be.ex->forward();
      be.ex->backward(be.nodes.u_sum);
      const Tensor& full = be.ex->grad(be.nodes.bids);
      Tensor g({b, d});
      for (std::size_t l = 0; l < b; ++l) {
        for (std::size_t k = 0; k < d; ++k) {
          g.at(l, k) = full.at(l, static_cast<std::size_t>(i) * d + k);
        }
      }
      return g;
    };
    auto project = [&](double* row) { spec_.project_report(i, row); };
    adam_ascent(x, cfg_.misreport_steps, cfg_.misreport_lr, grad_fn, project);

    // Utilities at the optimized misreports.
    be.ex->bind("bids", with_block(batch, i, d, x));
    be.ex->forward();
    const Tensor& u_mis = be.ex->value(be.nodes.u_vec);
    Tensor gain({b, 1});
    for (std::size_t l = 0; l < b; ++l) {
      gain[l] = u_mis[l] - u_truth.at(l, static_cast<std::size_t>(i));
    }

    for (std::size_t l = 0; l < b; ++l) {
      for (std::size_t k = 0; k < d; ++k) {
        cached.at(rows[l], k) = x.at(l, k);
      }
    }
    (*mis_blocks)[static_cast<std::size_t>(i)] = std::move(x);
    (*gains)[static_cast<std::size_t>(i)] = std::move(gain);
  }
}

void Trainer::sample_phase(const Tensor& batch, std::vector<Tensor>* mis_blocks,
                           std::vector<Tensor>* gains, Rng& rng) {
  SampleRegret sr = sample_based_regret(arch_, params_, spec_, batch,
                                        cfg_.misreport_samples, rng);
  *mis_blocks = std::move(sr.best_reports);
  *gains = std::move(sr.gains);
}

TrainResult Trainer::run() {
  auto t0 = std::chrono::steady_clock::now();
  Rng master(cfg_.seed);
  Rng data_rng = master.fork("train-data");
  Tensor profiles = spec_.sample_batch(data_rng, cfg_.train_size);
  Rng sample_rng = master.fork("sample-misreports");

  std::size_t n = static_cast<std::size_t>(arch_.bidders);
  std::size_t d = static_cast<std::size_t>(arch_.report_dim());

  Graph lag_graph;
  LagNodes lag = build_lagrangian_graph(lag_graph, arch_);
  Executor lag_ex(lag_graph);

  AdamConfig acfg;
  acfg.lr = cfg_.adam_lr;
  Adam opt(acfg);

  LagrangeState state;
  state.lambda.assign(n, cfg_.lambda_init);
  state.rho = cfg_.rho_init;

  History history;
  std::uint64_t t = 0;
  ParamStore snapshot = params_;  // last epoch-boundary parameters

  std::vector<std::size_t> order(cfg_.train_size);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    snapshot = params_;
    state.epoch = epoch;
    state.rho = cfg_.rho_init +
                cfg_.rho_increment * (epoch / cfg_.rho_inc_every_epochs);

    Rng shuffle_rng = master.fork("shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t k = cfg_.train_size; k > 1; --k) {
      std::size_t j = shuffle_rng.index(k);
      std::swap(order[k - 1], order[j]);
    }

    double epoch_rev = 0.0;
    std::vector<double> epoch_rgt(n, 0.0);
    std::size_t seen = 0;

    for (std::size_t begin = 0; begin < cfg_.train_size; begin += cfg_.batch) {
      std::size_t b = std::min(cfg_.batch, cfg_.train_size - begin);
      ++t;
      state.minibatch = t;

      std::vector<std::size_t> rows(order.begin() + static_cast<long>(begin),
                                    order.begin() + static_cast<long>(begin + b));
      Tensor batch({b, static_cast<std::size_t>(arch_.input_dim())});
      for (std::size_t l = 0; l < b; ++l) {
        for (std::size_t c = 0; c < batch.cols(); ++c) {
          batch.at(l, c) = profiles.at(rows[l], c);
        }
      }

      std::vector<Tensor> mis_blocks, gains;
      if (cfg_.mode == RegretMode::kGradient) {
        misreport_phase(batch, rows, &mis_blocks, &gains);
      } else {
        sample_phase(batch, &mis_blocks, &gains, sample_rng);
      }
      std::vector<double> rgt = floored_mean_gains(gains);

      Tensor coeff({1, n});
      for (std::size_t i = 0; i < n; ++i) {
        coeff[i] = state.lambda[i] + state.rho * rgt[i];
      }

      regretnet::bind_params(lag_ex, params_);
      lag_ex.bind("bids", batch);
      for (std::size_t i = 0; i < n; ++i) {
        lag_ex.bind("mis" + std::to_string(i),
                    with_block(batch, static_cast<int>(i), d, mis_blocks[i]));
      }
      lag_ex.bind("neg_inv_b", Tensor::scalar(-1.0 / static_cast<double>(b)));
      lag_ex.bind("reg_scale", Tensor::scalar(term_scale(b)));
      lag_ex.bind("coeff", coeff);
      lag_ex.forward();
      lag_ex.backward(lag.root);

      std::map<std::string, Tensor> grads;
      for (const auto& [name, tensor] : params_) {
        const Tensor& gt = lag_ex.input_grad(name);
        if (!gt.all_finite()) {
          throw NumericError("non-finite gradient for '" + name +
                             "' at minibatch " + std::to_string(t));
        }
        grads[name] = gt;
      }
      opt.step(params_, grads);
      if (!params_.all_finite()) {
        params_ = snapshot;  // leave the trainer holding finite parameters
        throw NumericError("non-finite parameters after minibatch " +
                           std::to_string(t));
      }

      epoch_rev += lag_ex.value(lag.revenue_sum).scalar_value();
      for (std::size_t i = 0; i < n; ++i) {
        epoch_rgt[i] += rgt[i] * static_cast<double>(b);
      }
      seen += b;

      if (t % static_cast<std::uint64_t>(cfg_.lagrange_every) == 0) {
        multiplier_update(state, rgt);
      }
    }

    EpochStats es;
    es.epoch = epoch;
    es.revenue = epoch_rev / static_cast<double>(seen);
    es.regret_per_bidder.resize(n);
    double rgt_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      es.regret_per_bidder[i] = epoch_rgt[i] / static_cast<double>(seen);
      rgt_sum += es.regret_per_bidder[i];
    }
    es.regret_mean = rgt_sum / static_cast<double>(n);
    es.lambda = state.lambda;
    es.rho = state.rho;
    es.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    history.epochs.push_back(std::move(es));
    if (cfg_.verbose) {
      const EpochStats& last = history.epochs.back();
      std::fprintf(stderr,
                   "epoch %3d rev %.4f rgt %.5f rho %.1f lambda0 %.3f (%.1fs)\n",
                   last.epoch, last.revenue, last.regret_mean, last.rho,
                   last.lambda.empty() ? 0.0 : last.lambda[0],
                   last.wall_time_s);
    }
  }

  TrainResult out;
  out.arch = arch_;
  out.params = params_;
  out.history = std::move(history);
  return out;
}

TrainResult train(const TrainConfig& cfg) {
  Trainer trainer(cfg);
  return trainer.run();
}

}  // namespace deepauction::training
