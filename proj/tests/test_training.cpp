#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "baselines.hpp"
#include "training.hpp"

using namespace deepauction;
using namespace deepauction::training;
using diffcore::ParamStore;
using diffcore::Tensor;
using regretnet::ArchSpec;
using valuations::SettingSpec;
using valuations::ValuationClass;

namespace {

ArchSpec tiny_arch(const SettingSpec& spec) {
  ArchSpec a = ArchSpec::for_setting(spec, 2, 8);
  return a;
}

TrainConfig tiny_config(const std::string& setting) {
  TrainConfig cfg;
  cfg.setting_id = setting;
  cfg.hidden_layers = 2;
  cfg.hidden_width = 8;
  cfg.train_size = 64;
  cfg.batch = 32;
  cfg.epochs = 2;
  cfg.misreport_steps = 5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("adam ascent maximizes a concave toy utility") {
  // u(v) = -(v - 0.7)^2 on [0,1], start 0.1, rate 0.1. The analytic
  // argmax is 0.7; 25 steps cover most of the gap and the iterate
  // converges to the argmax well before the evaluation-protocol step
  // counts.
  auto grad = [](const Tensor& cur) {
    Tensor g({1, 1});
    g[0] = -2.0 * (cur[0] - 0.7);
    return g;
  };
  auto project = [](double* row) {
    row[0] = std::clamp(row[0], 0.0, 1.0);
  };
  Tensor x({1, 1}, {0.1});
  adam_ascent(x, 25, 0.1, grad, project);
  CHECK(std::abs(x[0] - 0.7) < 0.12);

  Tensor x2({1, 1}, {0.1});
  adam_ascent(x2, 200, 0.1, grad, project);
  CHECK(std::abs(x2[0] - 0.7) < 1e-3);
}

TEST_CASE("adam ascent stays put on a flat utility") {
  // Posted-price style region: zero gradient everywhere.
  Tensor x({3, 2}, {0.2, 0.4, 0.5, 0.6, 0.8, 0.1});
  Tensor before = x;
  auto grad = [](const Tensor& cur) { return Tensor(cur.shape()); };
  adam_ascent(x, 25, 0.1, grad, nullptr);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i] == before[i]);
  }
}

TEST_CASE("misreport ascent improves utilities and stays in support") {
  TrainConfig cfg = tiny_config("VI");  // 2 bidders, 2 items
  cfg.misreport_steps = 25;
  Trainer trainer(cfg);
  SettingSpec spec = trainer.spec();

  Rng rng(3);
  Tensor batch = spec.sample_batch(rng, 32);
  std::vector<std::size_t> rows(32);
  std::iota(rows.begin(), rows.end(), 0);

  // Utilities at the initial cache entries.
  std::vector<Tensor> init_blocks;
  for (int i = 0; i < spec.bidders(); ++i) {
    Tensor block({32, 2});
    for (std::size_t l = 0; l < 32; ++l) {
      for (std::size_t k = 0; k < 2; ++k) {
        block.at(l, k) = trainer.cache().per_bidder[static_cast<std::size_t>(i)].at(l, k);
      }
    }
    init_blocks.push_back(block);
  }
  std::vector<double> before = empirical_regret(trainer.arch(), trainer.params(),
                                                batch, init_blocks);
  std::vector<Tensor> after_blocks = trainer.optimize_misreports(batch, rows);
  std::vector<double> after = empirical_regret(trainer.arch(), trainer.params(),
                                               batch, after_blocks);

  int improved = 0, total = 0;
  for (int i = 0; i < spec.bidders(); ++i) {
    // Support check on every optimized entry.
    for (std::size_t l = 0; l < 32; ++l) {
      std::vector<double> rep(2);
      for (std::size_t k = 0; k < 2; ++k) {
        rep[k] = after_blocks[static_cast<std::size_t>(i)].at(l, k);
        CHECK(rep[k] >= 0.0);
        CHECK(rep[k] <= 1.0);
      }
    }
    ++total;
    if (after[static_cast<std::size_t>(i)] >=
        before[static_cast<std::size_t>(i)] - 1e-12) {
      ++improved;
    }
  }
  CHECK(improved == total);
}

TEST_CASE("ascent rarely hurts per-entry utility") {
  TrainConfig cfg = tiny_config("I");
  cfg.misreport_steps = 25;
  Trainer trainer(cfg);

  Rng rng(5);
  Tensor batch = trainer.spec().sample_batch(rng, 64);
  std::vector<std::size_t> rows(64);
  std::iota(rows.begin(), rows.end(), 0);

  Tensor init_block({64, 2});
  for (std::size_t l = 0; l < 64; ++l) {
    for (std::size_t k = 0; k < 2; ++k) {
      init_block.at(l, k) = trainer.cache().per_bidder[0].at(l, k);
    }
  }

  auto utility_at = [&](const Tensor& block) {
    Tensor bids = batch;
    for (std::size_t l = 0; l < 64; ++l) {
      for (std::size_t k = 0; k < 2; ++k) {
        bids.at(l, k) = block.at(l, k);
      }
    }
    Outcome out = regretnet::forward(trainer.arch(), trainer.params(), bids);
    return regretnet::utilities(trainer.arch(), batch, out);
  };

  Tensor u_before = utility_at(init_block);
  std::vector<Tensor> blocks = trainer.optimize_misreports(batch, rows);
  Tensor u_after = utility_at(blocks[0]);

  int ok = 0;
  for (std::size_t l = 0; l < 64; ++l) {
    if (u_after.at(l, 0) >= u_before.at(l, 0) - 1e-9) ++ok;
  }
  CHECK(ok >= 63);  // >= 99% of entries
}

TEST_CASE("empirical regret: truthful misreports give exactly zero") {
  TrainConfig cfg = tiny_config("VI");
  Trainer trainer(cfg);
  Rng rng(7);
  Tensor batch = trainer.spec().sample_batch(rng, 16);
  std::vector<Tensor> truthful;
  for (int i = 0; i < 2; ++i) {
    Tensor block({16, 2});
    for (std::size_t l = 0; l < 16; ++l) {
      for (std::size_t k = 0; k < 2; ++k) {
        block.at(l, k) = batch.at(l, static_cast<std::size_t>(i) * 2 + k);
      }
    }
    truthful.push_back(block);
  }
  std::vector<double> rgt =
      empirical_regret(trainer.arch(), trainer.params(), batch, truthful);
  for (double r : rgt) {
    CHECK(r == 0.0);
  }
}

TEST_CASE("first-price toy: known regret by hand") {
  // Single bidder, single item, pay-your-bid with full allocation:
  // u(v; b) = v - b. Truthful utility 0; misreporting 0.5 with value 1
  // gains 0.5 exactly.
  struct FirstPrice : Mechanism {
    valuations::ValuationClass valuation_class() const override {
      return ValuationClass::kAdditive;
    }
    int bidders() const override { return 1; }
    int items() const override { return 1; }
    int report_dim() const override { return 1; }
    Outcome run(const Tensor& bids) const override {
      Outcome out;
      out.alloc = Tensor({bids.rows(), 1});
      out.alloc.fill(1.0);
      out.pay = bids;
      return out;
    }
  };
  FirstPrice fp;
  Tensor vals({1, 1}, {1.0});
  Tensor bids({1, 1}, {0.5});
  Tensor u_truth = truthful_utilities(fp, vals);
  Tensor u_mis = mechanism_utilities(fp, vals, bids);
  CHECK(u_truth.at(0, 0) == doctest::Approx(0.0));
  CHECK(u_mis.at(0, 0) - u_truth.at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("grid-argmax misreports dominate grid-drawn misreports") {
  TrainConfig cfg = tiny_config("I");
  Trainer trainer(cfg);
  Rng rng(13);
  Tensor batch = trainer.spec().sample_batch(rng, 24);

  // Candidate misreports restricted to an 6x6 grid.
  const int g = 6;
  auto grid_point = [&](int a, int b) {
    return std::pair<double, double>{a / (g - 1.0), b / (g - 1.0)};
  };

  // Random grid misreports.
  Tensor random_block({24, 2});
  for (std::size_t l = 0; l < 24; ++l) {
    auto [x, y] = grid_point(static_cast<int>(rng.index(g)),
                             static_cast<int>(rng.index(g)));
    random_block.at(l, 0) = x;
    random_block.at(l, 1) = y;
  }

  // Exhaustive grid argmax per profile.
  Outcome truth = regretnet::forward(trainer.arch(), trainer.params(), batch);
  Tensor u_truth = regretnet::utilities(trainer.arch(), batch, truth);
  Tensor best_block({24, 2});
  std::vector<double> best_gain(24, -1e300);
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      auto [x, y] = grid_point(a, b);
      Tensor bids = batch;
      for (std::size_t l = 0; l < 24; ++l) {
        bids.at(l, 0) = x;
        bids.at(l, 1) = y;
      }
      Outcome mis = regretnet::forward(trainer.arch(), trainer.params(), bids);
      Tensor u_mis = regretnet::utilities(trainer.arch(), batch, mis);
      for (std::size_t l = 0; l < 24; ++l) {
        double gain = u_mis.at(l, 0) - u_truth.at(l, 0);
        if (gain > best_gain[l]) {
          best_gain[l] = gain;
          best_block.at(l, 0) = x;
          best_block.at(l, 1) = y;
        }
      }
    }
  }

  std::vector<double> random_rgt = empirical_regret(
      trainer.arch(), trainer.params(), batch, {random_block});
  std::vector<double> best_rgt =
      empirical_regret(trainer.arch(), trainer.params(), batch, {best_block});
  CHECK(best_rgt[0] >= random_rgt[0] - 1e-12);
}

TEST_CASE("lagrangian gradient") {
  SettingSpec spec = SettingSpec::by_id("VI");
  ArchSpec arch = ArchSpec::for_setting(spec, 1, 5);
  Rng rng(17);
  ParamStore params = regretnet::init_params(arch, rng);
  Tensor batch = spec.sample_batch(rng, 3);

  // Misreports with strictly positive gains (found by a short ascent), so
  // the per-profile floor is inactive and the objective is smooth.
  TrainConfig cfg = tiny_config("VI");
  cfg.hidden_layers = 1;
  cfg.hidden_width = 5;
  cfg.misreport_steps = 40;
  Trainer trainer(cfg);
  trainer.params_mut() = params;
  std::vector<std::size_t> rows{0, 1, 2};
  std::vector<Tensor> mis = trainer.optimize_misreports(batch, rows);

  SUBCASE("lambda=0 rho=0 reduces to the pure revenue gradient") {
    LagrangianEval e0 =
        eval_lagrangian(arch, params, batch, mis, {0.0, 0.0}, 0.0);
    // Reference: revenue-only objective.
    diffcore::Graph g;
    regretnet::ForwardNodes f = regretnet::build_forward(g, arch, g.input("bids"));
    int root = g.scalar_mul(g.reduce_sum(f.pay),
                            -1.0 / static_cast<double>(batch.rows()));
    std::map<std::string, diffcore::Tensor> bind;
    for (const auto& [name, t] : params) bind[name] = t;
    bind["bids"] = batch;
    diffcore::EvalGrad ref =
        diffcore::eval_and_grad(g, root, bind, params.names());
    for (const auto& [name, t] : params) {
      const Tensor& a = e0.param_grads.at(name);
      const Tensor& b = ref.grads.at(name);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
      }
    }
  }

  SUBCASE("zero regret keeps the penalty term out") {
    // Truthful misreports: gains are exactly zero, so the lambda/rho
    // terms contribute nothing beyond the revenue gradient... except the
    // lambda term acts on the *difference* graph whose gradient need not
    // vanish. Verify instead that the quadratic coefficient is zero:
    // gradients with rho=0 and rho=1000 agree at truthful misreports.
    std::vector<Tensor> truthful;
    for (int i = 0; i < 2; ++i) {
      Tensor block({3, 2});
      for (std::size_t l = 0; l < 3; ++l) {
        for (std::size_t k = 0; k < 2; ++k) {
          block.at(l, k) = batch.at(l, static_cast<std::size_t>(i) * 2 + k);
        }
      }
      truthful.push_back(block);
    }
    LagrangianEval a =
        eval_lagrangian(arch, params, batch, truthful, {0.3, 0.7}, 0.0);
    LagrangianEval b =
        eval_lagrangian(arch, params, batch, truthful, {0.3, 0.7}, 1000.0);
    CHECK(a.regret[0] == 0.0);
    CHECK(a.regret[1] == 0.0);
    for (const auto& [name, t] : params) {
      const Tensor& ga = a.param_grads.at(name);
      const Tensor& gb = b.param_grads.at(name);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-10));
      }
    }
  }

  SUBCASE("matches finite differences of the augmented objective") {
    std::vector<double> lambda{0.4, 1.3};
    double rho = 2.5;
    LagrangianEval e = eval_lagrangian(arch, params, batch, mis, lambda, rho);
    for (double r : e.regret) {
      REQUIRE(r > 0.0);  // floors inactive, otherwise the check is vacuous
    }
    double h = 1e-5;
    Rng pick(23);
    for (const std::string& name : params.names()) {
      const Tensor& base = params.get(name);
      std::size_t checks = std::min<std::size_t>(base.size(), 4);
      for (std::size_t c = 0; c < checks; ++c) {
        std::size_t idx = pick.index(base.size());
        ParamStore pp = params;
        pp.get_mut(name)[idx] += h;
        double fp = eval_lagrangian(arch, pp, batch, mis, lambda, rho).value;
        ParamStore pm = params;
        pm.get_mut(name)[idx] -= h;
        double fm = eval_lagrangian(arch, pm, batch, mis, lambda, rho).value;
        double fd = (fp - fm) / (2.0 * h);
        double ad = e.param_grads.at(name)[idx];
        double denom = std::max({std::abs(fd), std::abs(ad), 1e-6});
        CHECK(std::abs(fd - ad) / denom < 1e-4);
      }
    }
  }
}

TEST_CASE("multiplier update") {
  LagrangeState state;
  state.lambda = {0.0, 0.0};
  state.rho = 1.0;

  SUBCASE("zero regret leaves lambda unchanged") {
    multiplier_update(state, {0.0, 0.0});
    CHECK(state.lambda[0] == 0.0);
    CHECK(state.lambda[1] == 0.0);
  }

  SUBCASE("direct formula") {
    multiplier_update(state, {0.2, 0.1});
    CHECK(state.lambda[0] == doctest::Approx(0.2));
    CHECK(state.lambda[1] == doctest::Approx(0.1));
  }
}

TEST_CASE("rho schedule starts at 1 and bumps every 2 epochs") {
  TrainConfig cfg = tiny_config("I");
  cfg.epochs = 5;
  TrainResult res = train(cfg);
  REQUIRE(res.history.epochs.size() == 5);
  CHECK(res.history.epochs[0].rho == doctest::Approx(1.0));
  CHECK(res.history.epochs[1].rho == doctest::Approx(1.0));
  CHECK(res.history.epochs[2].rho == doctest::Approx(2.0));
  CHECK(res.history.epochs[3].rho == doctest::Approx(2.0));
  CHECK(res.history.epochs[4].rho == doctest::Approx(3.0));
}

TEST_CASE("sample-based regret") {
  SettingSpec spec = SettingSpec::by_id("I");
  ArchSpec arch = ArchSpec::for_setting(spec, 2, 8);
  Rng rng(29);
  ParamStore params = regretnet::init_params(arch, rng);
  Tensor batch = spec.sample_batch(rng, 32);

  SUBCASE("q=1 with truthful draws gives zero") {
    ReportSampler truthful_sampler = [&](int, Rng&, double*) {
      // overwritten below per row
    };
    // Draw "misreports" equal to the truthful reports via a stateful
    // sampler walking the batch rows.
    std::size_t row = 0;
    ReportSampler sampler = [&](int bidder, Rng&, double* rep) {
      for (std::size_t k = 0; k < 2; ++k) {
        rep[k] = batch.at(row, static_cast<std::size_t>(bidder) * 2 + k);
      }
      row = (row + 1) % 32;
    };
    Rng r2(1);
    SampleRegret sr = sample_based_regret(arch, params, sampler, batch, 1, r2);
    CHECK(sr.regret[0] == 0.0);
    (void)truthful_sampler;
  }

  SUBCASE("never exceeds the exhaustive grid value on a discrete toy") {
    // Misreports live on a 5x5 grid; sampling can only explore a subset.
    const int g = 5;
    ReportSampler grid_sampler = [&](int, Rng& r, double* rep) {
      rep[0] = static_cast<double>(r.index(g)) / (g - 1);
      rep[1] = static_cast<double>(r.index(g)) / (g - 1);
    };
    Rng r3(2);
    SampleRegret sampled =
        sample_based_regret(arch, params, grid_sampler, batch, 7, r3);

    // Exhaustive enumeration of the same grid.
    Outcome truth = regretnet::forward(arch, params, batch);
    Tensor u_truth = regretnet::utilities(arch, batch, truth);
    std::vector<double> best(32, 0.0);
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) {
        Tensor bids = batch;
        for (std::size_t l = 0; l < 32; ++l) {
          bids.at(l, 0) = a / (g - 1.0);
          bids.at(l, 1) = b / (g - 1.0);
        }
        Outcome mis = regretnet::forward(arch, params, bids);
        Tensor u_mis = regretnet::utilities(arch, batch, mis);
        for (std::size_t l = 0; l < 32; ++l) {
          best[l] = std::max(best[l], u_mis.at(l, 0) - u_truth.at(l, 0));
        }
      }
    }
    double grid_value = 0.0;
    for (double b : best) grid_value += std::max(b, 0.0);
    grid_value /= 32.0;
    CHECK(sampled.regret[0] <= grid_value + 1e-12);
  }

  SUBCASE("large q approaches the grid oracle on a 1-item toy") {
    SettingSpec spec1 = SettingSpec::by_id("sym-uniform-3");
    ArchSpec arch1 = ArchSpec::for_setting(spec1, 1, 6);
    Rng r0(5);
    ParamStore params1 = regretnet::init_params(arch1, r0);
    Tensor batch1 = spec1.sample_batch(r0, 16);

    Rng r4(3);
    SampleRegret approx =
        sample_based_regret(arch1, params1, spec1, batch1, 10000, r4);

    // 1001-point grid enumeration as the oracle, per bidder.
    Outcome truth = regretnet::forward(arch1, params1, batch1);
    Tensor u_truth = regretnet::utilities(arch1, batch1, truth);
    for (int i = 0; i < 3; ++i) {
      double oracle = 0.0;
      std::vector<double> per_row(16, 0.0);
      for (int a = 0; a <= 1000; ++a) {
        double x = a / 1000.0;
        Tensor bids = batch1;
        for (std::size_t l = 0; l < 16; ++l) {
          bids.at(l, static_cast<std::size_t>(i)) = x;
        }
        Outcome mis = regretnet::forward(arch1, params1, bids);
        Tensor u_mis = regretnet::utilities(arch1, batch1, mis);
        for (std::size_t l = 0; l < 16; ++l) {
          per_row[l] = std::max(per_row[l],
                                u_mis.at(l, static_cast<std::size_t>(i)) -
                                    u_truth.at(l, static_cast<std::size_t>(i)));
        }
      }
      for (double b : per_row) oracle += std::max(b, 0.0);
      oracle /= 16.0;
      CHECK(std::abs(approx.regret[static_cast<std::size_t>(i)] - oracle) < 0.01);
    }
  }

  SUBCASE("monotone nondecreasing in q, paired sign test") {
    int wins = 0, ties = 0;
    for (int trial = 0; trial < 30; ++trial) {
      Rng ra(100 + static_cast<std::uint64_t>(trial));
      Rng rb = ra;  // identical stream: q draws are a prefix of the 2q draws
      SampleRegret small = sample_based_regret(arch, params, spec, batch, 8, ra);
      SampleRegret big = sample_based_regret(arch, params, spec, batch, 16, rb);
      double s = 0.0, b = 0.0;
      for (double x : small.regret) s += x;
      for (double x : big.regret) b += x;
      if (b > s + 1e-15) {
        ++wins;
      } else if (b >= s - 1e-15) {
        ++ties;
      }
    }
    // With common random numbers 2q dominates q path by path.
    CHECK(wins + ties == 30);
    CHECK(wins > 0);
  }
}

TEST_CASE("training smoke: deterministic, history keys populated") {
  TrainConfig cfg = tiny_config("I");
  TrainResult a = train(cfg);
  TrainResult b = train(cfg);
  for (const auto& [name, t] : a.params) {
    const Tensor& other = b.params.get(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t[i] == other[i]);
    }
  }
  REQUIRE(a.history.epochs.size() == 2);
  const EpochStats& e = a.history.epochs.back();
  CHECK(e.regret_per_bidder.size() == 1);
  CHECK(e.lambda.size() == 1);
  CHECK(e.wall_time_s >= 0.0);
  CHECK(std::isfinite(e.revenue));
}

TEST_CASE("training smoke: sample-based mode and combinatorial class") {
  TrainConfig cfg = tiny_config("VII");
  cfg.mode = RegretMode::kSampleBased;
  cfg.misreport_samples = 10;
  TrainResult res = train(cfg);
  CHECK(res.history.epochs.size() == 2);
  CHECK(res.params.all_finite());

  TrainConfig cfg2 = tiny_config("IV");
  TrainResult res2 = train(cfg2);
  CHECK(res2.params.all_finite());
}

TEST_CASE("config validation") {
  TrainConfig cfg = tiny_config("I");
  cfg.setting_id = "nope";
  CHECK_THROWS_AS(train(cfg), ConfigError);
  cfg = tiny_config("I");
  cfg.batch = 0;
  CHECK_THROWS_AS(train(cfg), ConfigError);
  cfg = tiny_config("I");
  cfg.rho_init = -1.0;
  CHECK_THROWS_AS(train(cfg), ConfigError);
}
