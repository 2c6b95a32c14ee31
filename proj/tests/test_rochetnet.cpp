#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "evaluation.hpp"
#include "rng.hpp"
#include "rochetnet.hpp"

using namespace deepauction;
using namespace deepauction::rochetnet;
using diffcore::Tensor;
using valuations::SettingSpec;

namespace {

// Inverse sigmoid for building menus with exact slopes.
double logit(double p) { return std::log(p / (1.0 - p)); }

MenuNet random_net(MenuMode mode, int items, int entries, Rng& rng) {
  MenuNet net(mode, items, entries, 1000.0);
  for (auto& [name, t] : net.params()) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-2.0, 2.0);
  }
  return net;
}

}  // namespace

TEST_CASE("utility basics") {
  SUBCASE("deeply negative intercepts leave only the zero option") {
    MenuNet net(MenuMode::kAdditive, 2, 4, 1000.0);
    net.params().get_mut("beta").fill(-1e6);
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
      double v[2] = {rng.uniform(), rng.uniform()};
      CHECK(net.utility(v) == 0.0);
      double alloc[2], pay;
      net.mechanism(v, alloc, &pay);
      CHECK(alloc[0] == 0.0);
      CHECK(alloc[1] == 0.0);
      CHECK(pay == 0.0);
    }
  }

  SUBCASE("single full-weight entry") {
    MenuNet net(MenuMode::kAdditive, 1, 1, 1000.0);
    net.params().get_mut("alpha")[0] = logit(1.0 - 1e-12);
    net.params().get_mut("beta")[0] = -0.5;
    double v = 0.8;
    CHECK(net.utility(&v) == doctest::Approx(0.3).epsilon(1e-9));
  }

  SUBCASE("sampled convexity") {
    Rng rng(2);
    MenuNet net = random_net(MenuMode::kAdditive, 3, 12, rng);
    for (int t = 0; t < 10000; ++t) {
      double a[3], b[3], mix[3];
      double lam = rng.uniform();
      for (int k = 0; k < 3; ++k) {
        a[k] = rng.uniform(0.0, 2.0);
        b[k] = rng.uniform(0.0, 2.0);
        mix[k] = lam * a[k] + (1.0 - lam) * b[k];
      }
      CHECK(net.utility(mix) <=
            lam * net.utility(a) + (1.0 - lam) * net.utility(b) + 1e-9);
    }
  }
}

TEST_CASE("mechanism recovers posted prices and exact truthfulness") {
  SUBCASE("posted price from a single deterministic entry") {
    MenuNet net(MenuMode::kAdditive, 1, 1, 1000.0);
    net.params().get_mut("alpha")[0] = logit(1.0 - 1e-13);
    net.params().get_mut("beta")[0] = -0.25;  // price 0.25
    double alloc, pay;
    double bid = 0.8;
    net.mechanism(&bid, &alloc, &pay);
    CHECK(alloc == doctest::Approx(1.0));
    CHECK(pay == doctest::Approx(0.25));
    bid = 0.2;  // below the price: zero option
    net.mechanism(&bid, &alloc, &pay);
    CHECK(alloc == 0.0);
    CHECK(pay == 0.0);
  }

  SUBCASE("menu choice is dominant-strategy truthful") {
    Rng rng(3);
    MenuNet net = random_net(MenuMode::kAdditive, 2, 20, rng);
    for (int t = 0; t < 10000; ++t) {
      double v[2] = {rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5)};
      double b[2] = {rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5)};
      double alloc_v[2], pay_v, alloc_b[2], pay_b;
      net.mechanism(v, alloc_v, &pay_v);
      net.mechanism(b, alloc_b, &pay_b);
      double truthful = alloc_v[0] * v[0] + alloc_v[1] * v[1] - pay_v;
      double deviating = alloc_b[0] * v[0] + alloc_b[1] * v[1] - pay_b;
      CHECK(truthful >= deviating - 1e-9);
    }
  }
}

TEST_CASE("smoothed loss") {
  SUBCASE("high kappa approaches the hard mechanism's negated revenue") {
    Rng rng(5);
    MenuNet net = random_net(MenuMode::kAdditive, 2, 8, rng);
    // Rebuild with a very high temperature but the same parameters.
    MenuNet sharp(MenuMode::kAdditive, 2, 8, 1e6);
    sharp.params() = net.params();
    Tensor batch({64, 2});
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i] = rng.uniform(0.0, 1.5);
    }
    RochetMechanism hard(net);
    Outcome out = hard.run(batch);
    double mean_pay = 0.0;
    for (std::size_t l = 0; l < 64; ++l) mean_pay += out.pay[l];
    mean_pay /= 64.0;
    double loss = smoothed_revenue_loss(sharp, batch);
    CHECK(std::abs(loss + mean_pay) < 1e-6);
  }

  SUBCASE("two identical entries tie at softmax weight one half") {
    MenuNet net(MenuMode::kAdditive, 1, 2, 1000.0);
    net.params().get_mut("alpha").fill(0.3);
    net.params().get_mut("beta").fill(-0.1);
    // With identical entries the smoothed gradient weights are equal by
    // symmetry; the smoothed loss must equal the single-entry loss.
    MenuNet single(MenuMode::kAdditive, 1, 1, 1000.0);
    single.params().get_mut("alpha")[0] = 0.3;
    single.params().get_mut("beta")[0] = -0.1;
    Tensor batch({32, 1});
    Rng rng(6);
    for (std::size_t i = 0; i < 32; ++i) batch[i] = rng.uniform(0.3, 1.0);
    CHECK(smoothed_revenue_loss(net, batch) ==
          doctest::Approx(smoothed_revenue_loss(single, batch)).epsilon(1e-9));
  }
}

TEST_CASE("theorem-style menu utility properties, sampled") {
  Rng rng(7);
  for (auto mode : {MenuMode::kAdditive, MenuMode::kUnitDemand}) {
    MenuNet net = random_net(mode, 3, 15, rng);
    for (int t = 0; t < 3000; ++t) {
      double a[3], b[3];
      for (int k = 0; k < 3; ++k) {
        a[k] = rng.uniform(0.0, 2.0);
        b[k] = rng.uniform(0.0, 2.0);
      }
      double ua = net.utility(a);
      double ub = net.utility(b);
      // nonnegative
      CHECK(ua >= 0.0);
      // 1-Lipschitz in l1
      double dist = 0.0;
      for (int k = 0; k < 3; ++k) dist += std::abs(a[k] - b[k]);
      CHECK(std::abs(ua - ub) <= dist + 1e-9);
      // monotone: raising coordinates never decreases utility
      double shifted[3];
      for (int k = 0; k < 3; ++k) shifted[k] = a[k] + rng.uniform(0.0, 0.5);
      CHECK(net.utility(shifted) >= ua - 1e-12);
    }
  }
}

TEST_CASE("unit-demand entries keep slope sums at most one") {
  Rng rng(8);
  MenuNet net = random_net(MenuMode::kUnitDemand, 4, 25, rng);
  Tensor w = net.weights();
  for (int e = 0; e < 25; ++e) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
      double x = w.at(static_cast<std::size_t>(e), static_cast<std::size_t>(k));
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
      s += x;
    }
    CHECK(s <= 1.0 + 1e-12);
  }
}

TEST_CASE("grid-enumeration regret of a random menu is zero") {
  Rng rng(9);
  MenuNet net = random_net(MenuMode::kAdditive, 2, 30, rng);
  RochetMechanism mech(net);
  SettingSpec spec = SettingSpec::by_id("I");
  Tensor profiles = spec.sample_batch(rng, 100);
  Tensor grid = evaluation::misreport_grid(spec, 0, 51);
  evaluation::GridRegret out = evaluation::grid_regret(mech, profiles, {grid});
  CHECK(out.max_over_all < 1e-9);
}

TEST_CASE("menu csv export") {
  Rng rng(10);
  MenuNet net = random_net(MenuMode::kAdditive, 2, 5, rng);
  std::string path =
      (std::filesystem::temp_directory_path() / "da_menu_test.csv").string();
  write_menu_csv(net, path);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "entry,w1,w2,price");
  int lines = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == 5);
  std::remove(path.c_str());
}

TEST_CASE("training rejects multi-bidder settings") {
  RochetTrainConfig cfg;
  cfg.setting_id = "VI";
  CHECK_THROWS_AS(train_rochetnet(cfg), ConfigError);
}

TEST_CASE("training smoke: tiny run is deterministic and improves") {
  RochetTrainConfig cfg;
  cfg.setting_id = "I";
  cfg.entries = 20;
  cfg.train_size = 256;
  cfg.epochs = 10;
  cfg.seed = 4;
  RochetTrainResult a = train_rochetnet(cfg);
  RochetTrainResult b = train_rochetnet(cfg);
  for (const auto& [name, t] : a.net.params()) {
    const Tensor& other = b.net.params().get(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(t[i] == other[i]);
    }
  }
  CHECK(a.history.back().loss <= a.history.front().loss);
}
