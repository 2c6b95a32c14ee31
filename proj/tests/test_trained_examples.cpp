// Trained-model revenue checks for the strategyproof architectures.
// These run full (but cheap) trainings, so they live apart from the
// per-module unit suites.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evaluation.hpp"
#include "myersonnet.hpp"
#include "rng.hpp"
#include "rochetnet.hpp"
#include "valuations.hpp"

using namespace deepauction;
using diffcore::Tensor;
using valuations::SettingSpec;

namespace {

evaluation::RevenueStats rochet_revenue(const std::string& setting,
                                        std::uint64_t seed) {
  rochetnet::RochetTrainConfig cfg;
  cfg.setting_id = setting;
  cfg.entries = 1000;
  cfg.kappa = 1000.0;
  cfg.train_size = 50000;
  cfg.epochs = 120;
  cfg.seed = seed;
  rochetnet::RochetTrainResult res = rochetnet::train_rochetnet(cfg);
  rochetnet::RochetMechanism mech(res.net);
  SettingSpec spec = SettingSpec::by_id(setting);
  Rng rng(seed);
  Rng test_rng = rng.fork("test-data");
  Tensor test = spec.sample_batch(test_rng, 10000);
  return evaluation::revenue(mech, test);
}

evaluation::RevenueStats myerson_revenue(const std::string& setting,
                                         std::uint64_t seed) {
  myersonnet::MyersonTrainConfig cfg;
  cfg.setting_id = setting;
  cfg.seed = seed;
  myersonnet::MyersonTrainResult res = myersonnet::train_myersonnet(cfg);
  myersonnet::MyersonMechanism mech(res.net);
  SettingSpec spec = SettingSpec::by_id(setting);
  Rng rng(seed);
  Rng test_rng = rng.fork("test-data");
  Tensor test = spec.sample_batch(test_rng, 10000);
  return evaluation::revenue(mech, test);
}

}  // namespace

TEST_CASE("menu networks reach the reference revenues") {
  SUBCASE("setting V (unit-demand mode)") {
    evaluation::RevenueStats rev = rochet_revenue("V", 3);
    CHECK(rev.mean == doctest::Approx(2.136).epsilon(0.01 / 2.136));
  }

  SUBCASE("setting IX (ten items)") {
    evaluation::RevenueStats rev = rochet_revenue("IX", 3);
    CHECK(rev.mean == doctest::Approx(3.459).epsilon(0.02 / 3.459));
  }
}

TEST_CASE("virtual-value networks reach the reference revenues") {
  SUBCASE("symmetric uniform, three bidders") {
    evaluation::RevenueStats rev = myerson_revenue("sym-uniform-3", 5);
    CHECK(std::abs(rev.mean - 0.531) < 0.005);
  }

  SUBCASE("exponential, three bidders") {
    evaluation::RevenueStats rev = myerson_revenue("exp-3", 5);
    CHECK(std::abs(rev.mean - 2.747) < 0.02);
  }

  SUBCASE("irregular mixture, three bidders") {
    evaluation::RevenueStats rev = myerson_revenue("irregular-3", 1);
    CHECK(rev.mean >= 2.34);
  }
}

TEST_CASE("trained menus stay exactly strategyproof") {
  rochetnet::RochetTrainConfig cfg;
  cfg.setting_id = "I";
  cfg.entries = 50;
  cfg.train_size = 2000;
  cfg.epochs = 40;
  cfg.seed = 9;
  rochetnet::RochetTrainResult res = rochetnet::train_rochetnet(cfg);
  rochetnet::RochetMechanism mech(res.net);
  SettingSpec spec = SettingSpec::by_id("I");
  Rng rng(9);
  Tensor profiles = spec.sample_batch(rng, 200);
  Tensor grid = evaluation::misreport_grid(spec, 0, 51);
  evaluation::GridRegret gr = evaluation::grid_regret(mech, profiles, {grid});
  CHECK(gr.max_over_all < 1e-9);
}
