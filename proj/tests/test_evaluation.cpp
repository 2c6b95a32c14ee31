#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "baselines.hpp"
#include "evaluation.hpp"
#include "lpexport.hpp"
#include "regretnet.hpp"
#include "rng.hpp"

using namespace deepauction;
using namespace deepauction::evaluation;
using diffcore::ParamStore;
using diffcore::Tensor;
using valuations::SettingSpec;
using valuations::ValuationClass;

TEST_CASE("revenue: zero payments give zero, stderr scales as 1/sqrt(L)") {
  struct FreeLunch : Mechanism {
    ValuationClass valuation_class() const override {
      return ValuationClass::kAdditive;
    }
    int bidders() const override { return 1; }
    int items() const override { return 1; }
    int report_dim() const override { return 1; }
    Outcome run(const Tensor& bids) const override {
      Outcome out;
      out.alloc = Tensor({bids.rows(), 1});
      out.alloc.fill(1.0);
      out.pay = Tensor({bids.rows(), 1});
      return out;
    }
  };
  FreeLunch mech;
  Tensor vals({100, 1});
  RevenueStats stats = revenue(mech, vals);
  CHECK(stats.mean == 0.0);
  CHECK(stats.stderr_ == 0.0);

  // 1/sqrt(L) scaling of the standard error within 20% on resampled sets.
  baselines::SpaMechanism spa(2, 0.0);
  Rng rng(3);
  auto sample_pairs = [&](std::size_t count) {
    Tensor batch({count, 2});
    for (std::size_t l = 0; l < count; ++l) {
      batch.at(l, 0) = rng.uniform();
      batch.at(l, 1) = rng.uniform();
    }
    return batch;
  };
  RevenueStats small = revenue(spa, sample_pairs(2000));
  RevenueStats large = revenue(spa, sample_pairs(32000));
  double ratio = small.stderr_ / large.stderr_;
  CHECK(ratio > 4.0 * 0.8);
  CHECK(ratio < 4.0 * 1.2);
}

TEST_CASE("posted price is regret-free under the estimator") {
  SettingSpec spec = SettingSpec::by_id("I");
  baselines::PostedPriceMechanism mech(2, {0.4, 0.6});
  Rng rng(5);
  Tensor profiles = spec.sample_batch(rng, 200);
  Rng eval_rng(7);
  std::vector<double> rgt =
      estimate_regret(mech, nullptr, spec, profiles, 20, 0, 0.1, eval_rng);
  REQUIRE(rgt.size() == 1);
  CHECK(rgt[0] < 1e-6);
}

TEST_CASE("first-price toy: ascent estimate matches a 101-point grid oracle") {
  // Single bidder, pay-your-bid, always allocated. Optimal misreport is 0,
  // regret = E[v] over the test profiles.
  struct FirstPrice : Mechanism, BidGradientOracle {
    ValuationClass valuation_class() const override {
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
    void utility_and_grad(int, const Tensor& bids, const Tensor& vals,
                          Tensor* u, Tensor* grad) override {
      std::size_t rows = bids.rows();
      if (u) {
        *u = Tensor({rows, 1});
        for (std::size_t l = 0; l < rows; ++l) {
          (*u)[l] = vals.at(l, 0) - bids.at(l, 0);
        }
      }
      if (grad) {
        *grad = Tensor({rows, 1});
        grad->fill(-1.0);
      }
    }
  };
  FirstPrice fp;
  // The estimator only touches bidder 0's support here, so the U[0,1]
  // single-item environment serves as the misreport domain.
  SettingSpec domain = SettingSpec::by_id("sym-uniform-3");
  Rng rng(11);
  Tensor profiles({300, 1});
  for (std::size_t l = 0; l < 300; ++l) profiles.at(l, 0) = rng.uniform();

  Rng eval_rng(13);
  std::vector<double> est = estimate_regret(fp, &fp, domain, profiles, 3, 200,
                                            0.1, eval_rng);

  // Grid oracle over 101 misreports.
  Tensor grid({101, 1});
  for (int a = 0; a <= 100; ++a) grid.at(static_cast<std::size_t>(a), 0) = a / 100.0;
  GridRegret oracle = grid_regret(fp, profiles, {grid});

  CHECK(std::abs(est[0] - oracle.mean_per_bidder[0]) < 0.005);
}

TEST_CASE("estimate_regret is monotone in restarts") {
  SettingSpec spec = SettingSpec::by_id("I");
  regretnet::ArchSpec arch = regretnet::ArchSpec::for_setting(spec, 2, 8);
  Rng rng(17);
  ParamStore params = regretnet::init_params(arch, rng);
  regretnet::RegretNetMechanism mech(arch, params);
  Tensor profiles = spec.sample_batch(rng, 50);

  // Same stream: the first r restarts of the larger run replicate the
  // smaller run, so the max can only grow.
  Rng a(23), b(23);
  std::vector<double> few =
      estimate_regret(mech, &mech, spec, profiles, 2, 30, 0.1, a);
  std::vector<double> many =
      estimate_regret(mech, &mech, spec, profiles, 6, 30, 0.1, b);
  CHECK(many[0] >= few[0] - 1e-12);
}

TEST_CASE("ir violation") {
  SUBCASE("regretnet outcomes are exactly zero") {
    for (auto cls : {ValuationClass::kAdditive, ValuationClass::kUnitDemand}) {
      regretnet::ArchSpec arch;
      arch.cls = cls;
      arch.bidders = 2;
      arch.items = 2;
      arch.hidden_layers = 2;
      arch.hidden_width = 8;
      Rng rng(19);
      ParamStore params = regretnet::init_params(arch, rng);
      regretnet::RegretNetMechanism mech(arch, params);
      Tensor profiles = SettingSpec::by_id("VI").sample_batch(rng, 300);
      CHECK(ir_violation(mech, profiles) == 0.0);
    }
  }

  SUBCASE("overcharging rule shows its overcharge") {
    // Charges value + 0.1 for a full allocation: u = -0.1 always.
    struct Overcharge : Mechanism {
      ValuationClass valuation_class() const override {
        return ValuationClass::kAdditive;
      }
      int bidders() const override { return 1; }
      int items() const override { return 1; }
      int report_dim() const override { return 1; }
      Outcome run(const Tensor& bids) const override {
        Outcome out;
        out.alloc = Tensor({bids.rows(), 1});
        out.alloc.fill(1.0);
        out.pay = Tensor({bids.rows(), 1});
        for (std::size_t l = 0; l < bids.rows(); ++l) {
          out.pay[l] = bids.at(l, 0) + 0.1;
        }
        return out;
      }
    };
    Overcharge mech;
    Rng rng(23);
    Tensor profiles({500, 1});
    for (std::size_t l = 0; l < 500; ++l) profiles.at(l, 0) = rng.uniform();
    CHECK(ir_violation(mech, profiles) == doctest::Approx(0.1).epsilon(1e-9));
  }

  SUBCASE("grid-lookup rules violate IR on continuous inputs") {
    // Full allocation, payment equal to the *grid* value: continuous
    // values below their bin center go negative.
    lpexport::LpModel model = lpexport::build_lp(1, 1, 5, 0.0, 1.0);
    std::vector<double> alloc(5, 1.0);
    std::vector<double> pay(5);
    for (int k = 0; k < 5; ++k) pay[static_cast<std::size_t>(k)] =
        lpexport::bin_center(k, 5, 0.0, 1.0);
    lpexport::GridMechanism mech(model, alloc, pay);
    Rng rng(29);
    Tensor profiles({20000, 1});
    for (std::size_t l = 0; l < 20000; ++l) profiles.at(l, 0) = rng.uniform();
    double viol = ir_violation(mech, profiles);
    CHECK(viol > 0.0);
    // Uniform values: |v - center| averages 1/4 of the bin width on the
    // losing side -> E max(center - v, 0) = 0.1/4 = 0.025.
    CHECK(viol == doctest::Approx(0.025).epsilon(0.1));
  }
}

TEST_CASE("delta bound") {
  BoundInputs in;
  in.hidden_layers = 2;
  in.hidden_width = 100;
  in.alloc_params = 10000;
  in.payment_params = 10000;
  in.weight_l1 = 250.0;
  in.sample_size = 640000;
  in.bidders = 1;
  in.items = 2;
  in.cls = ValuationClass::kAdditive;

  SUBCASE("doubling L strictly decreases the bound") {
    for (std::size_t l = 8; l < 1u << 20; l *= 2) {
      BoundInputs a = in, b = in;
      a.sample_size = l;
      b.sample_size = 2 * l;
      CHECK(delta_bound(b) < delta_bound(a));
    }
  }

  SUBCASE("combinatorial growth in m is logarithmic, not exponential") {
    BoundInputs comb = in;
    comb.cls = ValuationClass::kCombinatorial;
    comb.bidders = 2;
    comb.items = 5;
    double five = delta_bound(comb);
    comb.items = 10;
    double ten = delta_bound(comb);
    // The 2^m term sits inside the log: doubling m roughly scales the
    // bound by sqrt(log(n 2^10 ...)/log(n 2^5 ...)), far below 2.
    CHECK(ten / five < 1.5);
    CHECK(ten > five);  // still grows
  }

  SUBCASE("golden value at the reference configuration") {
    // sqrt(2 * 20000 * log(640000 * 250 * 100) / 640000), frozen from a
    // direct evaluation of the formula.
    double v = delta_bound(in);
    CHECK(v == doctest::Approx(1.21181307).epsilon(1e-6));
  }

  SUBCASE("positive-input preconditions") {
    BoundInputs bad = in;
    bad.weight_l1 = 0.0;
    CHECK_THROWS_AS(delta_bound(bad), ConfigError);
  }
}

TEST_CASE("bound inputs from a real parameter store") {
  SettingSpec spec = SettingSpec::by_id("I");
  regretnet::ArchSpec arch = regretnet::ArchSpec::for_setting(spec, 2, 10);
  Rng rng(31);
  ParamStore params = regretnet::init_params(arch, rng);
  BoundInputs in = bound_inputs_from(params, 2, 10, 5000, 1, 2,
                                     ValuationClass::kAdditive);
  CHECK(in.alloc_params + in.payment_params == params.scalar_count());
  CHECK(in.weight_l1 == doctest::Approx(params.l1_norm()));
  CHECK(delta_bound(in) > 0.0);
}

TEST_CASE("metrics report serializes with the documented keys") {
  MetricsReport r;
  r.setting = "I";
  r.model = "regretnet";
  r.scale = "desk";
  r.revenue_mean = 0.55;
  r.revenue_stderr = 0.003;
  r.regret_per_bidder = {0.001};
  r.regret_mean = 0.001;
  r.test_size = 10000;
  r.regret_test_size = 1000;
  std::string json = r.to_json();
  for (const char* key : {"setting", "model", "scale", "revenue", "regret",
                          "ir_violation", "test_size", "eval", "seed"}) {
    CHECK(json.find(key) != std::string::npos);
  }
  CHECK(std::string(MetricsReport::csv_header()).find("revenue_mean") !=
        std::string::npos);
  CHECK(r.to_csv_row().find("regretnet") != std::string::npos);
}
