#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rng.hpp"
#include "valuations.hpp"

using namespace deepauction;
using namespace deepauction::valuations;

TEST_CASE("uniform settings stay inside their supports") {
  Rng rng(1);
  SettingSpec s1 = SettingSpec::by_id("I");
  for (int t = 0; t < 2000; ++t) {
    Tensor p = s1.sample_profile(rng);
    CHECK(p.at(0, 0) >= 0.0);
    CHECK(p.at(0, 0) <= 1.0);
    CHECK(p.at(0, 1) >= 0.0);
    CHECK(p.at(0, 1) <= 1.0);
  }

  SettingSpec s2 = SettingSpec::by_id("II");
  for (int t = 0; t < 2000; ++t) {
    Tensor p = s2.sample_profile(rng);
    CHECK(p.at(0, 0) >= 4.0);
    CHECK(p.at(0, 0) <= 16.0);
    CHECK(p.at(0, 1) >= 4.0);
    CHECK(p.at(0, 1) <= 7.0);
  }

  SettingSpec s5 = SettingSpec::by_id("V");
  for (int t = 0; t < 2000; ++t) {
    Tensor p = s5.sample_profile(rng);
    for (int k = 0; k < 2; ++k) {
      CHECK(p.at(0, static_cast<std::size_t>(k)) >= 2.0);
      CHECK(p.at(0, static_cast<std::size_t>(k)) <= 3.0);
    }
  }
}

TEST_CASE("triangle setting: constraint always holds, mean matches") {
  Rng rng(2);
  SettingSpec s = SettingSpec::by_id("III");
  double sum_v1 = 0.0;
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) {
    Tensor p = s.sample_profile(rng);
    REQUIRE(p.at(0, 0) + p.at(0, 1) <= 1.0);
    REQUIRE(p.at(0, 0) >= 0.0);
    REQUIRE(p.at(0, 1) >= 0.0);
    sum_v1 += p.at(0, 0);
  }
  CHECK(std::abs(sum_v1 / draws - 1.0 / 3.0) < 0.01);
}

TEST_CASE("combinatorial settings honor the bundle rule") {
  Rng rng(3);
  for (const char* id : {"VII", "VIII"}) {
    SettingSpec s = SettingSpec::by_id(id);
    REQUIRE(s.report_dim() == 3);
    for (int t = 0; t < 5000; ++t) {
      Tensor p = s.sample_profile(rng);
      for (int i = 0; i < 2; ++i) {
        double v1 = p.at(static_cast<std::size_t>(i), 0);
        double v2 = p.at(static_cast<std::size_t>(i), 1);
        double vb = p.at(static_cast<std::size_t>(i), 2);
        CHECK(vb >= v1 + v2 - 1.0);
        CHECK(vb <= v1 + v2 + 1.0);
        CHECK(v1 >= s.item_lo(i, 0));
        CHECK(v1 <= s.item_hi(i, 0));
        CHECK(v2 >= s.item_lo(i, 1));
        CHECK(v2 <= s.item_hi(i, 1));
      }
    }
  }
  SettingSpec s8 = SettingSpec::by_id("VIII");
  CHECK(s8.item_hi(1, 0) == 5.0);
  CHECK(s8.item_hi(0, 0) == 2.0);
}

TEST_CASE("seeded determinism") {
  SettingSpec s = SettingSpec::by_id("VI");
  Rng a(99), b(99);
  Tensor ba = s.sample_batch(a, 64);
  Tensor bb = s.sample_batch(b, 64);
  for (std::size_t i = 0; i < ba.size(); ++i) {
    CHECK(ba[i] == bb[i]);
  }
}

TEST_CASE("empirical means match analytic means within 3 sigma") {
  const std::size_t draws = 1000000;
  for (const char* id : {"I", "II", "V", "VI", "IX"}) {
    SettingSpec s = SettingSpec::by_id(id);
    Rng rng(1234);
    Tensor batch = s.sample_batch(rng, draws);
    for (int i = 0; i < s.bidders(); ++i) {
      for (int k = 0; k < s.items(); ++k) {
        std::size_t col = static_cast<std::size_t>(i) * s.report_dim() + k;
        double mean = 0.0;
        for (std::size_t l = 0; l < draws; ++l) mean += batch.at(l, col);
        mean /= static_cast<double>(draws);
        double width = s.item_hi(i, k) - s.item_lo(i, k);
        double sigma = width / std::sqrt(12.0 * static_cast<double>(draws));
        CHECK(std::abs(mean - s.item_mean(i, k)) < 3.0 * sigma + 1e-12);
      }
    }
  }
}

TEST_CASE("irregular distribution splits mass 3/4 vs 1/4") {
  SettingSpec s = SettingSpec::by_id("irregular-3");
  Rng rng(5);
  const int draws = 200000;
  int low = 0;
  for (int t = 0; t < draws; ++t) {
    Tensor p = s.sample_profile(rng);
    double v = p.at(0, 0);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 8.0);
    if (v < 3.0) ++low;
  }
  double frac = static_cast<double>(low) / draws;
  double sigma = std::sqrt(0.75 * 0.25 / draws);
  CHECK(std::abs(frac - 0.75) < 3.0 * sigma);
}

TEST_CASE("exponential single-item setting has the right mean") {
  SettingSpec s = SettingSpec::by_id("exp-3");
  Rng rng(8);
  const int draws = 400000;
  double sum = 0.0;
  for (int t = 0; t < draws; ++t) {
    Tensor p = s.sample_profile(rng);
    REQUIRE(p.at(0, 0) >= 0.0);
    sum += p.at(0, 0);
  }
  CHECK(std::abs(sum / draws - 3.0) < 0.03);
}

TEST_CASE("bundle_value semantics") {
  double add[] = {0.2, 0.5};
  CHECK(bundle_value(ValuationClass::kAdditive, add, 2, 0b11) ==
        doctest::Approx(0.7));
  CHECK(bundle_value(ValuationClass::kUnitDemand, add, 2, 0b11) ==
        doctest::Approx(0.5));
  CHECK(bundle_value(ValuationClass::kAdditive, add, 2, 0) == 0.0);
  CHECK(bundle_value(ValuationClass::kUnitDemand, add, 2, 0) == 0.0);
  double comb[] = {1.0, 2.0, 4.0};
  CHECK(bundle_value(ValuationClass::kCombinatorial, comb, 2, 0b11) ==
        doctest::Approx(4.0));
  CHECK(bundle_value(ValuationClass::kCombinatorial, comb, 2, 0) == 0.0);
}

TEST_CASE("expected_utility_value") {
  Tensor v({2}, {1.0, 1.0});
  Tensor z({2}, {0.3, 0.4});
  CHECK(expected_utility_value(v, z) == doctest::Approx(0.7));
  Tensor zero({2}, {0.0, 0.0});
  CHECK(expected_utility_value(v, zero) == 0.0);
  // combinatorial: 2 items, v_{1}=1, v_{2}=2, v_{12}=4, z uniform 1/3
  Tensor vc({3}, {1.0, 2.0, 4.0});
  Tensor zc({3}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(expected_utility_value(vc, zc) == doctest::Approx(7.0 / 3.0));
  Tensor bad({3}, {0.0, 0.0, 0.0});
  CHECK_THROWS_AS(expected_utility_value(v, bad), ValuationError);
}

TEST_CASE("misreport projection lands in the support") {
  Rng rng(6);
  for (const char* id : {"I", "II", "III", "V", "VII", "VIII"}) {
    SettingSpec s = SettingSpec::by_id(id);
    for (int t = 0; t < 2000; ++t) {
      std::vector<double> rep(static_cast<std::size_t>(s.report_dim()));
      for (double& x : rep) x = rng.uniform(-10.0, 20.0);
      int bidder = static_cast<int>(rng.index(static_cast<std::size_t>(s.bidders())));
      s.project_report(bidder, rep.data());
      // Re-projection is a no-op and the result passes the support checks.
      std::vector<double> again = rep;
      s.project_report(bidder, again.data());
      for (std::size_t k = 0; k < rep.size(); ++k) {
        CHECK(rep[k] == doctest::Approx(again[k]).epsilon(1e-12));
      }
      if (s.kind() == SettingSpec::Kind::kTriangle) {
        CHECK(rep[0] >= 0.0);
        CHECK(rep[1] >= 0.0);
        CHECK(rep[0] + rep[1] <= 1.0 + 1e-12);
      } else if (s.kind() == SettingSpec::Kind::kCombShift) {
        CHECK(rep[2] >= rep[0] + rep[1] - 1.0 - 1e-12);
        CHECK(rep[2] <= rep[0] + rep[1] + 1.0 + 1e-12);
      } else {
        for (int k = 0; k < s.items(); ++k) {
          CHECK(rep[static_cast<std::size_t>(k)] >= s.item_lo(bidder, k));
          CHECK(rep[static_cast<std::size_t>(k)] <= s.item_hi(bidder, k));
        }
      }
    }
  }
}

TEST_CASE("unknown setting id raises") {
  CHECK_THROWS_AS(SettingSpec::by_id("XIII"), ValuationError);
  CHECK(SettingSpec::known_id("IX"));
  CHECK_FALSE(SettingSpec::known_id("nope"));
}

TEST_CASE("profile csv round trip") {
  SettingSpec s = SettingSpec::by_id("VII");
  Rng rng(10);
  Tensor batch = s.sample_batch(rng, 17);
  std::string path =
      (std::filesystem::temp_directory_path() / "da_profiles_test.csv").string();
  write_profiles_csv(s, batch, path);
  Tensor back = read_profiles_csv(s, path);
  REQUIRE(back.same_shape(batch));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(back[i] == batch[i]);
  }
  std::remove(path.c_str());
}
