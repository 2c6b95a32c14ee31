#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "lpexport.hpp"

using namespace deepauction;
using namespace deepauction::lpexport;
using diffcore::Tensor;

TEST_CASE("variable and constraint counts") {
  SUBCASE("2 bidders, 3 items, 5 bins") {
    LpCounts c = lp_counts(2, 3, 5);
    CHECK(c.variables == 125000);
    CHECK(c.ic_ir() == 3906250);
  }

  SUBCASE("2 bidders, 3 items, 6 bins") {
    LpCounts c = lp_counts(2, 3, 6);
    CHECK(c.variables == 373248);   // 3.73e5
    CHECK(c.ic_ir() == 20155392);   // 2.02e7
  }

  SUBCASE("1 bidder, 1 item, 2 bins: hand count") {
    LpCounts c = lp_counts(1, 1, 2);
    CHECK(c.profiles == 2);
    CHECK(c.variables == 4);   // 2 * (1 + 1)
    CHECK(c.ic_ir() == 4);     // 2 * (1 * 1 + 1)
  }
}

TEST_CASE("variable cap produces an error carrying the counts") {
  try {
    build_lp(2, 3, 7, 0.0, 1.0, 500000);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("941192") != std::string::npos);  // 7^6 * 8 variables
    CHECK(msg.find("exceed") != std::string::npos);
  }
}

TEST_CASE("profile rounding") {
  SUBCASE("snaps to the nearest of five centers") {
    // centers 0.1 0.3 0.5 0.7 0.9
    CHECK(round_value(0.62, 5, 0.0, 1.0) == doctest::Approx(0.7));
  }

  SUBCASE("a value at a center is unchanged") {
    CHECK(round_value(0.3, 5, 0.0, 1.0) == doctest::Approx(0.3));
  }

  SUBCASE("exact midpoints snap down") {
    CHECK(round_value(0.2, 5, 0.0, 1.0) == doctest::Approx(0.1));
    CHECK(round_value(0.4, 5, 0.0, 1.0) == doctest::Approx(0.3));
  }

  SUBCASE("idempotence") {
    Tensor p({2, 2}, {0.13, 0.77, 0.5001, 0.99});
    Tensor once = round_profile(p, 5, 0.0, 1.0);
    Tensor twice = round_profile(once, 5, 0.0, 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(once[i] == twice[i]);
    }
  }

  SUBCASE("out-of-range values clamp to the boundary bins") {
    CHECK(round_value(-0.4, 5, 0.0, 1.0) == doctest::Approx(0.1));
    CHECK(round_value(2.5, 5, 0.0, 1.0) == doctest::Approx(0.9));
  }
}

TEST_CASE("constraint enumeration matches the counting formulas") {
  LpModel model = build_lp(2, 2, 3, 0.0, 1.0);
  std::size_t ic = 0, ir = 0, feas = 0;
  std::set<std::string> names;
  enumerate_constraints(model, [&](const LpConstraint& c) {
    REQUIRE(names.insert(c.name).second);  // no duplicates
    if (c.name.rfind("ic_", 0) == 0) {
      ++ic;
    } else if (c.name.rfind("ir_", 0) == 0) {
      ++ir;
    } else {
      ++feas;
    }
  });
  CHECK(ic == model.counts.ic);
  CHECK(ir == model.counts.ir);
  CHECK(feas == model.counts.feasibility);
}

TEST_CASE("written file round-trips through the reader") {
  LpModel model = build_lp(1, 2, 2, 0.0, 1.0);
  std::string path =
      (std::filesystem::temp_directory_path() / "da_tiny.lp").string();
  write_lp(model, path);
  LpParsed parsed = read_lp(path);

  CHECK(parsed.declared_variables == model.counts.variables);

  // Objective covers every payment variable with the uniform probability.
  CHECK(parsed.objective.size() == model.counts.profiles);
  for (const auto& [var, coeff] : parsed.objective) {
    CHECK(var.rfind("pay_", 0) == 0);
    CHECK(coeff == doctest::Approx(1.0 / static_cast<double>(model.counts.profiles)));
  }

  // Constraints identical, in order, coefficient for coefficient.
  std::vector<LpConstraint> expected;
  enumerate_constraints(model, [&](const LpConstraint& c) {
    expected.push_back(c);
  });
  REQUIRE(parsed.constraints.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(parsed.constraints[i].name == expected[i].name);
    CHECK(parsed.constraints[i].relation == expected[i].relation);
    CHECK(parsed.constraints[i].rhs == doctest::Approx(expected[i].rhs));
    REQUIRE(parsed.constraints[i].terms.size() == expected[i].terms.size());
    for (std::size_t t = 0; t < expected[i].terms.size(); ++t) {
      CHECK(parsed.constraints[i].terms[t].first == expected[i].terms[t].first);
      CHECK(parsed.constraints[i].terms[t].second ==
            doctest::Approx(expected[i].terms[t].second));
    }
  }

  // Bounds present for every variable.
  CHECK(parsed.bounds.size() == model.counts.variables);
  std::remove(path.c_str());
}

TEST_CASE("constraint line count matches the model") {
  LpModel model = build_lp(2, 1, 2, 0.0, 1.0);
  std::string path =
      (std::filesystem::temp_directory_path() / "da_tiny2.lp").string();
  write_lp(model, path);
  LpParsed parsed = read_lp(path);
  CHECK(parsed.constraints.size() ==
        model.counts.ic_ir() + model.counts.feasibility);
  std::remove(path.c_str());
}

TEST_CASE("ic constraints reference unique (profile, bidder, misreport) triples") {
  LpModel model = build_lp(2, 2, 3, 0.0, 1.0);
  std::set<std::string> triples;
  enumerate_constraints(model, [&](const LpConstraint& c) {
    if (c.name.rfind("ic_", 0) == 0) {
      REQUIRE(triples.insert(c.name).second);
    }
  });
  CHECK(triples.size() == model.counts.ic);
}

TEST_CASE("grid mechanism rounds continuous bids to table entries") {
  LpModel model = build_lp(1, 1, 5, 0.0, 1.0);
  std::vector<double> alloc(5, 1.0);
  std::vector<double> pay(5);
  for (int k = 0; k < 5; ++k) {
    pay[static_cast<std::size_t>(k)] = bin_center(k, 5, 0.0, 1.0);
  }
  GridMechanism mech(model, alloc, pay);
  Tensor bids({3, 1}, {0.62, 0.3, 0.05});
  Outcome out = mech.run(bids);
  CHECK(out.pay[0] == doctest::Approx(0.7));
  CHECK(out.pay[1] == doctest::Approx(0.3));
  CHECK(out.pay[2] == doctest::Approx(0.1));
}
