#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mechanism.hpp"
#include "rng.hpp"
#include "valuations.hpp"

namespace deepauction::baselines {

using diffcore::Tensor;
using valuations::SettingSpec;

// Single-item auction with a reserve price: the highest bidder at or
// above the reserve wins and pays max(second bid, reserve). Exactly the
// Myerson auction for symmetric regular distributions with the matching
// reserve.
struct SingleItemResult {
  int winner = -1;
  double payment = 0.0;
};
SingleItemResult myerson_single_item(const std::vector<double>& bids,
                                     double reserve);

// Variant with explicit strictly increasing virtual-value transforms:
// the highest positive virtual value wins and pays the inverse transform
// of the rival virtual maximum clamped at zero.
using VirtualFn = std::function<double(int bidder, double value)>;
SingleItemResult myerson_single_item(const std::vector<double>& bids,
                                     const VirtualFn& virt,
                                     const VirtualFn& virt_inverse);

// Grid search for the revenue-maximizing reserve of a single-item
// reserve auction, given per-profile highest and second-highest values
// (pass an empty `second_highest` for posted-price/single-bidder runs).
struct ReserveSearch {
  double reserve = 0.0;
  double revenue = 0.0;
};
ReserveSearch optimize_reserve(const std::vector<double>& highest,
                               const std::vector<double>& second_highest,
                               double lo, double hi, double step = 0.001);

// Sum over items of independently reserve-optimized single-item auctions
// (additive settings only), Monte Carlo over `samples` profiles.
double itemwise_myerson_revenue(const SettingSpec& spec, std::size_t samples,
                                Rng& rng, std::vector<ReserveSearch>* info = nullptr);

// Reserve-optimized auction selling the whole item set as one bundle,
// valued at each bidder's item-value sum.
double bundled_myerson_revenue(const SettingSpec& spec, std::size_t samples,
                               Rng& rng, ReserveSearch* info = nullptr);

// Second-price auction without reserve: the mean second-highest value of
// the setting's single item.
double spa_revenue(const SettingSpec& spec, std::size_t samples, Rng& rng);

// Expected revenue of the exact virtual-value Myerson auction for the
// asymmetric uniform environment v_i ~ U[0, i+1]: phi_i(v) = 2v - (i+1).
double asymmetric_uniform_myerson_revenue(int bidders, std::size_t samples,
                                          Rng& rng);

// Reference mechanisms for regret/IR checks.

// Single bidder, fixed per-item prices: the bidder buys every item priced
// at or below her bid.
class PostedPriceMechanism : public Mechanism {
 public:
  PostedPriceMechanism(int items, std::vector<double> prices);

  valuations::ValuationClass valuation_class() const override {
    return valuations::ValuationClass::kAdditive;
  }
  int bidders() const override { return 1; }
  int items() const override { return items_; }
  int report_dim() const override { return items_; }
  Outcome run(const Tensor& bids) const override;

 private:
  int items_;
  std::vector<double> prices_;
};

// n-bidder single-item second-price auction with a reserve.
class SpaMechanism : public Mechanism {
 public:
  SpaMechanism(int bidders, double reserve) : bidders_(bidders), reserve_(reserve) {}

  valuations::ValuationClass valuation_class() const override {
    return valuations::ValuationClass::kAdditive;
  }
  int bidders() const override { return bidders_; }
  int items() const override { return 1; }
  int report_dim() const override { return 1; }
  Outcome run(const Tensor& bids) const override;

 private:
  int bidders_;
  double reserve_;
};

}  // namespace deepauction::baselines
