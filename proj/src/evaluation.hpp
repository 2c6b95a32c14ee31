#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mechanism.hpp"
#include "paramstore.hpp"
#include "rng.hpp"
#include "valuations.hpp"

namespace deepauction::evaluation {

using diffcore::ParamStore;
using diffcore::Tensor;
using valuations::SettingSpec;
using valuations::ValuationClass;

struct RevenueStats {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Mean and standard error of the truthful revenue sum over a test set.
RevenueStats revenue(const Mechanism& mech, const Tensor& profiles);

// Negative-utility mass under truthful bidding:
//   (1/Ln) sum_l sum_i max(-u_i(v^(l)), 0).
double ir_violation(const Mechanism& mech, const Tensor& profiles);

// Test-time regret estimation: multi-restart projected Adam ascent on
// each bidder's misreport, initial points drawn from the setting's own
// distribution. For mechanisms without bid gradients (oracle == nullptr)
// the restarts degenerate to random search. Per (profile, bidder) the
// best post-ascent utility gain over all restarts is kept, floored at
// zero, then averaged over profiles.
std::vector<double> estimate_regret(const Mechanism& mech,
                                    BidGradientOracle* oracle,
                                    const SettingSpec& spec,
                                    const Tensor& profiles, int restarts,
                                    int steps, double step_size, Rng& rng);

// Exhaustive regret over explicit misreport candidates (per bidder, a
// K x report_dim tensor of alternative reports tried for every profile).
struct GridRegret {
  std::vector<double> mean_per_bidder;
  double max_over_all = 0.0;
};
GridRegret grid_regret(const Mechanism& mech, const Tensor& profiles,
                       const std::vector<Tensor>& candidates);

// Uniform misreport grid over a box support, all coordinate combinations
// of `points` per dimension (use with small dimensions only).
Tensor misreport_grid(const SettingSpec& spec, int bidder, int points);

// Capacity-bound proxy: sqrt(R (d_a + d_p) log(L W max{K, m n}) / L),
// with max{K, n 2^m} for combinatorial bidders. Unknown universal
// constants are omitted (evaluated with constant 1).
struct BoundInputs {
  int hidden_layers = 0;   // R
  int hidden_width = 0;    // K
  std::size_t alloc_params = 0;    // d_a
  std::size_t payment_params = 0;  // d_p
  double weight_l1 = 0.0;          // W, L1 norm of all parameters
  std::size_t sample_size = 0;     // L
  int bidders = 0;
  int items = 0;
  ValuationClass cls = ValuationClass::kAdditive;
};
double delta_bound(const BoundInputs& in);

// Fills BoundInputs from an actual parameter store (d_a/d_p split by the
// alloc./pay. name prefixes, W as the L1 norm of everything).
BoundInputs bound_inputs_from(const ParamStore& params, int hidden_layers,
                              int hidden_width, std::size_t sample_size,
                              int bidders, int items, ValuationClass cls);

struct MetricsReport {
  std::string setting;
  std::string model;
  std::string scale;  // "desk" or "full"
  double revenue_mean = 0.0;
  double revenue_stderr = 0.0;
  std::vector<double> regret_per_bidder;
  double regret_mean = 0.0;
  double ir_violation = 0.0;
  std::size_t test_size = 0;
  std::size_t regret_test_size = 0;
  int eval_restarts = 0;
  int eval_steps = 0;
  double eval_step_size = 0.0;
  std::uint64_t seed = 0;

  std::string to_json() const;    // documented schema, see README
  std::string to_csv_row() const; // one-line summary for sweep tables
  static const char* csv_header();
};

}  // namespace deepauction::evaluation
