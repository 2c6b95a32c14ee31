#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mechanism.hpp"
#include "tensor.hpp"

namespace deepauction::lpexport {

using diffcore::Tensor;

// Discretized revenue-maximization LP for n additive bidders, m items and
// D value bins per item. Valuation profiles are enumerated over the bin
// centers; each profile owns n payment variables and n*m allocation
// probabilities. Constraints: per profile, one IC row per (bidder,
// misreport) pair, one IR row per bidder, and m item-wise plus n
// bidder-wise allocation caps.
struct LpCounts {
  std::uint64_t profiles = 0;     // D^{mn}
  std::uint64_t variables = 0;    // D^{mn} * (n + n*m)
  std::uint64_t ic = 0;           // D^{mn} * n * (D^m - 1)
  std::uint64_t ir = 0;           // D^{mn} * n
  std::uint64_t feasibility = 0;  // D^{mn} * (n + m)

  std::uint64_t ic_ir() const { return ic + ir; }
};

LpCounts lp_counts(int bidders, int items, int bins);

struct LpModel {
  int bidders = 0;
  int items = 0;
  int bins = 0;
  double lo = 0.0;
  double hi = 1.0;
  LpCounts counts;
};

// Validates the dimensions against a variable-count cap (constraints are
// streamed at write time, but the variable table bounds solver memory).
LpModel build_lp(int bidders, int items, int bins, double lo, double hi,
                 std::uint64_t max_variables = 2000000);

// Center of bin k in [lo, hi].
double bin_center(int k, int bins, double lo, double hi);

// Snaps every entry to the nearest bin center; exact midpoints snap to
// the lower center. Idempotent.
Tensor round_profile(const Tensor& profile, int bins, double lo, double hi);
double round_value(double v, int bins, double lo, double hi);
int value_bin(double v, int bins, double lo, double hi);

// Mixed-radix profile index: coordinate (bidder i, item j) contributes
// digit * D^(i*m + j).
std::uint64_t profile_index(const std::vector<int>& digits, int bins);

// Variable names, as written to the LP file.
std::string alloc_var(std::uint64_t profile, int bidder, int item);
std::string pay_var(std::uint64_t profile, int bidder);

// One linear constraint: sum_i coeff_i * var_i (relation) rhs.
struct LpConstraint {
  std::string name;
  std::vector<std::pair<std::string, double>> terms;
  char relation = 'G';  // 'G': >=, 'L': <=
  double rhs = 0.0;
};

// Streams every constraint of the model, in file order, to the callback.
void enumerate_constraints(const LpModel& model,
                           const std::function<void(const LpConstraint&)>& fn);

// Writes the model in CPLEX LP text format: a comment header declaring
// the variable and constraint counts, the expected-revenue objective,
// one constraint per line, then bounds. Large models stream to disk.
void write_lp(const LpModel& model, const std::string& path);

// Re-reads a written file (used for round-trip verification).
struct LpParsed {
  std::map<std::string, double> objective;
  std::vector<LpConstraint> constraints;
  std::uint64_t declared_variables = 0;
  std::map<std::string, std::pair<double, double>> bounds;
};
LpParsed read_lp(const std::string& path);

std::string stats_json(const LpModel& model);

// Auction rule defined only on grid profiles: continuous bids are rounded
// to the nearest grid profile and looked up. Allocation and payment
// tables are indexed by profile_index. Used to evaluate discretized
// rules (e.g. LP solutions) on continuous inputs.
class GridMechanism : public Mechanism {
 public:
  GridMechanism(LpModel model, std::vector<double> alloc_table,
                std::vector<double> pay_table);

  valuations::ValuationClass valuation_class() const override {
    return valuations::ValuationClass::kAdditive;
  }
  int bidders() const override { return model_.bidders; }
  int items() const override { return model_.items; }
  int report_dim() const override { return model_.items; }
  Outcome run(const Tensor& bids) const override;

  const LpModel& model() const { return model_; }

 private:
  LpModel model_;
  std::vector<double> alloc_table_;  // profiles x (n*m)
  std::vector<double> pay_table_;    // profiles x n
};

}  // namespace deepauction::lpexport
