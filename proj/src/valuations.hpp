#pragma once

#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace deepauction::valuations {

using diffcore::Tensor;

enum class ValuationClass { kAdditive, kUnitDemand, kCombinatorial };

const char* valuation_class_name(ValuationClass cls);

class ValuationError : public std::runtime_error {
 public:
  explicit ValuationError(const std::string& what) : std::runtime_error(what) {}
};

// One named valuation environment: bidder count, item count, valuation
// class and the distribution each bidder draws from. Covers the Roman
// numeral settings I..XI plus the named single-item distributions used
// by the single-item experiments ("sym-uniform-3", "asym-uniform-5",
// "exp-3", "irregular-3").
class SettingSpec {
 public:
  enum class Kind {
    kBox,            // independent uniforms, per-(bidder,item) ranges
    kTriangle,       // (v1,v2) uniform on the unit triangle
    kCombShift,      // items uniform, bundle {1,2} = sum + U[-shift,shift]
    kExponential,    // single item, exponential values
    kIrregular,      // single item, U[0,3] w.p. 3/4 else U[3,8]
  };

  static SettingSpec by_id(const std::string& id);
  static bool known_id(const std::string& id);
  static std::vector<std::string> known_ids();

  const std::string& id() const { return id_; }
  ValuationClass valuation_class() const { return cls_; }
  Kind kind() const { return kind_; }
  int bidders() const { return bidders_; }
  int items() const { return items_; }

  // Per-bidder report dimension: m for additive and unit-demand, 2^m-1
  // bundle values for combinatorial bidders.
  int report_dim() const;
  int profile_dim() const { return bidders_ * report_dim(); }
  int bundle_count() const { return (1 << items_) - 1; }

  // One i.i.d. profile draw, shaped bidders x report_dim.
  Tensor sample_profile(Rng& rng) const;

  // One bidder's report drawn from her distribution, written in place.
  void sample_report(int bidder, Rng& rng, double* report) const;

  // `count` i.i.d. draws, flattened bidder-major into count x profile_dim.
  Tensor sample_batch(Rng& rng, std::size_t count) const;

  // Clamps one bidder's report (length report_dim) onto the support.
  void project_report(int bidder, double* report) const;

  // Uniform draw over one bidder's support, for sample-based regret and
  // misreport initialization. Errors for unbounded supports.
  void uniform_report(int bidder, Rng& rng, double* report) const;

  bool bounded_support() const { return kind_ != Kind::kExponential; }

  // Box bounds of item k for a bidder (valid for kBox; for the other
  // kinds these give the bounding box of the support).
  double item_lo(int bidder, int item) const;
  double item_hi(int bidder, int item) const;

  // Analytic per-item mean where defined (used by test oracles).
  double item_mean(int bidder, int item) const;

  std::string describe() const;

 private:
  SettingSpec() = default;

  std::string id_;
  ValuationClass cls_ = ValuationClass::kAdditive;
  Kind kind_ = Kind::kBox;
  int bidders_ = 1;
  int items_ = 1;
  std::vector<double> lo_;  // bidders x items
  std::vector<double> hi_;
  double comb_shift_ = 1.0;
  double exp_mean_ = 3.0;
};

// Value of a bundle (bitmask over items) under one bidder's report row.
// Additive reports sum item values, unit-demand reports take the max,
// combinatorial reports store the bundle value directly. The empty
// bundle is worth zero.
double bundle_value(ValuationClass cls, const double* report, int items,
                    unsigned bundle_mask);

// Expected value of a (possibly randomized) allocation row under a
// valuation row: the inner product, for every valuation class.
double expected_utility_value(const Tensor& valuation_row,
                              const Tensor& allocation_row);

// CSV with one row per (profile, bidder). Header names the columns:
// items for additive/unit-demand reports, bundle bitmasks otherwise.
void write_profiles_csv(const SettingSpec& spec, const Tensor& batch,
                        const std::string& path);
Tensor read_profiles_csv(const SettingSpec& spec, const std::string& path);

}  // namespace deepauction::valuations
