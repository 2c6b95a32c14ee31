#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mechanism.hpp"
#include "paramstore.hpp"
#include "rng.hpp"
#include "valuations.hpp"

namespace deepauction::rochetnet {

using diffcore::ParamStore;
using diffcore::Tensor;
using valuations::SettingSpec;

enum class MenuMode { kAdditive, kUnitDemand };

// Single-bidder menu network: the induced utility is the max of J linear
// functions with slopes in [0,1] plus the zero option. Entry j sells the
// lottery w_j at price -beta_j; selecting the utility-maximizing entry is
// dominant-strategy incentive compatible by construction.
//
// Raw parameters: "alpha" (m x J, slopes via sigmoid), "beta" (1 x J).
// Unit-demand mode adds "scale" (1 x J): the effective slope column is
// sigmoid(alpha_j) * sigmoid(scale_j) / max(1, sum_k sigmoid(alpha_kj)),
// which keeps per-entry slope sums at most 1 while reaching any point of
// the constrained box.
class MenuNet {
 public:
  MenuNet(MenuMode mode, int items, int entries, double kappa);

  MenuMode mode() const { return mode_; }
  int items() const { return items_; }
  int entries() const { return entries_; }
  double kappa() const { return kappa_; }

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Effective menu entries: weights (J x m) and utility intercepts (J).
  Tensor weights() const;
  Tensor intercepts() const;

  // Induced utility u(v) = max(max_j w_j.v + beta_j, 0).
  double utility(const double* v) const;
  double utility(const Tensor& v) const;

  // Hard mechanism: argmax menu entry (lowest index wins ties; a tied
  // zero option loses to the entry). Returns the chosen entry or -1.
  int choose(const double* b) const;
  void mechanism(const double* b, double* alloc, double* pay) const;

  void init(Rng& rng, const SettingSpec& spec);

 private:
  MenuMode mode_;
  int items_;
  int entries_;
  double kappa_;
  ParamStore params_;
};

// Mean smoothed negated revenue over a batch (the training loss): the
// utility gradient is softened with softmax(kappa * scores) including the
// zero option, while u(v) itself stays exact.
double smoothed_revenue_loss(const MenuNet& net, const Tensor& batch);

struct RochetTrainConfig {
  std::string setting_id = "I";
  int entries = 1000;  // J
  double kappa = 1000.0;
  std::size_t train_size = 5000;
  std::size_t batch = 128;
  int epochs = 40;
  double adam_lr = 0.001;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct RochetHistoryEntry {
  int epoch;
  double loss;
  double wall_time_s;
};

struct RochetTrainResult {
  MenuNet net;
  std::vector<RochetHistoryEntry> history;
};

// Trains the menu by minimizing the empirical smoothed loss; the setting
// must have a single bidder (mode follows its valuation class).
RochetTrainResult train_rochetnet(const RochetTrainConfig& cfg);

// Mechanism adapter over the exact (hard) menu rule.
class RochetMechanism : public Mechanism {
 public:
  explicit RochetMechanism(MenuNet net)
      : net_(std::move(net)), weights_(net_.weights()),
        intercepts_(net_.intercepts()) {}

  valuations::ValuationClass valuation_class() const override {
    return net_.mode() == MenuMode::kAdditive
               ? valuations::ValuationClass::kAdditive
               : valuations::ValuationClass::kUnitDemand;
  }
  int bidders() const override { return 1; }
  int items() const override { return net_.items(); }
  int report_dim() const override { return net_.items(); }

  Outcome run(const Tensor& bids) const override;

  const MenuNet& net() const { return net_; }

 private:
  MenuNet net_;
  Tensor weights_;     // effective menu, cached
  Tensor intercepts_;
};

// CSV of (entry, w_1..w_m, price). The zero option is implicit.
void write_menu_csv(const MenuNet& net, const std::string& path);

}  // namespace deepauction::rochetnet
