#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mechanism.hpp"
#include "paramstore.hpp"
#include "rng.hpp"
#include "valuations.hpp"

namespace deepauction::myersonnet {

using diffcore::Tensor;
using valuations::SettingSpec;

// Strictly increasing piecewise-linear transform
//   phi(b) = min_k max_j e^{alpha_kj} b + beta_kj,
// whose inverse is available in closed form from the same parameters:
//   phi^{-1}(y) = max_k min_j e^{-alpha_kj} (y - beta_kj).
struct VirtualTransform {
  int k_groups = 5;  // K
  int j_lines = 10;  // J
  Tensor alpha;      // K x J, slopes e^alpha
  Tensor beta;       // K x J

  VirtualTransform() = default;
  VirtualTransform(int k, int j);

  static VirtualTransform identity();
};

double phi(const VirtualTransform& t, double bid);
double phi_inverse(const VirtualTransform& t, double y);

// Second-price auction with zero reserve applied to virtual bids: the
// highest positive virtual bid wins; every bidder's conditional payment
// is the maximum of the others' virtual bids and zero.
struct SpaOutcome {
  int winner = -1;  // -1: item stays unallocated
  std::vector<double> conditional_payment;
};
SpaOutcome spa0_exact(const std::vector<double>& virtual_bids);

// Smoothed allocation used during training: softmax of kappa * virtual
// bids with an extra zero entry; returns the n real probabilities.
std::vector<double> spa0_soft(const std::vector<double>& virtual_bids,
                              double kappa);

// The full single-item auction: per-bidder transforms around an exact
// SPA-0. Evaluation always uses the exact rule.
class MyersonNet {
 public:
  MyersonNet() = default;
  explicit MyersonNet(std::vector<VirtualTransform> transforms)
      : transforms_(std::move(transforms)) {}

  int bidders() const { return static_cast<int>(transforms_.size()); }
  const std::vector<VirtualTransform>& transforms() const { return transforms_; }
  std::vector<VirtualTransform>& transforms() { return transforms_; }

  // alloc: length n one-hot (or all zero), pay: length n.
  void run_profile(const double* bids, double* alloc, double* pay) const;

 private:
  std::vector<VirtualTransform> transforms_;
};

class MyersonMechanism : public Mechanism {
 public:
  explicit MyersonMechanism(MyersonNet net) : net_(std::move(net)) {}

  valuations::ValuationClass valuation_class() const override {
    return valuations::ValuationClass::kAdditive;
  }
  int bidders() const override { return net_.bidders(); }
  int items() const override { return 1; }
  int report_dim() const override { return 1; }

  Outcome run(const Tensor& bids) const override;

  const MyersonNet& net() const { return net_; }

 private:
  MyersonNet net_;
};

struct MyersonTrainConfig {
  std::string setting_id = "sym-uniform-3";
  int k_groups = 5;
  int j_lines = 10;
  double kappa = 1000.0;
  double alpha_bound = 10.0;  // alpha clamped to [-B, B]
  std::size_t train_size = 1000;
  std::size_t batch = 128;
  // The sharp softmax makes gradients spiky near the allocation
  // boundaries; a rate around 0.01 rides through the resulting Adam
  // second-moment inflation, where 0.001 stalls before the reserve
  // settles.
  int epochs = 2000;
  double adam_lr = 0.01;
  std::uint64_t seed = 0;
  bool verbose = false;
};

struct MyersonHistoryEntry {
  int epoch;
  double soft_revenue;
  double wall_time_s;
};

struct MyersonTrainResult {
  MyersonNet net;
  std::vector<MyersonHistoryEntry> history;
};

// Maximizes the empirical smoothed revenue; the setting must be a
// single-item environment.
MyersonTrainResult train_myersonnet(const MyersonTrainConfig& cfg);

// CSV of (bidder, k, j, slope, intercept) rows describing every linear
// piece of every transform.
void write_transforms_csv(const MyersonNet& net, const std::string& path);

}  // namespace deepauction::myersonnet
