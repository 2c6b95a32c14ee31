#pragma once

#include <memory>

#include "tensor.hpp"
#include "valuations.hpp"

namespace deepauction {

using diffcore::Tensor;

// Allocation and payments for a batch of bid profiles. `alloc` is
// B x (bidders * report_dim) in the same bidder-major layout as the bid
// batches; `pay` is B x bidders.
struct Outcome {
  Tensor alloc;
  Tensor pay;
};

// A (possibly randomized) auction rule evaluated on batches of bids.
// Implementations must be pure: same bids, same outcome.
class Mechanism {
 public:
  virtual ~Mechanism() = default;

  virtual valuations::ValuationClass valuation_class() const = 0;
  virtual int bidders() const = 0;
  virtual int items() const = 0;
  virtual int report_dim() const = 0;

  virtual Outcome run(const Tensor& bids) const = 0;
};

// Per-row utilities u_i = <v_i, z_i(b)> - p_i(b) for every bidder, given
// true valuations and the bids actually submitted. Shapes: both
// B x (bidders * report_dim); result B x bidders.
Tensor mechanism_utilities(const Mechanism& mech, const Tensor& true_vals,
                           const Tensor& bids);

// Utilities under truthful bidding.
inline Tensor truthful_utilities(const Mechanism& mech, const Tensor& vals) {
  return mechanism_utilities(mech, vals, vals);
}

// Gradient access for mechanisms backed by differentiable networks:
// utility of one bidder and its gradient w.r.t. that bidder's own bid
// coordinates, batched over rows.
class BidGradientOracle {
 public:
  virtual ~BidGradientOracle() = default;

  // `bids` and `true_vals` are B x (bidders * report_dim); on return
  // `u` is B x 1 and `grad` is B x report_dim (w.r.t. bidder i's block).
  virtual void utility_and_grad(int bidder, const Tensor& bids,
                                const Tensor& true_vals, Tensor* u,
                                Tensor* grad) = 0;
};

}  // namespace deepauction
