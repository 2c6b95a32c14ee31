#include "mechanism.hpp"

namespace deepauction {

Tensor mechanism_utilities(const Mechanism& mech, const Tensor& true_vals,
                           const Tensor& bids) {
  if (!true_vals.same_shape(bids)) {
    throw diffcore::DiffError("mechanism_utilities: shape mismatch");
  }
  Outcome out = mech.run(bids);
  std::size_t rows = bids.rows();
  std::size_t n = static_cast<std::size_t>(mech.bidders());
  std::size_t d = static_cast<std::size_t>(mech.report_dim());
  Tensor u({rows, n});
  for (std::size_t l = 0; l < rows; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        v += true_vals.at(l, i * d + k) * out.alloc.at(l, i * d + k);
      }
      u.at(l, i) = v - out.pay.at(l, i);
    }
  }
  return u;
}

}  // namespace deepauction
