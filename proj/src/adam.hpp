#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "paramstore.hpp"
#include "tensor.hpp"

namespace deepauction::diffcore {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment tensors are allocated lazily per
// parameter name and must keep matching the parameter shapes.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // One descent step over every parameter in the store. Every parameter
  // must have a gradient entry; a missing gradient is an error.
  void step(ParamStore& params, const std::map<std::string, Tensor>& grads);

  // Ascent variant used by the misreport optimizers.
  void step_ascent(ParamStore& params, const std::map<std::string, Tensor>& grads);

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  void reset() {
    m_.clear();
    v_.clear();
    t_ = 0;
  }

 private:
  void apply(ParamStore& params, const std::map<std::string, Tensor>& grads,
             double direction);

  AdamConfig cfg_;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace deepauction::diffcore
