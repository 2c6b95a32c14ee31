#include "adam.hpp"

#include <cmath>

namespace deepauction::diffcore {

void Adam::step(ParamStore& params, const std::map<std::string, Tensor>& grads) {
  apply(params, grads, -1.0);
}

void Adam::step_ascent(ParamStore& params,
                       const std::map<std::string, Tensor>& grads) {
  apply(params, grads, 1.0);
}

void Adam::apply(ParamStore& params, const std::map<std::string, Tensor>& grads,
                 double direction) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw DiffError("adam: missing gradient for parameter '" + name + "'");
    }
    const Tensor& g = git->second;
    if (!g.same_shape(p)) {
      throw DiffError("adam: gradient shape mismatch for '" + name + "'");
    }
    Tensor& m = m_[name];
    Tensor& v = v_[name];
    if (!m.same_shape(p)) m = Tensor(p.shape());
    if (!v.same_shape(p)) v = Tensor(p.shape());
    double* pm = m.data();
    double* pv = v.data();
    double* pp = p.data();
    const double* pg = g.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      pm[i] = cfg_.beta1 * pm[i] + (1.0 - cfg_.beta1) * pg[i];
      pv[i] = cfg_.beta2 * pv[i] + (1.0 - cfg_.beta2) * pg[i] * pg[i];
      double mhat = pm[i] / bc1;
      double vhat = pv[i] / bc2;
      pp[i] += direction * cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace deepauction::diffcore
