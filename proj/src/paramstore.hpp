#pragma once

#include <map>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace deepauction::diffcore {

// Flat named collection of parameter tensors, shared by every network
// architecture in the library. Iteration order is the lexicographic name
// order, which keeps updates and serialization deterministic.
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor>;

  void set(const std::string& name, Tensor t) { params_[name] = std::move(t); }

  bool has(const std::string& name) const { return params_.count(name) != 0; }

  const Tensor& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw DiffError("param store: no parameter named '" + name + "'");
    }
    return it->second;
  }

  Tensor& get_mut(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw DiffError("param store: no parameter named '" + name + "'");
    }
    return it->second;
  }

  std::size_t count() const { return params_.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(name);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& [name, t] : params_) {
      for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(t[i]);
    }
    return s;
  }

  bool all_finite() const {
    for (const auto& [name, t] : params_) {
      if (!t.all_finite()) return false;
    }
    return true;
  }

  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

 private:
  Map params_;
};

}  // namespace deepauction::diffcore
