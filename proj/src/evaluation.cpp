#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "training.hpp"

namespace deepauction::evaluation {

RevenueStats revenue(const Mechanism& mech, const Tensor& profiles) {
  Outcome out = mech.run(profiles);
  std::size_t rows = profiles.rows();
  std::size_t n = static_cast<std::size_t>(mech.bidders());
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t l = 0; l < rows; ++l) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += out.pay.at(l, i);
    sum += r;
    sumsq += r * r;
  }
  RevenueStats stats;
  double m = sum / static_cast<double>(rows);
  stats.mean = m;
  if (rows > 1) {
    double var = (sumsq - sum * m) / static_cast<double>(rows - 1);
    stats.stderr_ = std::sqrt(std::max(var, 0.0) / static_cast<double>(rows));
  }
  return stats;
}

double ir_violation(const Mechanism& mech, const Tensor& profiles) {
  Tensor u = truthful_utilities(mech, profiles);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::max(-u[i], 0.0);
  return s / static_cast<double>(u.size());
}

std::vector<double> estimate_regret(const Mechanism& mech,
                                    BidGradientOracle* oracle,
                                    const SettingSpec& spec,
                                    const Tensor& profiles, int restarts,
                                    int steps, double step_size, Rng& rng) {
  std::size_t rows = profiles.rows();
  std::size_t n = static_cast<std::size_t>(mech.bidders());
  std::size_t d = static_cast<std::size_t>(mech.report_dim());
  Tensor u_truth = truthful_utilities(mech, profiles);

  std::vector<double> out;
  out.reserve(n);
  for (int i = 0; i < static_cast<int>(n); ++i) {
    std::vector<double> best(rows, -1e300);
    for (int r = 0; r < restarts; ++r) {
      Tensor x({rows, d});
      for (std::size_t l = 0; l < rows; ++l) {
        spec.sample_report(i, rng, x.data() + l * d);
      }
      if (oracle != nullptr && steps > 0) {
        auto grad_fn = [&](const Tensor& cur) {
          Tensor bids = profiles;
          for (std::size_t l = 0; l < rows; ++l) {
            for (std::size_t k = 0; k < d; ++k) {
              bids.at(l, static_cast<std::size_t>(i) * d + k) = cur.at(l, k);
            }
          }
          Tensor grad;
          oracle->utility_and_grad(i, bids, profiles, nullptr, &grad);
          return grad;
        };
        auto project = [&](double* row) { spec.project_report(i, row); };
        training::adam_ascent(x, steps, step_size, grad_fn, project);
      }
      Tensor bids = profiles;
      for (std::size_t l = 0; l < rows; ++l) {
        for (std::size_t k = 0; k < d; ++k) {
          bids.at(l, static_cast<std::size_t>(i) * d + k) = x.at(l, k);
        }
      }
      Tensor u_mis = mechanism_utilities(mech, profiles, bids);
      for (std::size_t l = 0; l < rows; ++l) {
        best[l] = std::max(best[l],
                           u_mis.at(l, static_cast<std::size_t>(i)) -
                               u_truth.at(l, static_cast<std::size_t>(i)));
      }
    }
    double s = 0.0;
    for (std::size_t l = 0; l < rows; ++l) s += std::max(best[l], 0.0);
    out.push_back(s / static_cast<double>(rows));
  }
  return out;
}

GridRegret grid_regret(const Mechanism& mech, const Tensor& profiles,
                       const std::vector<Tensor>& candidates) {
  std::size_t rows = profiles.rows();
  std::size_t n = static_cast<std::size_t>(mech.bidders());
  std::size_t d = static_cast<std::size_t>(mech.report_dim());
  if (candidates.size() != n) {
    throw ConfigError("grid_regret: one candidate set per bidder");
  }
  Tensor u_truth = truthful_utilities(mech, profiles);
  GridRegret out;
  out.mean_per_bidder.resize(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& cand = candidates[i];
    std::vector<double> best(rows, 0.0);  // truthful is always available
    Tensor bids = profiles;
    for (std::size_t c = 0; c < cand.rows(); ++c) {
      for (std::size_t l = 0; l < rows; ++l) {
        for (std::size_t k = 0; k < d; ++k) {
          bids.at(l, i * d + k) = cand.at(c, k);
        }
      }
      Tensor u_mis = mechanism_utilities(mech, profiles, bids);
      for (std::size_t l = 0; l < rows; ++l) {
        best[l] = std::max(best[l], u_mis.at(l, i) - u_truth.at(l, i));
      }
    }
    double s = 0.0;
    for (std::size_t l = 0; l < rows; ++l) {
      s += best[l];
      out.max_over_all = std::max(out.max_over_all, best[l]);
    }
    out.mean_per_bidder[i] = s / static_cast<double>(rows);
  }
  return out;
}

Tensor misreport_grid(const SettingSpec& spec, int bidder, int points) {
  int d = spec.report_dim();
  if (spec.valuation_class() == ValuationClass::kCombinatorial) {
    throw ConfigError("misreport_grid: box supports only");
  }
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(points);
  Tensor grid({total, static_cast<std::size_t>(d)});
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int k = 0; k < d; ++k) {
      std::size_t step = rem % static_cast<std::size_t>(points);
      rem /= static_cast<std::size_t>(points);
      double lo = spec.item_lo(bidder, k);
      double hi = spec.item_hi(bidder, k);
      grid.at(idx, static_cast<std::size_t>(k)) =
          points == 1 ? lo
                      : lo + (hi - lo) * static_cast<double>(step) /
                                static_cast<double>(points - 1);
    }
  }
  return grid;
}

double delta_bound(const BoundInputs& in) {
  if (in.hidden_layers <= 0 || in.sample_size == 0 || in.weight_l1 <= 0.0) {
    throw ConfigError("delta_bound: positive inputs required");
  }
  double cap;
  if (in.cls == ValuationClass::kCombinatorial) {
    cap = std::max<double>(in.hidden_width,
                           static_cast<double>(in.bidders) *
                               std::pow(2.0, in.items));
  } else {
    cap = std::max<double>(in.hidden_width, in.bidders * in.items);
  }
  double l = static_cast<double>(in.sample_size);
  double dtotal = static_cast<double>(in.alloc_params + in.payment_params);
  double arg = l * in.weight_l1 * cap;
  return std::sqrt(in.hidden_layers * dtotal * std::log(arg) / l);
}

BoundInputs bound_inputs_from(const ParamStore& params, int hidden_layers,
                              int hidden_width, std::size_t sample_size,
                              int bidders, int items, ValuationClass cls) {
  BoundInputs in;
  in.hidden_layers = hidden_layers;
  in.hidden_width = hidden_width;
  in.sample_size = sample_size;
  in.bidders = bidders;
  in.items = items;
  in.cls = cls;
  in.weight_l1 = params.l1_norm();
  for (const auto& [name, t] : params) {
    if (name.rfind("alloc.", 0) == 0) {
      in.alloc_params += t.size();
    } else if (name.rfind("pay.", 0) == 0) {
      in.payment_params += t.size();
    }
  }
  return in;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["setting"] = setting;
  j["model"] = model;
  j["scale"] = scale;
  j["revenue"] = {{"mean", revenue_mean}, {"stderr", revenue_stderr}};
  j["regret"] = {{"per_bidder", regret_per_bidder}, {"mean", regret_mean}};
  j["ir_violation"] = ir_violation;
  j["test_size"] = test_size;
  j["regret_test_size"] = regret_test_size;
  j["eval"] = {{"restarts", eval_restarts},
               {"steps", eval_steps},
               {"step_size", eval_step_size}};
  j["seed"] = seed;
  return j.dump(2);
}

const char* MetricsReport::csv_header() {
  return "setting,model,scale,revenue_mean,revenue_stderr,regret_mean,"
         "ir_violation,test_size,seed";
}

std::string MetricsReport::to_csv_row() const {
  std::ostringstream os;
  os.precision(10);
  os << setting << ',' << model << ',' << scale << ',' << revenue_mean << ','
     << revenue_stderr << ',' << regret_mean << ',' << ir_violation << ','
     << test_size << ',' << seed;
  return os.str();
}

}  // namespace deepauction::evaluation
