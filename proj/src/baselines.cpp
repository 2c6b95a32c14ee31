#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepauction::baselines {

SingleItemResult myerson_single_item(const std::vector<double>& bids,
                                     double reserve) {
  SingleItemResult out;
  double best = -1e300, second = -1e300;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (bids[i] > best) {
      second = best;
      best = bids[i];
      out.winner = static_cast<int>(i);
    } else if (bids[i] > second) {
      second = bids[i];
    }
  }
  if (out.winner < 0 || best < reserve) {
    out.winner = -1;
    return out;
  }
  out.payment = std::max(second, reserve);
  return out;
}

SingleItemResult myerson_single_item(const std::vector<double>& bids,
                                     const VirtualFn& virt,
                                     const VirtualFn& virt_inverse) {
  SingleItemResult out;
  double best = 0.0;
  std::vector<double> vb(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    vb[i] = virt(static_cast<int>(i), bids[i]);
    if (vb[i] > best) {
      best = vb[i];
      out.winner = static_cast<int>(i);
    }
  }
  if (out.winner < 0) return out;
  double rival = 0.0;
  for (std::size_t i = 0; i < vb.size(); ++i) {
    if (static_cast<int>(i) != out.winner) rival = std::max(rival, vb[i]);
  }
  out.payment = virt_inverse(out.winner, rival);
  return out;
}

ReserveSearch optimize_reserve(const std::vector<double>& highest,
                               const std::vector<double>& second_highest,
                               double lo, double hi, double step) {
  if (highest.empty()) throw ConfigError("optimize_reserve: empty samples");
  if (!second_highest.empty() && second_highest.size() != highest.size()) {
    throw ConfigError("optimize_reserve: sample size mismatch");
  }
  std::size_t n = highest.size();

  // Sorting both orders lets every grid revenue come from prefix sums:
  //   revenue(r) = E[ 1{max >= r} * max(second, r) ]
  //             = E[ second * 1{second >= r} ] + r * P(second < r <= max).
  std::vector<double> hi_sorted = highest;
  std::sort(hi_sorted.begin(), hi_sorted.end());
  std::vector<double> sec_sorted;
  std::vector<double> sec_suffix_sum;  // sum of second values >= threshold
  if (!second_highest.empty()) {
    sec_sorted = second_highest;
    std::sort(sec_sorted.begin(), sec_sorted.end());
    sec_suffix_sum.assign(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      sec_suffix_sum[i] = sec_suffix_sum[i + 1] + sec_sorted[i];
    }
  }

  auto count_ge = [](const std::vector<double>& sorted, double x) {
    return sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x);
  };

  ReserveSearch best;
  best.revenue = -1.0;
  long grid_points = std::lround((hi - lo) / step);
  for (long gidx = 0; gidx <= grid_points; ++gidx) {
    double r = lo + step * static_cast<double>(gidx);
    double rev;
    long max_ge = count_ge(hi_sorted, r);
    if (second_highest.empty()) {
      rev = r * static_cast<double>(max_ge) / static_cast<double>(n);
    } else {
      long sec_ge = count_ge(sec_sorted, r);
      std::size_t first_ge = n - static_cast<std::size_t>(sec_ge);
      double sum_sec_ge = sec_suffix_sum[first_ge];
      rev = (sum_sec_ge + r * static_cast<double>(max_ge - sec_ge)) /
            static_cast<double>(n);
    }
    if (rev > best.revenue) {
      best.revenue = rev;
      best.reserve = r;
    }
  }
  return best;
}

double itemwise_myerson_revenue(const SettingSpec& spec, std::size_t samples,
                                Rng& rng, std::vector<ReserveSearch>* info) {
  if (spec.valuation_class() != valuations::ValuationClass::kAdditive) {
    throw ConfigError("itemwise_myerson_revenue: additive settings only");
  }
  int n = spec.bidders();
  int m = spec.items();
  Tensor batch = spec.sample_batch(rng, samples);
  double total = 0.0;
  if (info) info->clear();
  for (int j = 0; j < m; ++j) {
    std::vector<double> highest(samples), second(samples);
    bool single = n == 1;
    for (std::size_t l = 0; l < samples; ++l) {
      double h = -1e300, s = -1e300;
      for (int i = 0; i < n; ++i) {
        double v = batch.at(l, static_cast<std::size_t>(i) * m + j);
        if (v > h) {
          s = h;
          h = v;
        } else if (v > s) {
          s = v;
        }
      }
      highest[l] = h;
      second[l] = single ? 0.0 : s;
    }
    double lo = spec.item_lo(0, j), hi = spec.item_hi(0, j);
    for (int i = 1; i < n; ++i) {
      lo = std::min(lo, spec.item_lo(i, j));
      hi = std::max(hi, spec.item_hi(i, j));
    }
    ReserveSearch rs = optimize_reserve(
        highest, single ? std::vector<double>{} : second, lo, hi);
    total += rs.revenue;
    if (info) info->push_back(rs);
  }
  return total;
}

double bundled_myerson_revenue(const SettingSpec& spec, std::size_t samples,
                               Rng& rng, ReserveSearch* info) {
  if (spec.valuation_class() != valuations::ValuationClass::kAdditive) {
    throw ConfigError("bundled_myerson_revenue: additive settings only");
  }
  int n = spec.bidders();
  int m = spec.items();
  Tensor batch = spec.sample_batch(rng, samples);
  std::vector<double> highest(samples), second(samples);
  bool single = n == 1;
  double lo_sum = 0.0, hi_sum = 0.0;
  for (int j = 0; j < m; ++j) {
    double lo = spec.item_lo(0, j), hi = spec.item_hi(0, j);
    for (int i = 1; i < n; ++i) {
      lo = std::min(lo, spec.item_lo(i, j));
      hi = std::max(hi, spec.item_hi(i, j));
    }
    lo_sum += lo;
    hi_sum += hi;
  }
  for (std::size_t l = 0; l < samples; ++l) {
    double h = -1e300, s = -1e300;
    for (int i = 0; i < n; ++i) {
      double bundle = 0.0;
      for (int j = 0; j < m; ++j) {
        bundle += batch.at(l, static_cast<std::size_t>(i) * m + j);
      }
      if (bundle > h) {
        s = h;
        h = bundle;
      } else if (bundle > s) {
        s = bundle;
      }
    }
    highest[l] = h;
    second[l] = single ? 0.0 : s;
  }
  ReserveSearch rs = optimize_reserve(
      highest, single ? std::vector<double>{} : second, lo_sum, hi_sum);
  if (info) *info = rs;
  return rs.revenue;
}

double spa_revenue(const SettingSpec& spec, std::size_t samples, Rng& rng) {
  if (spec.items() != 1) {
    throw ConfigError("spa_revenue: single-item settings only");
  }
  int n = spec.bidders();
  if (n < 2) throw ConfigError("spa_revenue: needs at least two bidders");
  double total = 0.0;
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (std::size_t l = 0; l < samples; ++l) {
    for (int i = 0; i < n; ++i) {
      spec.sample_report(i, rng, &vals[static_cast<std::size_t>(i)]);
    }
    double h = -1e300, s = -1e300;
    for (double v : vals) {
      if (v > h) {
        s = h;
        h = v;
      } else if (v > s) {
        s = v;
      }
    }
    total += s;
  }
  return total / static_cast<double>(samples);
}

double asymmetric_uniform_myerson_revenue(int bidders, std::size_t samples,
                                          Rng& rng) {
  // v_i ~ U[0, i+1] is regular with phi_i(v) = 2v - (i+1).
  VirtualFn virt = [](int i, double v) { return 2.0 * v - (i + 1.0); };
  VirtualFn inv = [](int i, double y) { return (y + (i + 1.0)) / 2.0; };
  double total = 0.0;
  std::vector<double> vals(static_cast<std::size_t>(bidders));
  for (std::size_t l = 0; l < samples; ++l) {
    for (int i = 0; i < bidders; ++i) {
      vals[static_cast<std::size_t>(i)] = rng.uniform(0.0, i + 1.0);
    }
    SingleItemResult r = myerson_single_item(vals, virt, inv);
    if (r.winner >= 0) total += r.payment;
  }
  return total / static_cast<double>(samples);
}

PostedPriceMechanism::PostedPriceMechanism(int items, std::vector<double> prices)
    : items_(items), prices_(std::move(prices)) {
  if (prices_.size() != static_cast<std::size_t>(items_)) {
    throw ConfigError("posted price: one price per item");
  }
}

Outcome PostedPriceMechanism::run(const Tensor& bids) const {
  std::size_t rows = bids.rows();
  std::size_t m = static_cast<std::size_t>(items_);
  Outcome out;
  out.alloc = Tensor({rows, m});
  out.pay = Tensor({rows, 1});
  for (std::size_t l = 0; l < rows; ++l) {
    double p = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (bids.at(l, k) >= prices_[k]) {
        out.alloc.at(l, k) = 1.0;
        p += prices_[k];
      }
    }
    out.pay[l] = p;
  }
  return out;
}

Outcome SpaMechanism::run(const Tensor& bids) const {
  std::size_t rows = bids.rows();
  std::size_t n = static_cast<std::size_t>(bidders_);
  Outcome out;
  out.alloc = Tensor({rows, n});
  out.pay = Tensor({rows, n});
  for (std::size_t l = 0; l < rows; ++l) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = bids.at(l, i);
    SingleItemResult r = myerson_single_item(v, reserve_);
    if (r.winner >= 0) {
      out.alloc.at(l, static_cast<std::size_t>(r.winner)) = 1.0;
      out.pay.at(l, static_cast<std::size_t>(r.winner)) = r.payment;
    }
  }
  return out;
}

}  // namespace deepauction::baselines
