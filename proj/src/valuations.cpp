#include "valuations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace deepauction::valuations {

namespace {

constexpr int kMaxCombItems = 12;  // 2^m-1 bundle values stored eagerly

}  // namespace

const char* valuation_class_name(ValuationClass cls) {
  switch (cls) {
    case ValuationClass::kAdditive: return "additive";
    case ValuationClass::kUnitDemand: return "unit-demand";
    case ValuationClass::kCombinatorial: return "combinatorial";
  }
  return "?";
}

int SettingSpec::report_dim() const {
  return cls_ == ValuationClass::kCombinatorial ? bundle_count() : items_;
}

SettingSpec SettingSpec::by_id(const std::string& id) {
  SettingSpec s;
  s.id_ = id;
  auto box = [&](ValuationClass cls, int n, int m, double lo, double hi) {
    s.cls_ = cls;
    s.kind_ = Kind::kBox;
    s.bidders_ = n;
    s.items_ = m;
    s.lo_.assign(static_cast<std::size_t>(n) * m, lo);
    s.hi_.assign(static_cast<std::size_t>(n) * m, hi);
  };
  if (id == "I") {
    box(ValuationClass::kAdditive, 1, 2, 0.0, 1.0);
  } else if (id == "II") {
    box(ValuationClass::kAdditive, 1, 2, 4.0, 16.0);
    s.hi_[1] = 7.0;
  } else if (id == "III") {
    box(ValuationClass::kAdditive, 1, 2, 0.0, 1.0);
    s.kind_ = Kind::kTriangle;
  } else if (id == "IV") {
    box(ValuationClass::kUnitDemand, 1, 2, 0.0, 1.0);
  } else if (id == "V") {
    box(ValuationClass::kUnitDemand, 1, 2, 2.0, 3.0);
  } else if (id == "VI") {
    box(ValuationClass::kAdditive, 2, 2, 0.0, 1.0);
  } else if (id == "VII") {
    box(ValuationClass::kCombinatorial, 2, 2, 1.0, 2.0);
    s.kind_ = Kind::kCombShift;
    s.comb_shift_ = 1.0;
  } else if (id == "VIII") {
    box(ValuationClass::kCombinatorial, 2, 2, 1.0, 2.0);
    s.kind_ = Kind::kCombShift;
    s.comb_shift_ = 1.0;
    s.lo_[2] = 1.0;
    s.lo_[3] = 1.0;
    s.hi_[2] = 5.0;
    s.hi_[3] = 5.0;
  } else if (id == "IX") {
    box(ValuationClass::kAdditive, 1, 10, 0.0, 1.0);
  } else if (id == "X") {
    box(ValuationClass::kAdditive, 3, 10, 0.0, 1.0);
  } else if (id == "XI") {
    box(ValuationClass::kAdditive, 5, 10, 0.0, 1.0);
  } else if (id == "sym-uniform-3") {
    box(ValuationClass::kAdditive, 3, 1, 0.0, 1.0);
  } else if (id == "asym-uniform-5") {
    box(ValuationClass::kAdditive, 5, 1, 0.0, 1.0);
    for (int i = 0; i < 5; ++i) s.hi_[static_cast<std::size_t>(i)] = i + 1.0;
  } else if (id == "exp-3") {
    box(ValuationClass::kAdditive, 3, 1, 0.0, 0.0);
    s.kind_ = Kind::kExponential;
    s.exp_mean_ = 3.0;
  } else if (id == "irregular-3") {
    box(ValuationClass::kAdditive, 3, 1, 0.0, 8.0);
    s.kind_ = Kind::kIrregular;
  } else {
    throw ValuationError("unknown setting id '" + id + "'");
  }
  if (s.cls_ == ValuationClass::kCombinatorial && s.items_ > kMaxCombItems) {
    throw ValuationError("combinatorial settings are capped at 12 items");
  }
  return s;
}

bool SettingSpec::known_id(const std::string& id) {
  try {
    by_id(id);
    return true;
  } catch (const ValuationError&) {
    return false;
  }
}

std::vector<std::string> SettingSpec::known_ids() {
  return {"I",  "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI",
          "sym-uniform-3", "asym-uniform-5", "exp-3", "irregular-3"};
}

void SettingSpec::sample_report(int bidder, Rng& rng, double* report) const {
  std::size_t base = static_cast<std::size_t>(bidder) * items_;
  switch (kind_) {
    case Kind::kBox: {
      for (int k = 0; k < items_; ++k) {
        report[k] = rng.uniform(lo_[base + k], hi_[base + k]);
      }
      return;
    }
    case Kind::kTriangle: {
      double u1 = rng.uniform();
      double u2 = rng.uniform();
      if (u1 + u2 > 1.0) {  // reflect into the lower triangle
        u1 = 1.0 - u1;
        u2 = 1.0 - u2;
      }
      report[0] = u1;
      report[1] = u2;
      return;
    }
    case Kind::kCombShift: {
      // Items first, then every multi-item bundle value as the item sum
      // plus an independent uniform shift.
      std::vector<double> item_vals(static_cast<std::size_t>(items_));
      for (int k = 0; k < items_; ++k) {
        item_vals[static_cast<std::size_t>(k)] =
            rng.uniform(lo_[base + k], hi_[base + k]);
      }
      int q = bundle_count();
      for (unsigned mask = 1; mask <= static_cast<unsigned>(q); ++mask) {
        double sum = 0.0;
        int bits = 0;
        for (int k = 0; k < items_; ++k) {
          if (mask & (1u << k)) {
            sum += item_vals[static_cast<std::size_t>(k)];
            ++bits;
          }
        }
        double v = sum;
        if (bits > 1) v += rng.uniform(-comb_shift_, comb_shift_);
        report[mask - 1] = v;
      }
      return;
    }
    case Kind::kExponential: {
      for (int k = 0; k < items_; ++k) report[k] = rng.exponential(exp_mean_);
      return;
    }
    case Kind::kIrregular: {
      for (int k = 0; k < items_; ++k) {
        if (rng.uniform() < 0.75) {
          report[k] = rng.uniform(0.0, 3.0);
        } else {
          report[k] = rng.uniform(3.0, 8.0);
        }
      }
      return;
    }
  }
}

Tensor SettingSpec::sample_profile(Rng& rng) const {
  Tensor out({static_cast<std::size_t>(bidders_),
              static_cast<std::size_t>(report_dim())});
  for (int i = 0; i < bidders_; ++i) {
    sample_report(i, rng, out.data() + static_cast<std::size_t>(i) * report_dim());
  }
  return out;
}

Tensor SettingSpec::sample_batch(Rng& rng, std::size_t count) const {
  std::size_t d = static_cast<std::size_t>(profile_dim());
  Tensor out({count, d});
  for (std::size_t l = 0; l < count; ++l) {
    for (int i = 0; i < bidders_; ++i) {
      sample_report(i, rng,
                    out.data() + l * d +
                        static_cast<std::size_t>(i) * report_dim());
    }
  }
  return out;
}

void SettingSpec::project_report(int bidder, double* report) const {
  std::size_t base = static_cast<std::size_t>(bidder) * items_;
  switch (kind_) {
    case Kind::kBox: {
      for (int k = 0; k < items_; ++k) {
        report[k] = std::clamp(report[k], lo_[base + k], hi_[base + k]);
      }
      return;
    }
    case Kind::kTriangle: {
      double x = std::max(report[0], 0.0);
      double y = std::max(report[1], 0.0);
      if (x + y > 1.0) {
        // Euclidean projection onto {x,y >= 0, x+y <= 1}.
        double t = (x + y - 1.0) / 2.0;
        x -= t;
        y -= t;
        if (x < 0.0) {
          y = std::min(1.0, y + x);
          x = 0.0;
        }
        if (y < 0.0) {
          x = std::min(1.0, x + y);
          y = 0.0;
        }
      }
      report[0] = x;
      report[1] = y;
      return;
    }
    case Kind::kCombShift: {
      for (int k = 0; k < items_; ++k) {
        std::size_t idx = (1u << k) - 1;  // singleton bundle slot
        report[idx] = std::clamp(report[idx], lo_[base + k], hi_[base + k]);
      }
      int q = bundle_count();
      for (unsigned mask = 1; mask <= static_cast<unsigned>(q); ++mask) {
        int bits = 0;
        double sum = 0.0;
        for (int k = 0; k < items_; ++k) {
          if (mask & (1u << k)) {
            sum += report[(1u << k) - 1];
            ++bits;
          }
        }
        if (bits > 1) {
          report[mask - 1] =
              std::clamp(report[mask - 1], sum - comb_shift_, sum + comb_shift_);
        }
      }
      return;
    }
    case Kind::kExponential: {
      for (int k = 0; k < items_; ++k) report[k] = std::max(report[k], 0.0);
      return;
    }
    case Kind::kIrregular: {
      for (int k = 0; k < items_; ++k) {
        report[k] = std::clamp(report[k], 0.0, 8.0);
      }
      return;
    }
  }
}

void SettingSpec::uniform_report(int bidder, Rng& rng, double* report) const {
  if (!bounded_support()) {
    throw ValuationError("uniform_report: unbounded support in setting " + id_);
  }
  // For every bounded kind a direct support draw is uniform already.
  if (kind_ == Kind::kIrregular) {
    // Uniform over the support box [0,8], not the irregular measure.
    for (int k = 0; k < items_; ++k) report[k] = rng.uniform(0.0, 8.0);
    return;
  }
  sample_report(bidder, rng, report);
}

double SettingSpec::item_lo(int bidder, int item) const {
  return lo_[static_cast<std::size_t>(bidder) * items_ + item];
}

double SettingSpec::item_hi(int bidder, int item) const {
  if (kind_ == Kind::kExponential) {
    throw ValuationError("item_hi: unbounded support in setting " + id_);
  }
  return hi_[static_cast<std::size_t>(bidder) * items_ + item];
}

double SettingSpec::item_mean(int bidder, int item) const {
  std::size_t idx = static_cast<std::size_t>(bidder) * items_ + item;
  switch (kind_) {
    case Kind::kBox:
    case Kind::kCombShift:
      return 0.5 * (lo_[idx] + hi_[idx]);
    case Kind::kTriangle:
      return 1.0 / 3.0;
    case Kind::kExponential:
      return exp_mean_;
    case Kind::kIrregular:
      return 0.75 * 1.5 + 0.25 * 5.5;
  }
  return 0.0;
}

std::string SettingSpec::describe() const {
  std::ostringstream os;
  os << id_ << ": " << bidders_ << " bidder(s), " << items_ << " item(s), "
     << valuation_class_name(cls_);
  return os.str();
}

double bundle_value(ValuationClass cls, const double* report, int items,
                    unsigned bundle_mask) {
  if (bundle_mask == 0) return 0.0;
  switch (cls) {
    case ValuationClass::kAdditive: {
      double s = 0.0;
      for (int k = 0; k < items; ++k) {
        if (bundle_mask & (1u << k)) s += report[k];
      }
      return s;
    }
    case ValuationClass::kUnitDemand: {
      double best = 0.0;
      for (int k = 0; k < items; ++k) {
        if (bundle_mask & (1u << k)) best = std::max(best, report[k]);
      }
      return best;
    }
    case ValuationClass::kCombinatorial:
      return report[bundle_mask - 1];
  }
  return 0.0;
}

double expected_utility_value(const Tensor& valuation_row,
                              const Tensor& allocation_row) {
  if (valuation_row.size() != allocation_row.size()) {
    throw ValuationError("expected_utility_value: shape mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < valuation_row.size(); ++i) {
    s += valuation_row[i] * allocation_row[i];
  }
  return s;
}

void write_profiles_csv(const SettingSpec& spec, const Tensor& batch,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValuationError("cannot open '" + path + "' for writing");
  out << "profile,bidder";
  int d = spec.report_dim();
  if (spec.valuation_class() == ValuationClass::kCombinatorial) {
    for (int k = 1; k <= d; ++k) out << ",bundle" << k;
  } else {
    for (int k = 1; k <= d; ++k) out << ",item" << k;
  }
  out << "\n";
  out.precision(17);
  std::size_t rows = batch.rows();
  for (std::size_t l = 0; l < rows; ++l) {
    for (int i = 0; i < spec.bidders(); ++i) {
      out << l << "," << i;
      for (int k = 0; k < d; ++k) {
        out << "," << batch.at(l, static_cast<std::size_t>(i) * d + k);
      }
      out << "\n";
    }
  }
}

Tensor read_profiles_csv(const SettingSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValuationError("cannot open '" + path + "' for reading");
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> values;
  int d = spec.report_dim();
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');  // profile index
    std::getline(ls, cell, ',');  // bidder index
    for (int k = 0; k < d; ++k) {
      std::getline(ls, cell, ',');
      values.push_back(std::stod(cell));
    }
    ++rows;
  }
  if (rows % static_cast<std::size_t>(spec.bidders()) != 0) {
    throw ValuationError("profile csv: row count is not a bidder multiple");
  }
  std::size_t profiles = rows / spec.bidders();
  return Tensor({profiles, static_cast<std::size_t>(spec.profile_dim())},
                std::move(values));
}

}  // namespace deepauction::valuations
