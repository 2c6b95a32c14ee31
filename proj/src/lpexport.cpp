#include "lpexport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace deepauction::lpexport {

namespace {

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > UINT64_MAX / base) {
      throw ConfigError("lp: profile count overflows 64 bits");
    }
    out *= base;
  }
  return out;
}

}  // namespace

LpCounts lp_counts(int bidders, int items, int bins) {
  if (bidders < 1 || items < 1 || bins < 1) {
    throw ConfigError("lp: bidders, items and bins must be positive");
  }
  LpCounts c;
  c.profiles = ipow(static_cast<std::uint64_t>(bins), bidders * items);
  std::uint64_t n = static_cast<std::uint64_t>(bidders);
  std::uint64_t m = static_cast<std::uint64_t>(items);
  c.variables = c.profiles * (n + n * m);
  std::uint64_t reports = ipow(static_cast<std::uint64_t>(bins), items);
  c.ic = c.profiles * n * (reports - 1);
  c.ir = c.profiles * n;
  c.feasibility = c.profiles * (n + m);
  return c;
}

LpModel build_lp(int bidders, int items, int bins, double lo, double hi,
                 std::uint64_t max_variables) {
  LpCounts counts = lp_counts(bidders, items, bins);
  if (counts.variables > max_variables) {
    std::ostringstream os;
    os << "lp: " << counts.variables << " variables and " << counts.ic_ir()
       << " IC+IR constraints exceed the cap of " << max_variables
       << " variables";
    throw ConfigError(os.str());
  }
  if (hi <= lo) throw ConfigError("lp: support upper bound must exceed lower");
  LpModel model;
  model.bidders = bidders;
  model.items = items;
  model.bins = bins;
  model.lo = lo;
  model.hi = hi;
  model.counts = counts;
  return model;
}

double bin_center(int k, int bins, double lo, double hi) {
  return lo + (static_cast<double>(k) + 0.5) * (hi - lo) / static_cast<double>(bins);
}

int value_bin(double v, int bins, double lo, double hi) {
  // Nearest center, ties snap down: k = ceil((v-lo)/w * D - 0.5 - 0.5)
  // where midpoints between centers sit at integer multiples of w/D.
  double t = (v - lo) / (hi - lo) * static_cast<double>(bins) - 0.5;
  int k = static_cast<int>(std::ceil(t - 0.5));
  return std::clamp(k, 0, bins - 1);
}

double round_value(double v, int bins, double lo, double hi) {
  return bin_center(value_bin(v, bins, lo, hi), bins, lo, hi);
}

Tensor round_profile(const Tensor& profile, int bins, double lo, double hi) {
  Tensor out = profile;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = round_value(out[i], bins, lo, hi);
  }
  return out;
}

std::uint64_t profile_index(const std::vector<int>& digits, int bins) {
  std::uint64_t idx = 0;
  std::uint64_t place = 1;
  for (int d : digits) {
    idx += static_cast<std::uint64_t>(d) * place;
    place *= static_cast<std::uint64_t>(bins);
  }
  return idx;
}

std::string alloc_var(std::uint64_t profile, int bidder, int item) {
  std::ostringstream os;
  os << "z_p" << profile << "_b" << bidder << "_i" << item;
  return os.str();
}

std::string pay_var(std::uint64_t profile, int bidder) {
  std::ostringstream os;
  os << "pay_p" << profile << "_b" << bidder;
  return os.str();
}

namespace {

// Iterates profiles as digit vectors in index order.
class ProfileIter {
 public:
  ProfileIter(int coords, int bins) : digits_(static_cast<std::size_t>(coords), 0), bins_(bins) {}

  const std::vector<int>& digits() const { return digits_; }

  bool next() {
    for (std::size_t k = 0; k < digits_.size(); ++k) {
      if (++digits_[k] < bins_) return true;
      digits_[k] = 0;
    }
    return false;
  }

 private:
  std::vector<int> digits_;
  int bins_;
};

}  // namespace

void enumerate_constraints(const LpModel& model,
                           const std::function<void(const LpConstraint&)>& fn) {
  int n = model.bidders;
  int m = model.items;
  int bins = model.bins;
  std::uint64_t reports = ipow(static_cast<std::uint64_t>(bins), m);

  ProfileIter it(n * m, bins);
  std::uint64_t p = 0;
  do {
    const std::vector<int>& digits = it.digits();

    // IC: truthful utility >= utility from reporting r instead.
    for (int i = 0; i < n; ++i) {
      std::vector<double> values(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) {
        values[static_cast<std::size_t>(j)] =
            bin_center(digits[static_cast<std::size_t>(i * m + j)], bins,
                       model.lo, model.hi);
      }
      std::vector<int> mis_digits = digits;
      for (std::uint64_t r = 0; r < reports; ++r) {
        std::uint64_t rem = r;
        bool same = true;
        for (int j = 0; j < m; ++j) {
          int d = static_cast<int>(rem % static_cast<std::uint64_t>(bins));
          rem /= static_cast<std::uint64_t>(bins);
          mis_digits[static_cast<std::size_t>(i * m + j)] = d;
          same = same && d == digits[static_cast<std::size_t>(i * m + j)];
        }
        if (same) continue;
        std::uint64_t p2 = profile_index(mis_digits, bins);
        LpConstraint c;
        std::ostringstream name;
        name << "ic_p" << p << "_b" << i << "_r" << r;
        c.name = name.str();
        for (int j = 0; j < m; ++j) {
          double v = values[static_cast<std::size_t>(j)];
          c.terms.emplace_back(alloc_var(p, i, j), v);
          c.terms.emplace_back(alloc_var(p2, i, j), -v);
        }
        c.terms.emplace_back(pay_var(p, i), -1.0);
        c.terms.emplace_back(pay_var(p2, i), 1.0);
        c.relation = 'G';
        c.rhs = 0.0;
        fn(c);
      }
    }

    // IR: truthful utility >= 0.
    for (int i = 0; i < n; ++i) {
      LpConstraint c;
      std::ostringstream name;
      name << "ir_p" << p << "_b" << i;
      c.name = name.str();
      for (int j = 0; j < m; ++j) {
        double v = bin_center(digits[static_cast<std::size_t>(i * m + j)], bins,
                              model.lo, model.hi);
        c.terms.emplace_back(alloc_var(p, i, j), v);
      }
      c.terms.emplace_back(pay_var(p, i), -1.0);
      c.relation = 'G';
      c.rhs = 0.0;
      fn(c);
    }

    // Feasibility: items can be allocated at most once; each bidder's
    // total allocation is capped by the item count.
    for (int j = 0; j < m; ++j) {
      LpConstraint c;
      std::ostringstream name;
      name << "item_p" << p << "_i" << j;
      c.name = name.str();
      for (int i = 0; i < n; ++i) c.terms.emplace_back(alloc_var(p, i, j), 1.0);
      c.relation = 'L';
      c.rhs = 1.0;
      fn(c);
    }
    for (int i = 0; i < n; ++i) {
      LpConstraint c;
      std::ostringstream name;
      name << "bidder_p" << p << "_b" << i;
      c.name = name.str();
      for (int j = 0; j < m; ++j) c.terms.emplace_back(alloc_var(p, i, j), 1.0);
      c.relation = 'L';
      c.rhs = static_cast<double>(m);
      fn(c);
    }

    ++p;
  } while (it.next());
}

void write_lp(const LpModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.precision(12);
  f << "\\ discretized optimal-auction linear program\n";
  f << "\\ bidders: " << model.bidders << " items: " << model.items
    << " bins: " << model.bins << " support: [" << model.lo << ", " << model.hi
    << "]\n";
  f << "\\ variables: " << model.counts.variables << "\n";
  f << "\\ ic_constraints: " << model.counts.ic << "\n";
  f << "\\ ir_constraints: " << model.counts.ir << "\n";
  f << "\\ feasibility_constraints: " << model.counts.feasibility << "\n";
  f << "Maximize\n obj:";

  double prob = 1.0 / static_cast<double>(model.counts.profiles);
  std::uint64_t terms = 0;
  for (std::uint64_t p = 0; p < model.counts.profiles; ++p) {
    for (int i = 0; i < model.bidders; ++i) {
      f << " + " << prob << ' ' << pay_var(p, i);
      if (++terms % 8 == 0) f << "\n    ";
    }
  }
  f << "\nSubject To\n";
  enumerate_constraints(model, [&](const LpConstraint& c) {
    f << ' ' << c.name << ':';
    for (const auto& [var, coeff] : c.terms) {
      if (coeff >= 0) {
        f << " + " << coeff << ' ' << var;
      } else {
        f << " - " << -coeff << ' ' << var;
      }
    }
    f << (c.relation == 'G' ? " >= " : " <= ") << c.rhs << "\n";
  });
  f << "Bounds\n";
  for (std::uint64_t p = 0; p < model.counts.profiles; ++p) {
    for (int i = 0; i < model.bidders; ++i) {
      for (int j = 0; j < model.items; ++j) {
        f << " 0 <= " << alloc_var(p, i, j) << " <= 1\n";
      }
      f << " " << pay_var(p, i) << " >= 0\n";
    }
  }
  f << "End\n";
  if (!f) throw IoError("write failed for '" + path + "'");
}

LpParsed read_lp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  LpParsed out;
  std::string line;
  enum class Section { kNone, kObjective, kConstraints, kBounds };
  Section section = Section::kNone;
  std::string pending;  // accumulated objective text

  auto parse_terms = [](const std::string& text,
                        std::vector<std::pair<std::string, double>>* terms) {
    std::istringstream is(text);
    std::string tok;
    double sign = 1.0;
    double coeff = 1.0;
    bool have_coeff = false;
    while (is >> tok) {
      if (tok == "+") {
        sign = 1.0;
        continue;
      }
      if (tok == "-") {
        sign = -1.0;
        continue;
      }
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end && *end == '\0') {
        coeff = v;
        have_coeff = true;
      } else {
        terms->emplace_back(tok, sign * (have_coeff ? coeff : 1.0));
        sign = 1.0;
        coeff = 1.0;
        have_coeff = false;
      }
    }
  };

  auto flush_objective = [&]() {
    if (pending.empty()) return;
    std::vector<std::pair<std::string, double>> terms;
    std::size_t colon = pending.find(':');
    parse_terms(colon == std::string::npos ? pending : pending.substr(colon + 1),
                &terms);
    for (const auto& [var, coeff] : terms) out.objective[var] += coeff;
    pending.clear();
  };

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '\\') {
      if (line.find("variables:") != std::string::npos) {
        out.declared_variables =
            std::stoull(line.substr(line.find("variables:") + 10));
      }
      continue;
    }
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.rfind("Maximize", 0) == 0) {
      section = Section::kObjective;
      continue;
    }
    if (trimmed.rfind("Subject To", 0) == 0) {
      flush_objective();
      section = Section::kConstraints;
      continue;
    }
    if (trimmed.rfind("Bounds", 0) == 0) {
      section = Section::kBounds;
      continue;
    }
    if (trimmed.rfind("End", 0) == 0) break;

    switch (section) {
      case Section::kObjective:
        pending += " " + trimmed;
        break;
      case Section::kConstraints: {
        LpConstraint c;
        std::size_t colon = trimmed.find(':');
        c.name = trimmed.substr(0, colon);
        std::string body = trimmed.substr(colon + 1);
        std::size_t ge = body.find(">=");
        std::size_t le = body.find("<=");
        std::size_t op = std::min(ge, le);
        c.relation = ge < le ? 'G' : 'L';
        c.rhs = std::stod(body.substr(op + 2));
        parse_terms(body.substr(0, op), &c.terms);
        out.constraints.push_back(std::move(c));
        break;
      }
      case Section::kBounds: {
        // Forms: "0 <= var <= 1" and "var >= 0".
        std::istringstream is(trimmed);
        std::vector<std::string> toks;
        std::string tok;
        while (is >> tok) toks.push_back(tok);
        if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=") {
          out.bounds[toks[2]] = {std::stod(toks[0]), std::stod(toks[4])};
        } else if (toks.size() == 3 && toks[1] == ">=") {
          out.bounds[toks[0]] = {std::stod(toks[2]), 1e300};
        }
        break;
      }
      case Section::kNone:
        break;
    }
  }
  return out;
}

std::string stats_json(const LpModel& model) {
  nlohmann::json j;
  j["bidders"] = model.bidders;
  j["items"] = model.items;
  j["bins"] = model.bins;
  j["support"] = {model.lo, model.hi};
  j["profiles"] = model.counts.profiles;
  j["variables"] = model.counts.variables;
  j["ic_constraints"] = model.counts.ic;
  j["ir_constraints"] = model.counts.ir;
  j["ic_ir_constraints"] = model.counts.ic_ir();
  j["feasibility_constraints"] = model.counts.feasibility;
  return j.dump(2);
}

GridMechanism::GridMechanism(LpModel model, std::vector<double> alloc_table,
                             std::vector<double> pay_table)
    : model_(model),
      alloc_table_(std::move(alloc_table)),
      pay_table_(std::move(pay_table)) {
  std::uint64_t nm = static_cast<std::uint64_t>(model_.bidders) * model_.items;
  if (alloc_table_.size() != model_.counts.profiles * nm ||
      pay_table_.size() !=
          model_.counts.profiles * static_cast<std::uint64_t>(model_.bidders)) {
    throw ConfigError("grid mechanism: table sizes do not match the model");
  }
}

Outcome GridMechanism::run(const Tensor& bids) const {
  std::size_t rows = bids.rows();
  std::size_t n = static_cast<std::size_t>(model_.bidders);
  std::size_t m = static_cast<std::size_t>(model_.items);
  Outcome out;
  out.alloc = Tensor({rows, n * m});
  out.pay = Tensor({rows, n});
  std::vector<int> digits(n * m);
  for (std::size_t l = 0; l < rows; ++l) {
    for (std::size_t c = 0; c < n * m; ++c) {
      digits[c] = value_bin(bids.at(l, c), model_.bins, model_.lo, model_.hi);
    }
    std::uint64_t p = profile_index(digits, model_.bins);
    for (std::size_t c = 0; c < n * m; ++c) {
      out.alloc.at(l, c) = alloc_table_[p * n * m + c];
    }
    for (std::size_t i = 0; i < n; ++i) {
      out.pay.at(l, i) = pay_table_[p * n + i];
    }
  }
  return out;
}

}  // namespace deepauction::lpexport
