#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "baselines.hpp"
#include "lpexport.hpp"
#include "myersonnet.hpp"
#include "regretnet.hpp"
#include "rochetnet.hpp"
#include "training.hpp"

namespace deepauction::runner {

using diffcore::ParamStore;
using diffcore::Tensor;
using valuations::SettingSpec;
using valuations::ValuationClass;

std::string RunConfig::get(const std::string& key,
                           const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_num(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not numeric: '" +
                      it->second + "'");
  }
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: '" +
                      it->second + "'");
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: '" + v + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          " is not key=value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        " has an empty key");
    }
    kv_[key] = value;
  }
}

namespace {

struct EvalScale {
  std::string name;
  std::size_t train_size;
  int epochs;
  std::size_t test_size;
  std::size_t regret_test_size;
  int restarts;
  int steps;
};

EvalScale scale_from(const RunConfig& cfg) {
  bool desk = cfg.get_bool("desk_scale", true);
  EvalScale s;
  if (desk) {
    s = {"desk", 5000, 40, 10000, 1000, 100, 500};
  } else {
    s = {"full", 640000, 80, 10000, 10000, 1000, 2000};
  }
  s.train_size = static_cast<std::size_t>(
      cfg.get_int("train_size", static_cast<long long>(s.train_size)));
  s.epochs = static_cast<int>(cfg.get_int("epochs", s.epochs));
  s.test_size = static_cast<std::size_t>(
      cfg.get_int("test_size", static_cast<long long>(s.test_size)));
  s.regret_test_size = static_cast<std::size_t>(cfg.get_int(
      "regret_test_size", static_cast<long long>(s.regret_test_size)));
  s.restarts = static_cast<int>(cfg.get_int("eval_restarts", s.restarts));
  s.steps = static_cast<int>(cfg.get_int("eval_steps", s.steps));
  return s;
}

training::TrainConfig train_config_from(const RunConfig& cfg,
                                        const EvalScale& scale) {
  training::TrainConfig tc;
  tc.setting_id = cfg.get("setting", "I");
  tc.hidden_layers = static_cast<int>(cfg.get_int("layers", 2));
  tc.hidden_width = static_cast<int>(cfg.get_int("width", 100));
  tc.train_size = scale.train_size;
  tc.test_size = scale.test_size;
  tc.batch = static_cast<std::size_t>(cfg.get_int("batch", 128));
  tc.epochs = scale.epochs;
  tc.rho_init = cfg.get_num("rho_init", 1.0);
  tc.rho_increment = cfg.get_num("rho_increment", 1.0);
  tc.rho_inc_every_epochs = static_cast<int>(cfg.get_int("rho_inc_every", 2));
  tc.lagrange_every = static_cast<int>(cfg.get_int("lagrange_every", 100));
  tc.lambda_init = cfg.get_num("lambda_init", 1.0);
  tc.misreport_steps = static_cast<int>(cfg.get_int("misreport_steps", 25));
  tc.misreport_lr = cfg.get_num("misreport_lr", 0.1);
  tc.misreport_samples =
      static_cast<std::size_t>(cfg.get_int("misreport_samples", 100));
  tc.adam_lr = cfg.get_num("lr", 0.001);
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  std::string mode = cfg.get("mode", "gradient");
  if (mode == "gradient") {
    tc.mode = training::RegretMode::kGradient;
  } else if (mode == "sample" || mode == "sample-based") {
    tc.mode = training::RegretMode::kSampleBased;
  } else {
    throw ConfigError("mode must be 'gradient' or 'sample-based'");
  }
  tc.verbose = cfg.get_bool("verbose", false);
  return tc;
}

std::unique_ptr<Mechanism> reference_mechanism(const RunConfig& cfg,
                                               const SettingSpec& spec) {
  std::string ref = cfg.get("reference", "");
  if (ref == "posted-price") {
    double price = cfg.get_num("price", 0.5);
    std::vector<double> prices(static_cast<std::size_t>(spec.items()), price);
    return std::make_unique<baselines::PostedPriceMechanism>(spec.items(),
                                                             prices);
  }
  if (ref == "spa") {
    return std::make_unique<baselines::SpaMechanism>(
        spec.bidders(), cfg.get_num("reserve", 0.0));
  }
  throw ConfigError("unknown reference mechanism '" + ref + "'");
}

}  // namespace

evaluation::MetricsReport evaluate_mechanism(const Mechanism& mech,
                                             BidGradientOracle* oracle,
                                             const SettingSpec& spec,
                                             const RunConfig& cfg,
                                             const std::string& model_name) {
  EvalScale scale = scale_from(cfg);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  Rng master(seed);
  Rng test_rng = master.fork("test-data");
  Tensor test = spec.sample_batch(test_rng, scale.test_size);

  evaluation::MetricsReport report;
  report.setting = spec.id();
  report.model = model_name;
  report.scale = scale.name;
  report.seed = seed;
  report.test_size = scale.test_size;

  evaluation::RevenueStats rev = evaluation::revenue(mech, test);
  report.revenue_mean = rev.mean;
  report.revenue_stderr = rev.stderr_;
  report.ir_violation = evaluation::ir_violation(mech, test);

  std::size_t regret_rows = std::min(scale.regret_test_size, scale.test_size);
  Tensor regret_set({regret_rows, test.cols()});
  for (std::size_t l = 0; l < regret_rows; ++l) {
    for (std::size_t c = 0; c < test.cols(); ++c) {
      regret_set.at(l, c) = test.at(l, c);
    }
  }
  report.regret_test_size = regret_rows;
  report.eval_restarts = scale.restarts;
  report.eval_steps = scale.steps;
  report.eval_step_size = cfg.get_num("eval_step_size", 0.1);

  Rng regret_rng = master.fork("regret-eval");
  report.regret_per_bidder = evaluation::estimate_regret(
      mech, oracle, spec, regret_set, scale.restarts, scale.steps,
      report.eval_step_size, regret_rng);
  double s = 0.0;
  for (double r : report.regret_per_bidder) s += r;
  report.regret_mean = s / static_cast<double>(report.regret_per_bidder.size());
  return report;
}

namespace {

TrainArtifacts train_regretnet(const RunConfig& cfg, const std::string& out_dir,
                               const EvalScale& scale) {
  training::TrainConfig tc = train_config_from(cfg, scale);
  TrainArtifacts art;
  art.checkpoint_path = out_dir + "/checkpoint.ckpt";
  art.history_path = out_dir + "/history.json";
  art.metrics_path = out_dir + "/metrics.json";

  training::Trainer trainer(tc);
  training::TrainResult result;
  try {
    result = trainer.run();
  } catch (const NumericError&) {
    // The last finite parameters are kept for post-mortems.
    checkpoint::Checkpoint last;
    last.kind = "regretnet";
    last.meta = {{"setting", tc.setting_id}, {"partial", true}};
    last.params = trainer.params();
    checkpoint::save_checkpoint(last, out_dir + "/last_good.ckpt");
    throw;
  }

  checkpoint::Checkpoint ckpt;
  ckpt.kind = "regretnet";
  ckpt.meta = {{"setting", tc.setting_id},
               {"class", valuations::valuation_class_name(result.arch.cls)},
               {"bidders", result.arch.bidders},
               {"items", result.arch.items},
               {"layers", result.arch.hidden_layers},
               {"width", result.arch.hidden_width},
               {"seed", tc.seed},
               {"train_size", tc.train_size},
               {"epochs", tc.epochs},
               {"scale", scale.name}};
  ckpt.params = result.params;
  checkpoint::save_checkpoint(ckpt, art.checkpoint_path);
  checkpoint::save_history(result.history, art.history_path);

  SettingSpec spec = SettingSpec::by_id(tc.setting_id);
  regretnet::RegretNetMechanism mech(result.arch, result.params);
  evaluation::MetricsReport report =
      evaluate_mechanism(mech, &mech, spec, cfg, "regretnet");
  checkpoint::write_text_file(art.metrics_path, report.to_json());
  return art;
}

TrainArtifacts train_rochetnet_cmd(const RunConfig& cfg,
                                   const std::string& out_dir,
                                   const EvalScale& scale) {
  rochetnet::RochetTrainConfig rc;
  rc.setting_id = cfg.get("setting", "I");
  rc.entries = static_cast<int>(cfg.get_int("entries", 1000));
  rc.kappa = cfg.get_num("kappa", 1000.0);
  rc.train_size = scale.train_size;
  rc.batch = static_cast<std::size_t>(cfg.get_int("batch", 128));
  rc.epochs = scale.epochs;
  rc.adam_lr = cfg.get_num("lr", 0.001);
  rc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  rc.verbose = cfg.get_bool("verbose", false);

  rochetnet::RochetTrainResult result = rochetnet::train_rochetnet(rc);

  TrainArtifacts art;
  art.checkpoint_path = out_dir + "/checkpoint.ckpt";
  art.metrics_path = out_dir + "/metrics.json";
  art.extra_csv_path = out_dir + "/menu.csv";

  checkpoint::Checkpoint ckpt;
  ckpt.kind = "rochetnet";
  ckpt.meta = {{"setting", rc.setting_id},
               {"mode", result.net.mode() == rochetnet::MenuMode::kAdditive
                            ? "additive"
                            : "unit-demand"},
               {"items", result.net.items()},
               {"entries", result.net.entries()},
               {"kappa", result.net.kappa()},
               {"seed", rc.seed},
               {"train_size", rc.train_size},
               {"epochs", rc.epochs},
               {"scale", scale.name}};
  ckpt.params = result.net.params();
  checkpoint::save_checkpoint(ckpt, art.checkpoint_path);
  rochetnet::write_menu_csv(result.net, art.extra_csv_path);

  SettingSpec spec = SettingSpec::by_id(rc.setting_id);
  rochetnet::RochetMechanism mech(result.net);
  evaluation::MetricsReport report =
      evaluate_mechanism(mech, nullptr, spec, cfg, "rochetnet");
  checkpoint::write_text_file(art.metrics_path, report.to_json());
  return art;
}

TrainArtifacts train_myersonnet_cmd(const RunConfig& cfg,
                                    const std::string& out_dir,
                                    const EvalScale& scale) {
  myersonnet::MyersonTrainConfig mc;
  mc.setting_id = cfg.get("setting", "sym-uniform-3");
  mc.k_groups = static_cast<int>(cfg.get_int("k_groups", 5));
  mc.j_lines = static_cast<int>(cfg.get_int("j_lines", 10));
  mc.kappa = cfg.get_num("kappa", 1000.0);
  mc.train_size = static_cast<std::size_t>(cfg.get_int("train_size", 1000));
  mc.batch = static_cast<std::size_t>(cfg.get_int("batch", 128));
  mc.epochs = static_cast<int>(cfg.get_int("epochs", 2000));
  mc.adam_lr = cfg.get_num("lr", 0.01);
  mc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  mc.verbose = cfg.get_bool("verbose", false);

  myersonnet::MyersonTrainResult result = myersonnet::train_myersonnet(mc);

  TrainArtifacts art;
  art.checkpoint_path = out_dir + "/checkpoint.ckpt";
  art.metrics_path = out_dir + "/metrics.json";
  art.extra_csv_path = out_dir + "/transforms.csv";

  checkpoint::Checkpoint ckpt;
  ckpt.kind = "myersonnet";
  ckpt.meta = {{"setting", mc.setting_id},
               {"bidders", result.net.bidders()},
               {"k_groups", mc.k_groups},
               {"j_lines", mc.j_lines},
               {"kappa", mc.kappa},
               {"seed", mc.seed},
               {"train_size", mc.train_size},
               {"epochs", mc.epochs},
               {"scale", scale.name}};
  for (int i = 0; i < result.net.bidders(); ++i) {
    const auto& t = result.net.transforms()[static_cast<std::size_t>(i)];
    ckpt.params.set("alpha" + std::to_string(i), t.alpha);
    ckpt.params.set("beta" + std::to_string(i), t.beta);
  }
  checkpoint::save_checkpoint(ckpt, art.checkpoint_path);
  myersonnet::write_transforms_csv(result.net, art.extra_csv_path);

  SettingSpec spec = SettingSpec::by_id(mc.setting_id);
  myersonnet::MyersonMechanism mech(result.net);
  evaluation::MetricsReport report =
      evaluate_mechanism(mech, nullptr, spec, cfg, "myersonnet");
  checkpoint::write_text_file(art.metrics_path, report.to_json());
  return art;
}

}  // namespace

TrainArtifacts cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
  EvalScale scale = scale_from(cfg);
  std::string model = cfg.get("model", "regretnet");
  if (model == "regretnet") return train_regretnet(cfg, out_dir, scale);
  if (model == "rochetnet") return train_rochetnet_cmd(cfg, out_dir, scale);
  if (model == "myersonnet") return train_myersonnet_cmd(cfg, out_dir, scale);
  throw ConfigError("unknown model '" + model + "'");
}

LoadedModel model_from_checkpoint(checkpoint::Checkpoint ckpt) {
  LoadedModel out;
  if (ckpt.kind == "regretnet") {
    regretnet::ArchSpec arch;
    std::string cls = ckpt.meta.at("class").get<std::string>();
    if (cls == "additive") {
      arch.cls = ValuationClass::kAdditive;
    } else if (cls == "unit-demand") {
      arch.cls = ValuationClass::kUnitDemand;
    } else {
      arch.cls = ValuationClass::kCombinatorial;
    }
    arch.bidders = ckpt.meta.at("bidders").get<int>();
    arch.items = ckpt.meta.at("items").get<int>();
    arch.hidden_layers = ckpt.meta.at("layers").get<int>();
    arch.hidden_width = ckpt.meta.at("width").get<int>();
    auto mech =
        std::make_unique<regretnet::RegretNetMechanism>(arch, ckpt.params);
    out.oracle = mech.get();
    out.mechanism = std::move(mech);
  } else if (ckpt.kind == "rochetnet") {
    rochetnet::MenuMode mode =
        ckpt.meta.at("mode").get<std::string>() == "additive"
            ? rochetnet::MenuMode::kAdditive
            : rochetnet::MenuMode::kUnitDemand;
    rochetnet::MenuNet net(mode, ckpt.meta.at("items").get<int>(),
                           ckpt.meta.at("entries").get<int>(),
                           ckpt.meta.at("kappa").get<double>());
    net.params() = ckpt.params;
    out.mechanism = std::make_unique<rochetnet::RochetMechanism>(std::move(net));
  } else if (ckpt.kind == "myersonnet") {
    int n = ckpt.meta.at("bidders").get<int>();
    int k = ckpt.meta.at("k_groups").get<int>();
    int j = ckpt.meta.at("j_lines").get<int>();
    std::vector<myersonnet::VirtualTransform> transforms;
    for (int i = 0; i < n; ++i) {
      myersonnet::VirtualTransform t(k, j);
      t.alpha = ckpt.params.get("alpha" + std::to_string(i));
      t.beta = ckpt.params.get("beta" + std::to_string(i));
      transforms.push_back(std::move(t));
    }
    out.mechanism = std::make_unique<myersonnet::MyersonMechanism>(
        myersonnet::MyersonNet(std::move(transforms)));
  } else {
    throw IoError("unknown checkpoint kind '" + ckpt.kind + "'");
  }
  out.ckpt = std::move(ckpt);
  return out;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  return model_from_checkpoint(checkpoint::load_checkpoint(checkpoint_path));
}

std::string cmd_evaluate(const LoadedModel* model, const RunConfig& cfg) {
  if (model != nullptr) {
    std::string setting = model->ckpt.meta.value("setting", cfg.get("setting", "I"));
    SettingSpec spec = SettingSpec::by_id(cfg.get("setting", setting));
    evaluation::MetricsReport report = evaluate_mechanism(
        *model->mechanism, model->oracle, spec, cfg, model->ckpt.kind);
    return report.to_json();
  }
  SettingSpec spec = SettingSpec::by_id(cfg.get("setting", "I"));
  std::unique_ptr<Mechanism> ref = reference_mechanism(cfg, spec);
  evaluation::MetricsReport report = evaluate_mechanism(
      *ref, nullptr, spec, cfg, "reference:" + cfg.get("reference", ""));
  return report.to_json();
}

namespace {

// Baseline results reuse the metrics-report schema; the strategyproof
// reference rules carry an exactly-zero regret and IR violation.
nlohmann::json baseline_report(const std::string& setting,
                               const std::string& model, double rev_mean,
                               double rev_stderr, std::size_t samples,
                               std::uint64_t seed) {
  evaluation::MetricsReport r;
  r.setting = setting;
  r.model = model;
  r.scale = "monte-carlo";
  r.revenue_mean = rev_mean;
  r.revenue_stderr = rev_stderr;
  r.regret_per_bidder = {};
  r.regret_mean = 0.0;
  r.ir_violation = 0.0;
  r.test_size = samples;
  r.regret_test_size = 0;
  r.seed = seed;
  return nlohmann::json::parse(r.to_json());
}

}  // namespace

std::string cmd_baseline(const RunConfig& cfg) {
  std::string id = cfg.get("setting", "IX");
  SettingSpec spec = SettingSpec::by_id(id);
  std::size_t samples =
      static_cast<std::size_t>(cfg.get_int("samples", 1000000));
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

  nlohmann::json j;
  j["setting"] = id;
  j["samples"] = samples;
  j["seed"] = seed;
  nlohmann::json reports = nlohmann::json::object();

  Rng master(seed);
  if (spec.items() == 1) {
    if (spec.bidders() >= 2) {
      Rng rng = master.fork("spa");
      reports["spa"] = baseline_report(
          id, "spa", baselines::spa_revenue(spec, samples, rng), 0.0, samples,
          seed);
    }
    // Reserve-optimized single-item auction on the empirical draws.
    Rng rng = master.fork("myerson");
    Tensor batch = spec.sample_batch(rng, samples);
    int n = spec.bidders();
    std::vector<double> highest(samples), second(samples);
    for (std::size_t l = 0; l < samples; ++l) {
      double h = -1e300, s = -1e300;
      for (int i = 0; i < n; ++i) {
        double v = batch.at(l, static_cast<std::size_t>(i));
        if (v > h) {
          s = h;
          h = v;
        } else if (v > s) {
          s = v;
        }
      }
      highest[l] = h;
      second[l] = n == 1 ? 0.0 : s;
    }
    double lo = spec.item_lo(0, 0);
    double hi = spec.bounded_support() ? spec.item_hi(0, 0) : 30.0;
    for (int i = 1; i < n; ++i) {
      lo = std::min(lo, spec.item_lo(i, 0));
      if (spec.bounded_support()) hi = std::max(hi, spec.item_hi(i, 0));
    }
    baselines::ReserveSearch rs = baselines::optimize_reserve(
        highest, n == 1 ? std::vector<double>{} : second, lo, hi);
    reports["reserve_myerson"] =
        baseline_report(id, "reserve_myerson", rs.revenue, 0.0, samples, seed);
    reports["reserve_myerson"]["reserve"] = rs.reserve;
    if (id == "asym-uniform-5") {
      Rng arng = master.fork("asym");
      reports["virtual_value_myerson"] = baseline_report(
          id, "virtual_value_myerson",
          baselines::asymmetric_uniform_myerson_revenue(spec.bidders(),
                                                        samples, arng),
          0.0, samples, seed);
    }
  } else if (spec.valuation_class() == ValuationClass::kAdditive) {
    Rng rng_item = master.fork("itemwise");
    std::vector<baselines::ReserveSearch> info;
    double itemwise =
        baselines::itemwise_myerson_revenue(spec, samples, rng_item, &info);
    nlohmann::json reserves = nlohmann::json::array();
    for (const auto& rs : info) reserves.push_back(rs.reserve);
    reports["itemwise_myerson"] =
        baseline_report(id, "itemwise_myerson", itemwise, 0.0, samples, seed);
    reports["itemwise_myerson"]["reserves"] = reserves;

    Rng rng_bundle = master.fork("bundled");
    baselines::ReserveSearch brs;
    double bundled =
        baselines::bundled_myerson_revenue(spec, samples, rng_bundle, &brs);
    reports["bundled_myerson"] =
        baseline_report(id, "bundled_myerson", bundled, 0.0, samples, seed);
    reports["bundled_myerson"]["reserve"] = brs.reserve;
  } else {
    throw ConfigError("baselines cover additive and single-item settings");
  }
  j["baselines"] = reports;
  return j.dump(2);
}

void cmd_heatmap(const LoadedModel& model, int grid, const std::string& out_dir) {
  if (grid < 2) throw ConfigError("heatmap grid must be at least 2");
  const checkpoint::Checkpoint& ckpt = model.ckpt;
  int items = ckpt.kind == "myersonnet" ? 1 : ckpt.meta.at("items").get<int>();
  int bidders = ckpt.kind == "rochetnet" ? 1 : ckpt.meta.value("bidders", 1);
  if (items != 2 || bidders != 1) {
    throw ConfigError("heatmaps need a single-bidder two-item checkpoint");
  }
  std::string setting = ckpt.meta.at("setting").get<std::string>();
  SettingSpec spec = SettingSpec::by_id(setting);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "'");

  std::size_t g = static_cast<std::size_t>(grid);
  Tensor bids({g * g, 2});
  std::vector<double> axis1(g), axis2(g);
  for (std::size_t a = 0; a < g; ++a) {
    axis1[a] = spec.item_lo(0, 0) + (spec.item_hi(0, 0) - spec.item_lo(0, 0)) *
                                        static_cast<double>(a) /
                                        static_cast<double>(g - 1);
    axis2[a] = spec.item_lo(0, 1) + (spec.item_hi(0, 1) - spec.item_lo(0, 1)) *
                                        static_cast<double>(a) /
                                        static_cast<double>(g - 1);
  }
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t c = 0; c < g; ++c) {
      bids.at(r * g + c, 0) = axis1[c];
      bids.at(r * g + c, 1) = axis2[r];
    }
  }
  Outcome out = model.mechanism->run(bids);

  for (int item = 0; item < 2; ++item) {
    std::ofstream f(out_dir + "/item" + std::to_string(item + 1) + ".csv");
    if (!f) throw IoError("cannot write heatmap csv");
    f.precision(10);
    f << "v2\\v1";
    for (std::size_t c = 0; c < g; ++c) f << ',' << axis1[c];
    f << "\n";
    for (std::size_t r = 0; r < g; ++r) {
      f << axis2[r];
      for (std::size_t c = 0; c < g; ++c) {
        f << ',' << out.alloc.at(r * g + c, static_cast<std::size_t>(item));
      }
      f << "\n";
    }
  }
}

std::string cmd_lpexport(int bidders, int items, int bins, double lo, double hi,
                         const std::string& lp_path) {
  lpexport::LpModel model = lpexport::build_lp(bidders, items, bins, lo, hi);
  if (!lp_path.empty()) {
    lpexport::write_lp(model, lp_path);
  }
  return lpexport::stats_json(model);
}

void export_model_csv(const LoadedModel& model, const std::string& path) {
  if (model.ckpt.kind == "rochetnet") {
    auto* mech = dynamic_cast<rochetnet::RochetMechanism*>(model.mechanism.get());
    rochetnet::write_menu_csv(mech->net(), path);
  } else if (model.ckpt.kind == "myersonnet") {
    auto* mech = dynamic_cast<myersonnet::MyersonMechanism*>(model.mechanism.get());
    myersonnet::write_transforms_csv(mech->net(), path);
  } else {
    throw ConfigError("csv export applies to rochetnet and myersonnet models");
  }
}

}  // namespace deepauction::runner
