#pragma once

#include <map>
#include <memory>
#include <string>

#include "checkpoint.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "mechanism.hpp"

namespace deepauction::runner {

// Flat key=value configuration; files hold one pair per line with '#'
// comments, command-line flags override file values.
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    kv_[key] = value;
  }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

  void load_file(const std::string& path);

 private:
  std::map<std::string, std::string> kv_;
};

struct TrainArtifacts {
  std::string checkpoint_path;
  std::string history_path;
  std::string metrics_path;
  std::string extra_csv_path;  // menu / transform dump, when applicable
};

// Trains the configured model ("model" = regretnet | rochetnet |
// myersonnet), writes the artifacts into out_dir and returns their paths.
// On a numeric failure the last parameters are checkpointed as
// last_good.ckpt before the error propagates.
TrainArtifacts cmd_train(const RunConfig& cfg, const std::string& out_dir);

// Rebuilds the mechanism stored in a checkpoint.
struct LoadedModel {
  checkpoint::Checkpoint ckpt;
  std::unique_ptr<Mechanism> mechanism;
  BidGradientOracle* oracle = nullptr;  // non-null for regretnet models
};
LoadedModel load_model(const std::string& checkpoint_path);
LoadedModel model_from_checkpoint(checkpoint::Checkpoint ckpt);

// Evaluates a loaded model, or a reference mechanism named in the config
// ("reference" = posted-price | spa) when model is null. Returns the
// metrics report JSON.
std::string cmd_evaluate(const LoadedModel* model, const RunConfig& cfg);

// Monte-Carlo baseline revenues for the configured setting, as JSON.
std::string cmd_baseline(const RunConfig& cfg);

// Per-item allocation-probability heatmaps over the value grid, one CSV
// per item. Requires a single-bidder two-item regretnet or rochetnet
// checkpoint.
void cmd_heatmap(const LoadedModel& model, int grid,
                 const std::string& out_dir);

// LP export: always returns the stats JSON; writes the LP text file when
// lp_path is non-empty.
std::string cmd_lpexport(int bidders, int items, int bins, double lo,
                         double hi, const std::string& lp_path);

// Shared evaluation path: metrics for an arbitrary mechanism under a
// setting's test distribution.
evaluation::MetricsReport evaluate_mechanism(
    const Mechanism& mech, BidGradientOracle* oracle,
    const valuations::SettingSpec& spec, const RunConfig& cfg,
    const std::string& model_name);

// Writes the menu / transform CSV for non-regretnet models.
void export_model_csv(const LoadedModel& model, const std::string& path);

}  // namespace deepauction::runner
