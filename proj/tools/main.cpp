// Batch experiment runner over the deepauction C API: train, evaluate,
// baseline, heatmap and lpexport subcommands driven by a key=value
// config file with flag overrides.
//
// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deepauction/deepauction.h"

namespace {

struct ConfigHandle {
  da_config* cfg = da_config_new();
  ~ConfigHandle() { da_config_free(cfg); }
};

struct ModelHandle {
  da_model* model = nullptr;
  ~ModelHandle() { da_model_free(model); }
};

int fail(da_status status) {
  std::fprintf(stderr, "error: %s\n", da_last_error());
  return static_cast<int>(status);
}

// Applies --config file first, then explicit --set overrides.
int load_config(ConfigHandle& handle, const std::string& config_path,
                const std::vector<std::pair<std::string, std::string>>& sets) {
  if (!config_path.empty()) {
    da_status s = da_config_load_file(handle.cfg, config_path.c_str());
    if (s != DA_OK) return fail(s);
  }
  for (const auto& [key, value] : sets) {
    da_status s = da_config_set(handle.cfg, key.c_str(), value.c_str());
    if (s != DA_OK) return fail(s);
  }
  return 0;
}

void print_json(const char* json) { std::printf("%s\n", json); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deepauction: learned revenue-maximizing auctions"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--set", overrides,
                    "override a config key (repeatable): --set key value");
  };

  // train
  auto* train = app.add_subcommand("train", "train a model and emit artifacts");
  std::string out_dir = "runs/latest";
  std::string setting, model, seed;
  bool desk_scale = false, full_scale = false, verbose = false;
  add_common(train);
  train->add_option("--out", out_dir, "output directory");
  train->add_option("--setting", setting, "setting id (I..XI or named)");
  train->add_option("--model", model, "regretnet | rochetnet | myersonnet");
  train->add_option("--seed", seed, "random seed");
  train->add_flag("--desk-scale", desk_scale, "desk-scale defaults");
  train->add_flag("--full-scale", full_scale, "full-scale defaults");
  train->add_flag("--verbose", verbose, "per-epoch progress on stderr");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "metrics for a checkpoint"
                                                  " or reference mechanism");
  std::string eval_checkpoint, eval_reference;
  add_common(evaluate);
  evaluate->add_option("--checkpoint", eval_checkpoint, "checkpoint file");
  evaluate->add_option("--reference", eval_reference,
                       "posted-price | spa (instead of a checkpoint)");
  evaluate->add_option("--setting", setting, "setting id override");
  evaluate->add_option("--seed", seed, "random seed");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Monte-Carlo baseline revenues");
  add_common(baseline);
  baseline->add_option("--setting", setting, "setting id");
  baseline->add_option("--seed", seed, "random seed");

  // heatmap
  auto* heatmap = app.add_subcommand("heatmap", "allocation probability grids");
  std::string hm_checkpoint;
  int grid = 201;
  add_common(heatmap);
  heatmap->add_option("--checkpoint", hm_checkpoint, "checkpoint file")
      ->required();
  heatmap->add_option("--grid", grid, "grid resolution per axis");
  heatmap->add_option("--out", out_dir, "output directory");

  // lpexport
  auto* lpexport = app.add_subcommand("lpexport", "discretized LP writer");
  int lp_n = 2, lp_m = 3, lp_bins = 5;
  double lp_lo = 0.0, lp_hi = 1.0;
  std::string lp_path;
  bool stats_only = false;
  lpexport->add_option("-n,--bidders", lp_n, "bidder count");
  lpexport->add_option("-m,--items", lp_m, "item count");
  lpexport->add_option("-D,--bins", lp_bins, "value bins per item");
  lpexport->add_option("--lo", lp_lo, "support lower bound");
  lpexport->add_option("--hi", lp_hi, "support upper bound");
  lpexport->add_option("-o,--output", lp_path, "LP file path");
  lpexport->add_flag("--stats-only", stats_only, "print counts, write nothing");

  CLI11_PARSE(app, argc, argv);

  ConfigHandle cfg;
  auto apply_flag = [&](const char* key, const std::string& value) {
    if (!value.empty()) da_config_set(cfg.cfg, key, value.c_str());
  };

  if (train->parsed()) {
    int rc = load_config(cfg, config_path, overrides);
    if (rc != 0) return rc;
    apply_flag("setting", setting);
    apply_flag("model", model);
    apply_flag("seed", seed);
    if (desk_scale) da_config_set(cfg.cfg, "desk_scale", "true");
    if (full_scale) da_config_set(cfg.cfg, "desk_scale", "false");
    if (verbose) da_config_set(cfg.cfg, "verbose", "true");
    da_status s = da_train(cfg.cfg, out_dir.c_str(), nullptr);
    if (s != DA_OK) return fail(s);
    std::printf("artifacts written to %s\n", out_dir.c_str());
    return 0;
  }

  if (evaluate->parsed()) {
    int rc = load_config(cfg, config_path, overrides);
    if (rc != 0) return rc;
    apply_flag("setting", setting);
    apply_flag("seed", seed);
    apply_flag("reference", eval_reference);
    ModelHandle model_handle;
    if (!eval_checkpoint.empty()) {
      da_status s = da_model_load(eval_checkpoint.c_str(), &model_handle.model);
      if (s != DA_OK) return fail(s);
    } else if (eval_reference.empty()) {
      std::fprintf(stderr, "error: evaluate needs --checkpoint or --reference\n");
      return 2;
    }
    char* json = nullptr;
    da_status s = da_evaluate(model_handle.model, cfg.cfg, &json);
    if (s != DA_OK) return fail(s);
    print_json(json);
    da_string_free(json);
    return 0;
  }

  if (baseline->parsed()) {
    int rc = load_config(cfg, config_path, overrides);
    if (rc != 0) return rc;
    apply_flag("setting", setting);
    apply_flag("seed", seed);
    char* json = nullptr;
    da_status s = da_baseline(cfg.cfg, &json);
    if (s != DA_OK) return fail(s);
    print_json(json);
    da_string_free(json);
    return 0;
  }

  if (heatmap->parsed()) {
    ModelHandle model_handle;
    da_status s = da_model_load(hm_checkpoint.c_str(), &model_handle.model);
    if (s != DA_OK) return fail(s);
    s = da_heatmap(model_handle.model, grid, out_dir.c_str());
    if (s != DA_OK) return fail(s);
    std::printf("heatmaps written to %s\n", out_dir.c_str());
    return 0;
  }

  if (lpexport->parsed()) {
    char* json = nullptr;
    da_status s = da_lp_export(lp_n, lp_m, lp_bins, lp_lo, lp_hi,
                               stats_only || lp_path.empty() ? nullptr
                                                             : lp_path.c_str(),
                               &json);
    if (s != DA_OK) return fail(s);
    print_json(json);
    da_string_free(json);
    return 0;
  }

  return 2;
}
