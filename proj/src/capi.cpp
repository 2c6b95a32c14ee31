#include "deepauction/deepauction.h"

#include <cstring>
#include <string>

#include "errors.hpp"
#include "runner.hpp"

using deepauction::ConfigError;
using deepauction::IoError;
using deepauction::NumericError;

struct da_config {
  deepauction::runner::RunConfig cfg;
};

struct da_model {
  deepauction::runner::LoadedModel loaded;
};

namespace {

thread_local std::string g_last_error;

da_status set_error(da_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Maps C++ exceptions onto status codes; the CLI reuses the codes as
// process exit codes.
template <typename Fn>
da_status guarded(Fn&& fn) {
  try {
    fn();
    return DA_OK;
  } catch (const ConfigError& e) {
    return set_error(DA_ERR_CONFIG, e.what());
  } catch (const deepauction::valuations::ValuationError& e) {
    return set_error(DA_ERR_CONFIG, e.what());
  } catch (const NumericError& e) {
    return set_error(DA_ERR_NUMERIC, e.what());
  } catch (const IoError& e) {
    return set_error(DA_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(DA_ERR_CONFIG, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* da_version(void) { return "1.0.0"; }

const char* da_last_error(void) { return g_last_error.c_str(); }

void da_string_free(char* s) { delete[] s; }

da_config* da_config_new(void) { return new da_config(); }

void da_config_free(da_config* cfg) { delete cfg; }

da_status da_config_set(da_config* cfg, const char* key, const char* value) {
  if (cfg == nullptr || key == nullptr || value == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_config_set: null argument");
  }
  cfg->cfg.set(key, value);
  return DA_OK;
}

const char* da_config_get(const da_config* cfg, const char* key) {
  if (cfg == nullptr || key == nullptr) return nullptr;
  if (!cfg->cfg.has(key)) return nullptr;
  auto it = cfg->cfg.entries().find(key);
  return it->second.c_str();
}

da_status da_config_load_file(da_config* cfg, const char* path) {
  if (cfg == nullptr || path == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_config_load_file: null argument");
  }
  return guarded([&] { cfg->cfg.load_file(path); });
}

da_status da_train(const da_config* cfg, const char* out_dir,
                   da_model** out_model) {
  if (cfg == nullptr || out_dir == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_train: null argument");
  }
  return guarded([&] {
    deepauction::runner::TrainArtifacts art =
        deepauction::runner::cmd_train(cfg->cfg, out_dir);
    if (out_model != nullptr) {
      auto* model = new da_model();
      model->loaded = deepauction::runner::load_model(art.checkpoint_path);
      *out_model = model;
    }
  });
}

da_status da_model_load(const char* checkpoint_path, da_model** out_model) {
  if (checkpoint_path == nullptr || out_model == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_model_load: null argument");
  }
  return guarded([&] {
    auto* model = new da_model();
    try {
      model->loaded = deepauction::runner::load_model(checkpoint_path);
    } catch (...) {
      delete model;
      throw;
    }
    *out_model = model;
  });
}

da_status da_model_save(const da_model* model, const char* path) {
  if (model == nullptr || path == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_model_save: null argument");
  }
  return guarded([&] {
    deepauction::checkpoint::save_checkpoint(model->loaded.ckpt, path);
  });
}

const char* da_model_kind(const da_model* model) {
  if (model == nullptr) return nullptr;
  return model->loaded.ckpt.kind.c_str();
}

void da_model_free(da_model* model) { delete model; }

da_status da_evaluate(const da_model* model, const da_config* cfg,
                      char** json_out) {
  if (cfg == nullptr || json_out == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_evaluate: null argument");
  }
  return guarded([&] {
    std::string json = deepauction::runner::cmd_evaluate(
        model == nullptr ? nullptr : &model->loaded, cfg->cfg);
    *json_out = dup_string(json);
  });
}

da_status da_baseline(const da_config* cfg, char** json_out) {
  if (cfg == nullptr || json_out == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_baseline: null argument");
  }
  return guarded([&] {
    *json_out = dup_string(deepauction::runner::cmd_baseline(cfg->cfg));
  });
}

da_status da_heatmap(const da_model* model, int grid, const char* out_dir) {
  if (model == nullptr || out_dir == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_heatmap: null argument");
  }
  return guarded([&] {
    deepauction::runner::cmd_heatmap(model->loaded, grid, out_dir);
  });
}

da_status da_model_export_csv(const da_model* model, const char* path) {
  if (model == nullptr || path == nullptr) {
    return set_error(DA_ERR_CONFIG, "da_model_export_csv: null argument");
  }
  return guarded([&] {
    deepauction::runner::export_model_csv(model->loaded, path);
  });
}

da_status da_lp_export(int bidders, int items, int bins, double lo, double hi,
                       const char* lp_path, char** stats_json_out) {
  return guarded([&] {
    std::string stats = deepauction::runner::cmd_lpexport(
        bidders, items, bins, lo, hi, lp_path == nullptr ? "" : lp_path);
    if (stats_json_out != nullptr) *stats_json_out = dup_string(stats);
  });
}

}  // extern "C"
