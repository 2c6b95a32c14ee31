/*
 * deepauction — learned revenue-maximizing auctions.
 *
 * C API over the C++ core. All objects are opaque handles created and
 * destroyed through these functions; every call returns a da_status and
 * leaves a human-readable message for the calling thread retrievable via
 * da_last_error(). Strings returned through char** out-parameters are
 * heap-allocated and must be released with da_string_free().
 */
#ifndef DEEPAUCTION_H_
#define DEEPAUCTION_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum da_status {
  DA_OK = 0,
  DA_ERR_CONFIG = 2,  /* invalid configuration or arguments */
  DA_ERR_NUMERIC = 3, /* non-finite values during training/evaluation */
  DA_ERR_IO = 4       /* file system or serialization failure */
} da_status;

/* Flat key/value run configuration (documented keys in the README). */
typedef struct da_config da_config;

/* A trained or loaded model (regretnet, rochetnet or myersonnet). */
typedef struct da_model da_model;

const char* da_version(void);

/* Message from the most recent failing call on this thread. */
const char* da_last_error(void);

void da_string_free(char* s);

da_config* da_config_new(void);
void da_config_free(da_config* cfg);
da_status da_config_set(da_config* cfg, const char* key, const char* value);
/* Returns NULL when the key is unset. The pointer stays valid until the
 * next mutation of the config. */
const char* da_config_get(const da_config* cfg, const char* key);
da_status da_config_load_file(da_config* cfg, const char* path);

/* Trains the configured model and writes checkpoint.ckpt (+ .json
 * sidecar), history.json (regretnet) and metrics.json into out_dir.
 * When out_model is non-NULL the trained model handle is returned. */
da_status da_train(const da_config* cfg, const char* out_dir,
                   da_model** out_model);

da_status da_model_load(const char* checkpoint_path, da_model** out_model);
da_status da_model_save(const da_model* model, const char* path);
/* "regretnet" | "rochetnet" | "myersonnet" */
const char* da_model_kind(const da_model* model);
void da_model_free(da_model* model);

/* Evaluates a model, or — when model is NULL — the reference mechanism
 * named by the config ("reference" = posted-price | spa). The metrics
 * report JSON is returned through json_out. */
da_status da_evaluate(const da_model* model, const da_config* cfg,
                      char** json_out);

/* Monte-Carlo baseline revenues for the configured setting. */
da_status da_baseline(const da_config* cfg, char** json_out);

/* Allocation-probability heatmaps (item1.csv, item2.csv) over a
 * grid x grid value lattice; needs a single-bidder two-item model. */
da_status da_heatmap(const da_model* model, int grid, const char* out_dir);

/* Menu (rochetnet) or virtual-transform (myersonnet) CSV dump. */
da_status da_model_export_csv(const da_model* model, const char* path);

/* Discretized-LP export. Writes the LP text file when lp_path is
 * non-NULL; always returns the statistics JSON (variable and constraint
 * counts) when stats_json_out is non-NULL. */
da_status da_lp_export(int bidders, int items, int bins, double lo, double hi,
                       const char* lp_path, char** stats_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DEEPAUCTION_H_ */
