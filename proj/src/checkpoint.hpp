#pragma once

#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "paramstore.hpp"
#include "training.hpp"

namespace deepauction::checkpoint {

using diffcore::ParamStore;
using diffcore::Tensor;

// Binary parameter container, little-endian throughout:
//   magic "DAPS", u32 version,
//   u32 kind length + bytes ("regretnet" | "rochetnet" | "myersonnet"),
//   u64 metadata length + UTF-8 JSON (architecture, setting, seed, scale),
//   u64 tensor count, then per tensor (sorted by name):
//     u32 name length + bytes, u32 rank, u64 dims..., f64 data.
// A JSON sidecar with the same metadata is written next to it.
struct Checkpoint {
  std::string kind;
  nlohmann::json meta;
  ParamStore params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Training history as JSON: a list of per-epoch records with keys
// epoch, rev, rgt_mean, rgt_per_bidder, lambda, rho, wall_time_s.
std::string history_json(const training::History& history);
void save_history(const training::History& history, const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace deepauction::checkpoint
