#pragma once

// EVCK checkpoint files (little-endian):
//   "EVCK" | u16 version | u64 config hash | u32 clip_dim | u32 word_dim
//   | str config text | u32 n_params { str name | u32 rank | u32 dims...
//   | f64 values | f64 adam m | f64 adam v | u64 adam step }
//   | u32 n_history { u32 epoch | 9 × f64 } | f64 best_miou | u64 best_epoch
//   | u64 steps
// where str is u32 length + UTF-8 bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eva/trainer.hpp"

namespace eva::train {

struct ParamRecord {
  std::string name;
  ad::Shape shape;
  std::vector<double> value;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::uint64_t adam_step = 0;
};

struct Checkpoint {
  std::string config_text;  // key=value lines of the TrainConfig
  std::uint64_t config_hash = 0;
  std::uint32_t clip_dim = 0;
  std::uint32_t word_dim = 0;
  std::vector<ParamRecord> params;
  std::vector<MetricsRecord> history;
  double best_miou = -1;
  std::uint64_t best_epoch = 0;
  std::uint64_t steps = 0;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<ParamRecord> snapshot_parameters(const std::vector<ad::ParamPtr>& params);
/// Copies values and optimizer state into the model. With require_all, every
/// model parameter must be present in the checkpoint.
void load_parameters(model::EvaModel& model, const Checkpoint& ck, bool require_all);
/// Rebuilds the model described by the checkpoint and loads its parameters.
model::EvaModel model_from_checkpoint(const Checkpoint& ck);
TrainConfig config_from_checkpoint(const Checkpoint& ck);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eva::train
