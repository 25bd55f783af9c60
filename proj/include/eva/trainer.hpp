#pragma once

// Hybrid training: each iteration pairs n weakly-labelled target samples with
// n fully-labelled source samples and optimises
//   L = L_w + λ_f·L_f + λ_align·L_align + L_domain
// where the domain classifier's adversarial effect on the features comes
// from the gradient reversal layer in front of it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eva/alignment.hpp"
#include "eva/autodiff/params.hpp"
#include "eva/eval.hpp"
#include "eva/model/pipeline.hpp"
#include "eva/objectives.hpp"
#include "eva/synthdata.hpp"

namespace eva::train {

/// Component switches. Align and Domain couple the branches and therefore
/// require the auxiliary branch.
struct Toggles {
  bool fa = true;
  bool align = true;
  bool domain = true;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;  // per domain
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  obj::LossWeights weights;
  model::Sharing sharing;
  Toggles toggles;
  std::uint64_t seed = 1;

  std::size_t dim = 256;
  std::size_t conv_width = 3;
  std::vector<std::size_t> window_sizes{8, 16, 32, 64, 128};
  std::size_t stride = 8;
  std::vector<double> mmd_bandwidths;  // empty: median heuristic

  void validate() const;
  std::vector<std::pair<std::string, std::string>> to_entries() const;
  static TrainConfig from_key_values(const cfg::KeyValues& kv);
  static TrainConfig from_file(const std::filesystem::path& path);
  /// Fingerprint of every field except `epochs` (a run may be extended).
  std::uint64_t hash() const;

  model::ModelConfig model_config(std::size_t clip_dim, std::size_t word_dim) const;
  align::MmdConfig mmd_config() const;
};

/// One CSV row: `epoch,L_w,L_f,L_align,L_domain,L_total,R1_iou03,R1_iou05,R1_iou07,miou`.
/// Losses are means over the epoch's steps; metrics are on the target val split.
struct MetricsRecord {
  std::size_t epoch = 0;
  double l_w = 0, l_f = 0, l_align = 0, l_domain = 0, l_total = 0;
  double r1_iou03 = 0, r1_iou05 = 0, r1_iou07 = 0, miou = 0;
};

inline constexpr const char* kMetricsHeader = "epoch,L_w,L_f,L_align,L_domain,L_total,R1_iou03,R1_iou05,R1_iou07,miou";
std::string metrics_row(const MetricsRecord& r);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& rows);

struct PairedBatch {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

/// Shuffled index batches for one epoch. The iteration count is
/// floor(max(n_source, n_target) / batch_size); the shorter split is topped
/// up with draws with replacement. Remainders are dropped.
std::vector<PairedBatch> make_batches(const data::Split& source, const data::Split& target, std::size_t batch_size,
                                      std::uint64_t epoch_seed);

/// Seed for epoch `epoch` (1-based) of a run; depends only on (run seed, epoch).
std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch);

/// The assembled objective of one step, before backward().
struct StepGraph {
  obj::LossParts parts;
  obj::TotalLoss total;
};

/// Forward passes and loss assembly for one paired batch. The target split's
/// labels are never read. A numeric failure raises TrainingError naming the
/// loss component (L_w, L_f, L_align, L_domain) and step_index.
StepGraph build_step(const model::EvaModel& model, const PairedBatch& batch, const data::Split& source,
                     const data::Split& target, const TrainConfig& config, std::uint64_t step_seed,
                     std::size_t step_index = 0);

/// Parameters that receive gradients under the config's toggles.
std::vector<ad::ParamPtr> active_parameters(const model::EvaModel& model, const Toggles& toggles);

struct StepLosses {
  double l_w = 0, l_f = 0, l_align = 0, l_domain = 0, l_total = 0;
};

/// build_step + backward + one Adam update. Throws TrainingError naming the
/// component on a non-finite loss.
StepLosses train_step(model::EvaModel& model, const PairedBatch& batch, const data::Split& source,
                      const data::Split& target, const TrainConfig& config, std::uint64_t step_seed,
                      std::size_t step_index);

struct Checkpoint;

class Trainer {
 public:
  Trainer(TrainConfig config, const data::Dataset& data);

  /// Trains one more epoch, evaluates on the target val split and appends
  /// the record to the history.
  const MetricsRecord& train_epoch();
  std::size_t epochs_done() const { return history_.size(); }
  const std::vector<MetricsRecord>& history() const { return history_; }
  double best_miou() const { return best_miou_; }
  std::size_t best_epoch() const { return best_epoch_; }

  model::EvaModel& model() { return model_; }
  const model::EvaModel& model() const { return model_; }
  const TrainConfig& config() const { return config_; }

  Checkpoint checkpoint() const;
  /// Restores parameters, optimizer state and history. The checkpoint's
  /// config fingerprint must match.
  void restore(const Checkpoint& ck);

 private:
  TrainConfig config_;
  const data::Dataset& data_;
  model::EvaModel model_;
  std::vector<MetricsRecord> history_;
  double best_miou_ = -1;
  std::size_t best_epoch_ = 0;
  std::size_t steps_ = 0;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  /// Stop after this many total epochs (for interrupted runs); 0 = config.epochs.
  std::size_t stop_after = 0;
  bool verbose = false;
};

struct RunResult {
  std::vector<MetricsRecord> history;
  std::filesystem::path metrics_csv;
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  std::filesystem::path weak_model;
  std::filesystem::path predictions_csv;
};

/// Full training run writing metrics.csv, last.ckpt, best.ckpt (by target
/// val mIoU), weak_model.ckpt (weak-branch parameters only) and
/// predictions.csv (weak branch on target val) into out_dir.
RunResult run(const TrainConfig& config, const data::Dataset& data, const RunOptions& options);

/// Domain probe: a logistic regression fitted on frozen joint features
/// (max-pooled video and query after cross-attention) of the train splits,
/// source through the auxiliary branch and target through the weak branch,
/// and scored on the val splits. Returns held-out accuracy.
double domain_probe_accuracy(const model::EvaModel& model, const data::Dataset& data, std::uint64_t seed);

}  // namespace eva::train
