#pragma once

// Weak-branch inference and the top-1 recall / mIoU evaluation protocol.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eva/model/pipeline.hpp"
#include "eva/synthdata.hpp"

namespace eva::eval {

struct TimeInterval {
  double start = 0;
  double end = 0;
};

struct Prediction {
  std::uint32_t id = 0;
  double start_time = 0;
  double end_time = 0;
  double score = 0;
};

struct GroundTruth {
  std::uint32_t id = 0;
  double start_time = 0;
  double end_time = 0;
};

inline const std::vector<double> kDefaultThresholds{0.1, 0.3, 0.5, 0.7};

struct MetricsReport {
  std::vector<double> thresholds;
  std::vector<double> recall;  // R@1 at each threshold
  double miou = 0;
  std::size_t count = 0;

  /// Recall at a threshold present in `thresholds`.
  double recall_at(double threshold) const;
};

/// |a ∩ b| / |a ∪ b|. Throws InputError unless start < end for both.
double temporal_iou(TimeInterval a, TimeInterval b);

/// Index of the best-scoring proposal; ties go to the earliest start, then
/// the shortest interval. Throws InputError when there are no proposals.
std::size_t select_proposal(std::span<const double> scores, const std::vector<model::Interval>& proposals);

/// Top-1 moment from the weak branch, converted to seconds via duration/n_c.
Prediction infer_weak(const model::EvaModel& model, const data::Sample& sample);

std::vector<Prediction> predict_split(const model::EvaModel& model, const data::Split& split);

/// Reads every label of the split (counted by the split's audit).
std::vector<GroundTruth> ground_truth(const data::Split& split);

/// R@1(m) = fraction of records whose IoU is strictly greater than m; mIoU is
/// the mean IoU. Predictions are matched to ground truth by id; a missing or
/// extra id throws DataError naming the orphans.
MetricsReport evaluate(const std::vector<Prediction>& predictions, const std::vector<GroundTruth>& truth,
                       const std::vector<double>& thresholds = kDefaultThresholds);

void write_predictions_csv(const std::filesystem::path& path, const std::vector<Prediction>& predictions);
void write_report_csv(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace eva::eval
