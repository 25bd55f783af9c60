#pragma once

// Component and module-sharing ablation grids over one dataset.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eva/trainer.hpp"

namespace eva::ablation {

struct GridRow {
  std::string label;
  train::Toggles toggles;
  model::Sharing sharing;
};

/// WR, WR+FA, WR+FA+Align, WR+FA+Domain, WR+FA+Align+Domain.
std::vector<GridRow> components_grid();
/// No Sharing, Self1+Self2, Self1+Cross, Self2+Cross, Self1+Self2+Cross,
/// Cross; every row trains the full configuration.
std::vector<GridRow> sharing_grid();
/// "components" or "sharing"; throws ConfigError otherwise.
std::vector<GridRow> grid_by_name(const std::string& name);

struct Outcome {
  std::string label;
  std::uint64_t seed = 0;
  train::MetricsRecord final_epoch;  // metrics after the last epoch
  double best_miou = 0;
  double seconds = 0;
};

/// Trains every row for every seed. The row overrides the base config's
/// toggles and sharing; the seed overrides its seed.
std::vector<Outcome> run_grid(const std::vector<GridRow>& rows, const train::TrainConfig& base, const data::Dataset& data,
                              const std::vector<std::uint64_t>& seeds, bool verbose);

/// Mean over seeds of the final-epoch metrics of one row.
train::MetricsRecord mean_final(const std::vector<Outcome>& outcomes, const std::string& label);

/// `label,seed,R1_iou03,R1_iou05,R1_iou07,miou,best_miou,seconds`, one line
/// per run followed by one `mean` line per row.
void write_comparison_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows,
                          const std::vector<Outcome>& outcomes);

}  // namespace eva::ablation
