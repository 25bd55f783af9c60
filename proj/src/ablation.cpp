#include "eva/ablation.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include "eva/errors.hpp"

namespace eva::ablation {

namespace {

model::Sharing sharing_of(bool self1, bool self2, bool cross) {
  model::Sharing s;
  s.self1 = self1;
  s.self2 = self2;
  s.cross = cross;
  return s;
}

}  // namespace

std::vector<GridRow> components_grid() {
  const auto cross = sharing_of(false, false, true);
  return {
      {"WR", {false, false, false}, cross},
      {"WR+FA", {true, false, false}, cross},
      {"WR+FA+Align", {true, true, false}, cross},
      {"WR+FA+Domain", {true, false, true}, cross},
      {"WR+FA+Align+Domain", {true, true, true}, cross},
  };
}

std::vector<GridRow> sharing_grid() {
  const train::Toggles all{true, true, true};
  return {
      {"No Sharing", all, sharing_of(false, false, false)},
      {"Self1+Self2", all, sharing_of(true, true, false)},
      {"Self1+Cross", all, sharing_of(true, false, true)},
      {"Self2+Cross", all, sharing_of(false, true, true)},
      {"Self1+Self2+Cross", all, sharing_of(true, true, true)},
      {"Cross", all, sharing_of(false, false, true)},
  };
}

std::vector<GridRow> grid_by_name(const std::string& name) {
  if (name == "components") return components_grid();
  if (name == "sharing") return sharing_grid();
  throw ConfigError("unknown ablation grid '" + name + "' (expected components or sharing)");
}

std::vector<Outcome> run_grid(const std::vector<GridRow>& rows, const train::TrainConfig& base, const data::Dataset& data,
                              const std::vector<std::uint64_t>& seeds, bool verbose) {
  std::vector<Outcome> out;
  for (const auto& row : rows) {
    for (auto seed : seeds) {
      auto config = base;
      config.toggles = row.toggles;
      config.sharing = row.sharing;
      config.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      train::Trainer trainer(config, data);
      for (std::size_t e = 0; e < config.epochs; ++e) trainer.train_epoch();
      Outcome o;
      o.label = row.label;
      o.seed = seed;
      o.final_epoch = trainer.history().back();
      o.best_miou = trainer.best_miou();
      o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (verbose)
        std::cerr << row.label << " seed=" << seed << "  R1@0.5=" << o.final_epoch.r1_iou05
                  << "  mIoU=" << o.final_epoch.miou << "  (" << o.seconds << " s)\n";
      out.push_back(o);
    }
  }
  return out;
}

train::MetricsRecord mean_final(const std::vector<Outcome>& outcomes, const std::string& label) {
  train::MetricsRecord m;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (o.label != label) continue;
    const auto& r = o.final_epoch;
    m.epoch = r.epoch;
    m.l_w += r.l_w;
    m.l_f += r.l_f;
    m.l_align += r.l_align;
    m.l_domain += r.l_domain;
    m.l_total += r.l_total;
    m.r1_iou03 += r.r1_iou03;
    m.r1_iou05 += r.r1_iou05;
    m.r1_iou07 += r.r1_iou07;
    m.miou += r.miou;
    ++n;
  }
  if (n == 0) throw StateError("no outcomes for row '" + label + "'");
  const double k = 1.0 / static_cast<double>(n);
  for (double* v : {&m.l_w, &m.l_f, &m.l_align, &m.l_domain, &m.l_total, &m.r1_iou03, &m.r1_iou05, &m.r1_iou07, &m.miou})
    *v *= k;
  return m;
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows,
                          const std::vector<Outcome>& outcomes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  using cfg::format_double;
  out << "label,seed,R1_iou03,R1_iou05,R1_iou07,miou,best_miou,seconds\n";
  for (const auto& o : outcomes) {
    const auto& r = o.final_epoch;
    out << o.label << ',' << o.seed << ',' << format_double(r.r1_iou03) << ',' << format_double(r.r1_iou05) << ','
        << format_double(r.r1_iou07) << ',' << format_double(r.miou) << ',' << format_double(o.best_miou) << ','
        << format_double(o.seconds) << '\n';
  }
  for (const auto& row : rows) {
    const auto m = mean_final(outcomes, row.label);
    out << row.label << ",mean," << format_double(m.r1_iou03) << ',' << format_double(m.r1_iou05) << ','
        << format_double(m.r1_iou07) << ',' << format_double(m.miou) << ",,\n";
  }
  if (!out) throw DataError("short write to " + path.string());
}

}  // namespace eva::ablation
