#include "eva/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "eva/config.hpp"
#include "eva/errors.hpp"

namespace eva::eval {

double MetricsReport::recall_at(double threshold) const {
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    if (std::abs(thresholds[i] - threshold) < 1e-12) return recall[i];
  throw InputError("no recall recorded at IoU " + cfg::format_double(threshold));
}

double temporal_iou(TimeInterval a, TimeInterval b) {
  if (!(a.start < a.end) || !(b.start < b.end)) throw InputError("temporal IoU of a degenerate interval");
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return inter / uni;
}

std::size_t select_proposal(std::span<const double> scores, const std::vector<model::Interval>& proposals) {
  if (proposals.empty() || scores.size() != proposals.size()) throw InputError("proposal selection needs one score per proposal");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    const auto& a = proposals[k];
    const auto& b = proposals[best];
    if (scores[k] > scores[best] ||
        (scores[k] == scores[best] && (a.start < b.start || (a.start == b.start && a.length() < b.length()))))
      best = k;
  }
  return best;
}

Prediction infer_weak(const model::EvaModel& model, const data::Sample& sample) {
  ad::NoGradGuard no_grad;
  const auto out = model::forward_weak(model, sample.clip_tensor(), sample.word_tensor());
  const auto k = select_proposal(out.proposal_scores.data(), out.proposals);
  const double per_clip = sample.duration_seconds() / static_cast<double>(sample.n_clips());
  return {sample.id(), static_cast<double>(out.proposals[k].start) * per_clip,
          static_cast<double>(out.proposals[k].end) * per_clip, out.proposal_scores[k]};
}

std::vector<Prediction> predict_split(const model::EvaModel& model, const data::Split& split) {
  std::vector<Prediction> out;
  out.reserve(split.size());
  for (const auto& s : split.samples()) out.push_back(infer_weak(model, s));
  return out;
}

std::vector<GroundTruth> ground_truth(const data::Split& split) {
  std::vector<GroundTruth> out;
  out.reserve(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& s = split[i];
    const auto m = split.label(i);
    const double per_clip = s.duration_seconds() / static_cast<double>(s.n_clips());
    out.push_back({s.id(), m.start * per_clip, m.end * per_clip});
  }
  return out;
}

MetricsReport evaluate(const std::vector<Prediction>& predictions, const std::vector<GroundTruth>& truth,
                       const std::vector<double>& thresholds) {
  std::map<std::uint32_t, const Prediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second) throw DataError("duplicate prediction for id " + std::to_string(p.id));
  std::string orphans;
  std::vector<double> ious;
  std::map<std::uint32_t, bool> matched;
  for (const auto& g : truth) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      orphans += " gt:" + std::to_string(g.id);
      continue;
    }
    matched[g.id] = true;
    ious.push_back(temporal_iou({it->second->start_time, it->second->end_time}, {g.start_time, g.end_time}));
  }
  for (const auto& p : predictions)
    if (!matched.count(p.id)) orphans += " pred:" + std::to_string(p.id);
  if (!orphans.empty()) throw DataError("predictions and ground truth do not match; orphans:" + orphans);
  if (ious.empty()) throw DataError("evaluation over an empty set");

  MetricsReport r;
  r.thresholds = thresholds;
  r.count = ious.size();
  for (double m : thresholds) {
    const auto hits = std::count_if(ious.begin(), ious.end(), [m](double iou) { return iou > m; });
    r.recall.push_back(static_cast<double>(hits) / static_cast<double>(ious.size()));
  }
  double total = 0;
  for (double v : ious) total += v;
  r.miou = total / static_cast<double>(ious.size());
  return r;
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "id,start,end,score\n";
  for (const auto& p : predictions)
    out << p.id << ',' << cfg::format_double(p.start_time) << ',' << cfg::format_double(p.end_time) << ','
        << cfg::format_double(p.score) << '\n';
}

void write_report_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "count";
  for (double m : report.thresholds) {
    const auto pct = static_cast<int>(std::lround(m * 10));
    out << ",R1_iou0" << pct;
  }
  out << ",miou\n" << report.count;
  for (double r : report.recall) out << ',' << cfg::format_double(r);
  out << ',' << cfg::format_double(report.miou) << '\n';
}

}  // namespace eva::eval
