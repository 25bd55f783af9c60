#include "eva/model/pipeline.hpp"

#include <set>
#include <sstream>

#include "eva/errors.hpp"

namespace eva::model {

Sharing Sharing::parse(const std::string& text) {
  Sharing s{false, false, false};
  if (text.empty() || text == "none") return s;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "self1") s.self1 = true;
    else if (item == "self2") s.self2 = true;
    else if (item == "cross") s.cross = true;
    else throw ConfigError("unknown shared module '" + item + "' (expected self1, self2, cross)");
  }
  return s;
}

std::string Sharing::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(self1, "self1");
  add(self2, "self2");
  add(cross, "cross");
  return out.empty() ? "none" : out;
}

namespace {

struct SharedUnits {
  AttentionUnit self1_video, self1_query, cross_video, cross_query, self2_video, self2_query;
};

Branch build_branch(ad::ParamStore& store, const std::string& name, const ModelConfig& cfg, const SharedUnits& shared) {
  const auto d = cfg.dim;
  const auto& sh = cfg.sharing;
  Branch b;
  b.proj_video = make_affine(store, name + ".proj_video", cfg.clip_dim, d);
  b.proj_query = make_affine(store, name + ".proj_query", cfg.word_dim, d);
  b.self1_video = sh.self1 ? shared.self1_video : make_attention_unit(store, name + ".self1_video", d);
  b.self1_query = sh.self1 ? shared.self1_query : make_attention_unit(store, name + ".self1_query", d);
  b.cross_video = sh.cross ? shared.cross_video : make_attention_unit(store, name + ".cross_video", d);
  b.cross_query = sh.cross ? shared.cross_query : make_attention_unit(store, name + ".cross_query", d);
  b.self2_video = sh.self2 ? shared.self2_video : make_attention_unit(store, name + ".self2_video", d);
  b.self2_query = sh.self2 ? shared.self2_query : make_attention_unit(store, name + ".self2_query", d);
  return b;
}

void collect(std::vector<ad::ParamPtr>& out, const Affine& a) {
  out.push_back(a.weight);
  out.push_back(a.bias);
}

void collect(std::vector<ad::ParamPtr>& out, const AttentionUnit& u) {
  out.push_back(u.w_q);
  out.push_back(u.w_k);
  out.push_back(u.w_v);
  collect(out, u.fc);
}

void collect(std::vector<ad::ParamPtr>& out, const Branch& b) {
  collect(out, b.proj_video);
  collect(out, b.proj_query);
  for (const auto* u : {&b.self1_video, &b.self1_query, &b.cross_video, &b.cross_query, &b.self2_video, &b.self2_query})
    collect(out, *u);
}

void collect(std::vector<ad::ParamPtr>& out, const FusionHead& h) {
  collect(out, h.fc_pair);
  collect(out, h.fc_score);
}

std::vector<ad::ParamPtr> unique(std::vector<ad::ParamPtr> in) {
  std::vector<ad::ParamPtr> out;
  std::set<const ad::Parameter*> seen;
  for (auto& p : in)
    if (seen.insert(p.get()).second) out.push_back(std::move(p));
  return out;
}

ad::Tensor pooled_row(const ad::Tensor& seq) { return ad::reshape(ad::mean_axis(seq, 0), {1, seq.cols()}); }

}  // namespace

EvaModel::EvaModel(const ModelConfig& config, std::uint64_t init_seed) : config_(config), store_(init_seed) {
  if (config.dim == 0 || config.clip_dim == 0 || config.word_dim == 0) throw ConfigError("model dimensions must be positive");
  const auto d = config.dim;
  SharedUnits shared;
  const auto& sh = config.sharing;
  if (sh.self1) {
    shared.self1_video = make_attention_unit(store_, "shared.self1_video", d);
    shared.self1_query = make_attention_unit(store_, "shared.self1_query", d);
  }
  if (sh.cross) {
    shared.cross_video = make_attention_unit(store_, "shared.cross_video", d);
    shared.cross_query = make_attention_unit(store_, "shared.cross_query", d);
  }
  if (sh.self2) {
    shared.self2_video = make_attention_unit(store_, "shared.self2_video", d);
    shared.self2_query = make_attention_unit(store_, "shared.self2_query", d);
  }
  weak_ = build_branch(store_, "weak", config, shared);
  full_ = build_branch(store_, "full", config, shared);
  fusion_ = make_fusion_head(store_, "fusion", d);
  boundary_ = make_boundary_head(store_, "full.boundary", d, config.conv_width);
  domain_ = align::make_domain_classifier(store_, "domain", d, config.grl_lambda);
}

std::vector<ad::ParamPtr> EvaModel::weak_parameters() const {
  std::vector<ad::ParamPtr> out;
  collect(out, weak_);
  collect(out, fusion_);
  return unique(std::move(out));
}

std::vector<ad::ParamPtr> EvaModel::full_parameters() const {
  std::vector<ad::ParamPtr> out;
  collect(out, full_);
  collect(out, fusion_);
  collect(out, boundary_.query_pool);
  out.insert(out.end(), {boundary_.conv_start, boundary_.conv_start_bias, boundary_.conv_end, boundary_.conv_end_bias});
  return unique(std::move(out));
}

std::vector<ad::ParamPtr> EvaModel::domain_parameters() const {
  std::vector<ad::ParamPtr> out;
  collect(out, domain_.fc2);
  collect(out, domain_.fc1);
  return out;
}

ad::Tensor encode_video(const Branch& branch, const ad::Tensor& raw_clips) {
  const auto v = branch.proj_video(raw_clips);
  return attend(branch.self1_video, v, v);
}

ad::Tensor encode_query(const Branch& branch, const ad::Tensor& raw_words) {
  const auto q = branch.proj_query(raw_words);
  return attend(branch.self1_query, q, q);
}

std::pair<ad::Tensor, ad::Tensor> self_attend_stage(const Branch& branch, const ad::Tensor& video,
                                                    const ad::Tensor& query, int stage) {
  if (stage != 1 && stage != 2) throw ConfigError("self-attention stage must be 1 or 2");
  const auto& uv = stage == 1 ? branch.self1_video : branch.self2_video;
  const auto& uq = stage == 1 ? branch.self1_query : branch.self2_query;
  return {attend(uv, video, video), attend(uq, query, query)};
}

WeakOutput weak_pair(const EvaModel& model, const ad::Tensor& video, const ad::Tensor& query) {
  const auto& cfg = model.config();
  const auto& br = model.weak();
  WeakOutput out;
  out.proposals = proposal_intervals(video.rows(), cfg.window_sizes, cfg.stride);
  const auto pooled = pool_proposals(video, out.proposals);
  out.taps.video_before = pooled;
  out.taps.query_before = query;
  out.taps.video_after = attend(br.cross_video, pooled, query);
  out.taps.query_after = attend(br.cross_query, query, pooled);
  const auto [v2, q2] = self_attend_stage(br, out.taps.video_after, out.taps.query_after, 2);
  out.proposal_scores = score_proposals(model.fusion(), v2, q2);
  out.video_score = video_level_score(out.proposal_scores);
  return out;
}

FullOutput full_pair(const EvaModel& model, const ad::Tensor& video, const ad::Tensor& query, bool with_boundary) {
  const auto& br = model.full();
  FullOutput out;
  out.taps.video_before = video;
  out.taps.query_before = query;
  out.taps.video_after = attend(br.cross_video, video, query);
  out.taps.query_after = attend(br.cross_query, query, video);
  const auto [v2, q2] = self_attend_stage(br, out.taps.video_after, out.taps.query_after, 2);
  if (with_boundary) out.boundary = boundary_probs(model.boundary(), v2, q2);
  out.video_score = score_proposals(model.fusion(), pooled_row(v2), q2);
  return out;
}

WeakOutput forward_weak(const EvaModel& model, const ad::Tensor& raw_clips, const ad::Tensor& raw_words) {
  return weak_pair(model, encode_video(model.weak(), raw_clips), encode_query(model.weak(), raw_words));
}

FullOutput forward_full(const EvaModel& model, const ad::Tensor& raw_clips, const ad::Tensor& raw_words) {
  return full_pair(model, encode_video(model.full(), raw_clips), encode_query(model.full(), raw_words));
}

std::pair<ad::Tensor, ad::Tensor> joint_features(const align::Taps& taps) {
  return {ad::maxpool_axis(taps.video_after, 0).values, ad::maxpool_axis(taps.query_after, 0).values};
}

}  // namespace eva::model
