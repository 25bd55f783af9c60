#include "eva/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "eva/checkpoint.hpp"
#include "eva/errors.hpp"
#include "eva/seeds.hpp"

namespace eva::train {

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2 (negatives are drawn within a batch)");
  if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("lr must be a positive finite number");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("eps must be positive");
  weights.validate();
  if ((toggles.align || toggles.domain) && !toggles.fa)
    throw ConfigError("align and domain need the fully-supervised branch (fa=true)");
  if (dim == 0) throw ConfigError("dim must be positive");
  if (conv_width == 0 || conv_width % 2 == 0) throw ConfigError("conv_width must be odd");
  if (window_sizes.empty() || std::find(window_sizes.begin(), window_sizes.end(), 0u) != window_sizes.end())
    throw ConfigError("window_sizes must be a non-empty list of positive sizes");
  if (stride == 0) throw ConfigError("stride must be positive");
  for (double h : mmd_bandwidths)
    if (!(h > 0)) throw ConfigError("mmd_bandwidths must be positive");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_entries() const {
  using cfg::format_double;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"lr", format_double(lr)},
      {"beta1", format_double(beta1)},
      {"beta2", format_double(beta2)},
      {"eps", format_double(eps)},
      {"lambda_r", format_double(weights.lambda_r)},
      {"lambda_f", format_double(weights.lambda_f)},
      {"lambda_align", format_double(weights.lambda_align)},
      {"lambda_domain", format_double(weights.lambda_domain)},
      {"lambda_vid", format_double(weights.lambda_vid)},
      {"sharing", sharing.to_string()},
      {"fa", b(toggles.fa)},
      {"align", b(toggles.align)},
      {"domain", b(toggles.domain)},
      {"seed", std::to_string(seed)},
      {"dim", std::to_string(dim)},
      {"conv_width", std::to_string(conv_width)},
      {"window_sizes", cfg::join(window_sizes)},
      {"stride", std::to_string(stride)},
      {"mmd_bandwidths", cfg::join(mmd_bandwidths)},
  };
}

TrainConfig TrainConfig::from_key_values(const cfg::KeyValues& kv) {
  TrainConfig c;
  cfg::Reader r(kv);
  std::string sharing_text = c.sharing.to_string();
  r.read("epochs", c.epochs);
  r.read("batch_size", c.batch_size);
  r.read("lr", c.lr);
  r.read("beta1", c.beta1);
  r.read("beta2", c.beta2);
  r.read("eps", c.eps);
  r.read("lambda_r", c.weights.lambda_r);
  r.read("lambda_f", c.weights.lambda_f);
  r.read("lambda_align", c.weights.lambda_align);
  r.read("lambda_domain", c.weights.lambda_domain);
  r.read("lambda_vid", c.weights.lambda_vid);
  r.read("sharing", sharing_text);
  r.read("fa", c.toggles.fa);
  r.read("align", c.toggles.align);
  r.read("domain", c.toggles.domain);
  r.read("seed", c.seed);
  r.read("dim", c.dim);
  r.read("conv_width", c.conv_width);
  r.read("window_sizes", c.window_sizes);
  r.read("stride", c.stride);
  r.read("mmd_bandwidths", c.mmd_bandwidths);
  r.reject_unknown();
  c.sharing = model::Sharing::parse(sharing_text);
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  return from_key_values(cfg::read_key_value_file(path));
}

std::uint64_t TrainConfig::hash() const {
  auto entries = to_entries();
  std::erase_if(entries, [](const auto& e) { return e.first == "epochs"; });
  return cfg::fnv1a(cfg::format_key_values(entries));
}

model::ModelConfig TrainConfig::model_config(std::size_t clip_dim, std::size_t word_dim) const {
  model::ModelConfig m;
  m.clip_dim = clip_dim;
  m.word_dim = word_dim;
  m.dim = dim;
  m.conv_width = conv_width;
  m.window_sizes = window_sizes;
  m.stride = stride;
  m.sharing = sharing;
  m.grl_lambda = weights.lambda_domain;
  return m;
}

align::MmdConfig TrainConfig::mmd_config() const {
  align::MmdConfig m;
  m.bandwidths = mmd_bandwidths;
  m.lambda_vid = weights.lambda_vid;
  return m;
}

// ---------------------------------------------------------------------------
// Metrics CSV

std::string metrics_row(const MetricsRecord& r) {
  std::string out = std::to_string(r.epoch);
  for (double v : {r.l_w, r.l_f, r.l_align, r.l_domain, r.l_total, r.r1_iou03, r.r1_iou05, r.r1_iou07, r.miou}) {
    out += ',';
    out += cfg::format_double(v);
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write metrics file " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << metrics_row(r) << '\n';
  if (!out) throw DataError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Batching

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) { return derive_seed(run_seed, 1000 + epoch); }

std::vector<PairedBatch> make_batches(const data::Split& source, const data::Split& target, std::size_t batch_size,
                                      std::uint64_t seed) {
  if (source.empty() || target.empty()) throw DataError("both the source and the target split must be non-empty");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::size_t iterations = std::max(source.size(), target.size()) / batch_size;
  const std::size_t needed = iterations * batch_size;

  std::mt19937_64 rng(seed);
  auto order = [&](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (idx.size() < needed) idx.push_back(pick(rng));
    return idx;
  };
  const auto src = order(source.size());
  const auto tgt = order(target.size());

  std::vector<PairedBatch> out(iterations);
  for (std::size_t k = 0; k < iterations; ++k) {
    const auto lo = static_cast<std::ptrdiff_t>(k * batch_size);
    const auto hi = lo + static_cast<std::ptrdiff_t>(batch_size);
    out[k].source.assign(src.begin() + lo, src.begin() + hi);
    out[k].target.assign(tgt.begin() + lo, tgt.begin() + hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// One step

namespace {

ad::Tensor mean_of(const std::vector<ad::Tensor>& terms) {
  ad::Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ad::add(total, terms[i]);
  return ad::scale(total, 1.0 / static_cast<double>(terms.size()));
}

ad::Tensor stack_rows(const std::vector<ad::Tensor>& vectors) {
  std::vector<ad::Tensor> rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) rows.push_back(ad::reshape(v, {1, v.size()}));
  return ad::concat(rows, 0);
}

struct Encoded {
  std::vector<ad::Tensor> videos;
  std::vector<ad::Tensor> queries;
};

Encoded encode_batch(const model::Branch& branch, const data::Split& split, const std::vector<std::size_t>& idx) {
  Encoded e;
  e.videos.reserve(idx.size());
  e.queries.reserve(idx.size());
  for (auto i : idx) {
    const auto& s = split[i];
    e.videos.push_back(model::encode_video(branch, s.clip_tensor()));
    e.queries.push_back(model::encode_query(branch, s.word_tensor()));
  }
  return e;
}

// Runs one loss component, turning numeric failures (including a non-finite
// result) into a TrainingError that names the component and the step.
template <class F>
ad::Tensor component(const char* name, std::size_t step_index, F&& compute) {
  ad::Tensor value;
  try {
    value = compute();
  } catch (const NumericError& e) {
    throw TrainingError(name, step_index, e.what());
  }
  if (!std::isfinite(value.item())) throw TrainingError(name, step_index, "non-finite loss");
  return value;
}

}  // namespace

StepGraph build_step(const model::EvaModel& model, const PairedBatch& batch, const data::Split& source,
                     const data::Split& target, const TrainConfig& config, std::uint64_t step_seed,
                     std::size_t step_index) {
  const std::size_t n = batch.target.size();
  if (n < 2 || (config.toggles.fa && batch.source.size() < 2))
    throw SamplingError("a paired batch needs at least two samples per domain");

  StepGraph g;

  // Weak branch on the target batch: video-query pairing only.
  std::vector<align::Taps> weak_taps;
  g.parts.weak = component("L_w", step_index, [&] {
    const auto tneg = obj::sample_negatives(n, derive_seed(step_seed, 0));
    const auto tenc = encode_batch(model.weak(), target, batch.target);
    std::vector<obj::ScoreTriplet> triplets;
    for (std::size_t i = 0; i < n; ++i) {
      auto pos = model::weak_pair(model, tenc.videos[i], tenc.queries[i]);
      auto vneg = model::weak_pair(model, tenc.videos[tneg.video_negative[i]], tenc.queries[i]).video_score;
      auto qneg = model::weak_pair(model, tenc.videos[i], tenc.queries[tneg.query_negative[i]]).video_score;
      triplets.push_back({pos.video_score, vneg, qneg});
      weak_taps.push_back(std::move(pos.taps));
    }
    return obj::weak_loss_batch(triplets);
  });

  if (config.toggles.fa) {
    std::vector<align::Taps> full_taps;
    g.parts.full = component("L_f", step_index, [&] {
      const std::size_t m = batch.source.size();
      const auto sneg = obj::sample_negatives(m, derive_seed(step_seed, 1));
      const auto senc = encode_batch(model.full(), source, batch.source);
      std::vector<ad::Tensor> terms;
      for (std::size_t i = 0; i < m; ++i) {
        auto pos = model::full_pair(model, senc.videos[i], senc.queries[i], true);
        auto vneg = model::full_pair(model, senc.videos[sneg.video_negative[i]], senc.queries[i], false).video_score;
        auto qneg = model::full_pair(model, senc.videos[i], senc.queries[sneg.query_negative[i]], false).video_score;
        const auto moment = source.label(batch.source[i]);
        terms.push_back(obj::full_loss(pos.boundary.start, pos.boundary.end, moment.start, moment.end - 1,
                                       {pos.video_score, vneg, qneg}, config.weights));
        full_taps.push_back(std::move(pos.taps));
      }
      return mean_of(terms);
    });

    if (config.toggles.align || config.toggles.domain) {
      std::vector<ad::Tensor> jv_f, jq_f, jv_w, jq_w;
      for (const auto& t : full_taps) {
        auto [v, q] = model::joint_features(t);
        jv_f.push_back(v);
        jq_f.push_back(q);
      }
      for (const auto& t : weak_taps) {
        auto [v, q] = model::joint_features(t);
        jv_w.push_back(v);
        jq_w.push_back(q);
      }
      const auto mmd = config.mmd_config();
      if (config.toggles.align) {
        g.parts.alignment = component("L_align", step_index, [&] {
          return ad::add(align::alignment_loss(full_taps, weak_taps, mmd),
                         align::joint_mmd(stack_rows(jv_f), stack_rows(jv_w), stack_rows(jq_f), stack_rows(jq_w), mmd));
        });
      }
      if (config.toggles.domain) {
        g.parts.domain = component("L_domain", step_index, [&] {
          std::vector<ad::Tensor> pf, pw;
          for (std::size_t i = 0; i < jv_f.size(); ++i)
            pf.push_back(align::domain_forward(model.domain(), jv_f[i], jq_f[i]));
          for (std::size_t i = 0; i < jv_w.size(); ++i)
            pw.push_back(align::domain_forward(model.domain(), jv_w[i], jq_w[i]));
          return align::domain_loss(pf, pw);
        });
      }
    }
  }

  try {
    g.total = obj::total_loss(g.parts, config.weights);
  } catch (const NumericError& e) {
    throw TrainingError("L_total", step_index, e.what());
  }
  return g;
}

std::vector<ad::ParamPtr> active_parameters(const model::EvaModel& model, const Toggles& toggles) {
  auto out = model.weak_parameters();
  if (toggles.fa) {
    const auto full = model.full_parameters();
    out.insert(out.end(), full.begin(), full.end());
  }
  if (toggles.domain) {
    const auto dom = model.domain_parameters();
    out.insert(out.end(), dom.begin(), dom.end());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a->name() < b->name(); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

StepLosses train_step(model::EvaModel& model, const PairedBatch& batch, const data::Split& source,
                      const data::Split& target, const TrainConfig& config, std::uint64_t step_seed,
                      std::size_t step_index) {
  const auto g = build_step(model, batch, source, target, config, step_seed, step_index);
  g.total.value.backward();
  const auto params = active_parameters(model, config.toggles);
  for (const auto& p : params) {
    for (double v : p->tensor().grad())
      if (!std::isfinite(v)) throw TrainingError("gradient of " + p->name(), step_index, "non-finite gradient");
  }
  ad::adam_step(params, {config.lr, config.beta1, config.beta2, config.eps});
  // Parameters outside the active set may have picked up gradients through
  // shared graph paths; they are not updated and must not carry them over.
  model.params().zero_grad();
  return {g.total.weak, g.total.full, g.total.alignment, g.total.domain, g.total.total};
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(TrainConfig config, const data::Dataset& data)
    : config_(std::move(config)),
      data_(data),
      model_(config_.model_config(data.target_train.clip_dim(), data.target_train.word_dim()), config_.seed) {
  config_.validate();
  if (data.source_train.clip_dim() != data.target_train.clip_dim() ||
      data.source_train.word_dim() != data.target_train.word_dim())
    throw DataError("source and target feature widths differ");
}

const MetricsRecord& Trainer::train_epoch() {
  const std::size_t epoch = history_.size() + 1;
  const auto eseed = epoch_seed(config_.seed, epoch);
  const auto batches = make_batches(data_.source_train, data_.target_train, config_.batch_size, eseed);
  if (batches.empty()) throw DataError("splits are smaller than one batch");

  MetricsRecord rec;
  rec.epoch = epoch;
  for (std::size_t k = 0; k < batches.size(); ++k) {
    const auto s = train_step(model_, batches[k], data_.source_train, data_.target_train, config_,
                              derive_seed(eseed, k + 1), steps_);
    ++steps_;
    rec.l_w += s.l_w;
    rec.l_f += s.l_f;
    rec.l_align += s.l_align;
    rec.l_domain += s.l_domain;
    rec.l_total += s.l_total;
  }
  const double inv = 1.0 / static_cast<double>(batches.size());
  rec.l_w *= inv;
  rec.l_f *= inv;
  rec.l_align *= inv;
  rec.l_domain *= inv;
  rec.l_total *= inv;

  const auto report = eval::evaluate(eval::predict_split(model_, data_.target_val), eval::ground_truth(data_.target_val));
  rec.r1_iou03 = report.recall_at(0.3);
  rec.r1_iou05 = report.recall_at(0.5);
  rec.r1_iou07 = report.recall_at(0.7);
  rec.miou = report.miou;
  if (rec.miou > best_miou_) {
    best_miou_ = rec.miou;
    best_epoch_ = epoch;
  }
  history_.push_back(rec);
  return history_.back();
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.config_text = cfg::format_key_values(config_.to_entries());
  ck.config_hash = config_.hash();
  ck.clip_dim = static_cast<std::uint32_t>(model_.config().clip_dim);
  ck.word_dim = static_cast<std::uint32_t>(model_.config().word_dim);
  ck.params = snapshot_parameters(model_.params().all());
  ck.history = history_;
  ck.best_miou = best_miou_;
  ck.best_epoch = best_epoch_;
  ck.steps = steps_;
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  if (ck.config_hash != config_.hash())
    throw StateError("checkpoint was written by a different configuration (fingerprint mismatch)");
  if (ck.clip_dim != model_.config().clip_dim || ck.word_dim != model_.config().word_dim)
    throw StateError("checkpoint feature widths do not match the dataset");
  load_parameters(model_, ck, true);
  history_ = ck.history;
  best_miou_ = ck.best_miou;
  best_epoch_ = static_cast<std::size_t>(ck.best_epoch);
  steps_ = static_cast<std::size_t>(ck.steps);
}

// ---------------------------------------------------------------------------
// Run

RunResult run(const TrainConfig& config, const data::Dataset& data, const RunOptions& options) {
  config.validate();
  std::filesystem::create_directories(options.out_dir);
  RunResult result;
  result.metrics_csv = options.out_dir / "metrics.csv";
  result.last_checkpoint = options.out_dir / "last.ckpt";
  result.best_checkpoint = options.out_dir / "best.ckpt";
  result.weak_model = options.out_dir / "weak_model.ckpt";
  result.predictions_csv = options.out_dir / "predictions.csv";

  Trainer trainer(config, data);
  if (options.resume_from) trainer.restore(load_checkpoint(*options.resume_from));

  const std::size_t goal = options.stop_after ? std::min(options.stop_after, config.epochs) : config.epochs;
  while (trainer.epochs_done() < goal) {
    const auto& rec = trainer.train_epoch();
    if (options.verbose)
      std::cerr << "epoch " << rec.epoch << "  L=" << rec.l_total << "  R1@0.5=" << rec.r1_iou05 << "  mIoU=" << rec.miou
                << '\n';
    write_metrics_csv(result.metrics_csv, trainer.history());
    const auto ck = trainer.checkpoint();
    save_checkpoint(result.last_checkpoint, ck);
    if (trainer.best_epoch() == rec.epoch) save_checkpoint(result.best_checkpoint, ck);
  }
  if (!std::filesystem::exists(result.metrics_csv)) write_metrics_csv(result.metrics_csv, trainer.history());
  if (!std::filesystem::exists(result.best_checkpoint)) save_checkpoint(result.best_checkpoint, trainer.checkpoint());
  result.history = trainer.history();

  if (trainer.epochs_done() >= config.epochs) {
    // Deployment artifacts: the weak branch of the selected checkpoint.
    auto best = load_checkpoint(result.best_checkpoint);
    auto deployed = model_from_checkpoint(best);
    const auto weak = deployed.weak_parameters();
    std::erase_if(best.params, [&](const ParamRecord& p) {
      return std::none_of(weak.begin(), weak.end(), [&](const auto& w) { return w->name() == p.name; });
    });
    save_checkpoint(result.weak_model, best);
    eval::write_predictions_csv(result.predictions_csv, eval::predict_split(deployed, data.target_val));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Domain probe

namespace {

struct ProbeSet {
  std::vector<std::vector<double>> x;
  std::vector<int> y;  // 1 = target
};

void add_features(ProbeSet& set, const model::EvaModel& model, const data::Split& split, bool target) {
  for (const auto& s : split.samples()) {
    const auto taps = target ? model::forward_weak(model, s.clip_tensor(), s.word_tensor()).taps
                             : model::forward_full(model, s.clip_tensor(), s.word_tensor()).taps;
    const auto [v, q] = model::joint_features(taps);
    std::vector<double> f(v.data().begin(), v.data().end());
    f.insert(f.end(), q.data().begin(), q.data().end());
    set.x.push_back(std::move(f));
    set.y.push_back(target ? 1 : 0);
  }
}

}  // namespace

double domain_probe_accuracy(const model::EvaModel& model, const data::Dataset& data, std::uint64_t seed) {
  ad::NoGradGuard no_grad;
  ProbeSet train, val;
  add_features(train, model, data.source_train, false);
  add_features(train, model, data.target_train, true);
  add_features(val, model, data.source_val, false);
  add_features(val, model, data.target_val, true);
  if (train.x.empty() || val.x.empty()) throw DataError("probe needs non-empty train and val splits");

  // Standardize with training statistics.
  const std::size_t d = train.x.front().size();
  std::vector<double> mu(d, 0.0), sd(d, 0.0);
  for (const auto& f : train.x)
    for (std::size_t j = 0; j < d; ++j) mu[j] += f[j];
  for (auto& m : mu) m /= static_cast<double>(train.x.size());
  for (const auto& f : train.x)
    for (std::size_t j = 0; j < d; ++j) sd[j] += (f[j] - mu[j]) * (f[j] - mu[j]);
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(train.x.size())) + 1e-8;
  auto standardize = [&](ProbeSet& set) {
    for (auto& f : set.x)
      for (std::size_t j = 0; j < d; ++j) f[j] = (f[j] - mu[j]) / sd[j];
  };
  standardize(train);
  standardize(val);

  // Logistic regression, full-batch Adam with a small L2 penalty.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.01);
  std::vector<double> w(d + 1);
  for (auto& x : w) x = init(rng);
  std::vector<double> m(d + 1, 0.0), v(d + 1, 0.0), g(d + 1);
  constexpr double lr = 0.05, b1 = 0.9, b2 = 0.999, l2 = 1e-4;
  constexpr int iterations = 600;
  const double n = static_cast<double>(train.x.size());
  for (int it = 1; it <= iterations; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < train.x.size(); ++i) {
      double z = w[d];
      for (std::size_t j = 0; j < d; ++j) z += w[j] * train.x[i][j];
      const double err = 1.0 / (1.0 + std::exp(-z)) - train.y[i];
      for (std::size_t j = 0; j < d; ++j) g[j] += err * train.x[i][j];
      g[d] += err;
    }
    for (std::size_t j = 0; j <= d; ++j) {
      g[j] = g[j] / n + (j < d ? l2 * w[j] : 0.0);
      m[j] = b1 * m[j] + (1 - b1) * g[j];
      v[j] = b2 * v[j] + (1 - b2) * g[j] * g[j];
      const double mh = m[j] / (1 - std::pow(b1, it));
      const double vh = v[j] / (1 - std::pow(b2, it));
      w[j] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < val.x.size(); ++i) {
    double z = w[d];
    for (std::size_t j = 0; j < d; ++j) z += w[j] * val.x[i][j];
    correct += static_cast<std::size_t>((z > 0 ? 1 : 0) == val.y[i]);
  }
  return static_cast<double>(correct) / static_cast<double>(val.x.size());
}

}  // namespace eva::train
