#include "eva/synthdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "eva/errors.hpp"
#include "eva/seeds.hpp"

namespace eva::data {

const char* domain_name(Domain d) { return d == Domain::source ? "source" : "target"; }

// ---------------------------------------------------------------------------
// Config

void SynthConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("synthetic data: " + m); };
  if (n_concepts < 2) fail("need at least two concepts");
  if (clip_dim == 0 || word_dim == 0) fail("feature dimensions must be positive");
  if (train_samples == 0 || val_samples == 0) fail("split sizes must be positive");
  if (moment_min == 0 || moment_min > moment_max) fail("moment length range is empty");
  for (auto [lo, hi] : {std::pair{source_clips_min, source_clips_max}, std::pair{target_clips_min, target_clips_max}}) {
    if (lo > hi) fail("clip count range is empty");
    if (lo < moment_max) fail("videos must hold at least moment_max clips");
    if (lo < 2) fail("videos need at least two clips");
  }
  for (auto [lo, hi] : {std::pair{source_words_min, source_words_max}, std::pair{target_words_min, target_words_max}})
    if (lo == 0 || lo > hi) fail("word count range is empty");
  if (moment_snap == 0) fail("moment_snap must be at least 1");
  if (distractor_run == 0) fail("distractor_run must be at least 1");
  if (filler_words == 0) fail("need at least one filler word");
  if (!(vocab_overlap >= 0 && vocab_overlap <= 1)) fail("vocab_overlap must lie in [0,1]");
  if (!(noise_sigma >= 0 && word_noise >= 0 && token_noise >= 0 && target_bias >= 0)) fail("noise levels must be non-negative");
  if (!(target_start_skew > 0)) fail("target_start_skew must be positive");
  if (!(clip_seconds_min > 0 && clip_seconds_min <= clip_seconds_max)) fail("clip duration range is invalid");
}

std::vector<std::pair<std::string, std::string>> SynthConfig::to_entries() const {
  using cfg::format_double;
  auto s = [](std::size_t v) { return std::to_string(v); };
  return {
      {"n_concepts", s(n_concepts)},
      {"clip_dim", s(clip_dim)},
      {"word_dim", s(word_dim)},
      {"train_samples", s(train_samples)},
      {"val_samples", s(val_samples)},
      {"source_clips_min", s(source_clips_min)},
      {"source_clips_max", s(source_clips_max)},
      {"target_clips_min", s(target_clips_min)},
      {"target_clips_max", s(target_clips_max)},
      {"source_words_min", s(source_words_min)},
      {"source_words_max", s(source_words_max)},
      {"target_words_min", s(target_words_min)},
      {"target_words_max", s(target_words_max)},
      {"moment_min", s(moment_min)},
      {"moment_max", s(moment_max)},
      {"moment_snap", s(moment_snap)},
      {"distractor_run", s(distractor_run)},
      {"filler_words", s(filler_words)},
      {"vocab_overlap", format_double(vocab_overlap)},
      {"word_noise", format_double(word_noise)},
      {"token_noise", format_double(token_noise)},
      {"noise_sigma", format_double(noise_sigma)},
      {"rotate_target", rotate_target ? "true" : "false"},
      {"target_bias", format_double(target_bias)},
      {"target_start_skew", format_double(target_start_skew)},
      {"clip_seconds_min", format_double(clip_seconds_min)},
      {"clip_seconds_max", format_double(clip_seconds_max)},
      {"unit_rms", unit_rms ? "true" : "false"},
  };
}

SynthConfig SynthConfig::from_key_values(const cfg::KeyValues& kv) {
  SynthConfig c;
  cfg::Reader r(kv);
  r.read("n_concepts", c.n_concepts);
  r.read("clip_dim", c.clip_dim);
  r.read("word_dim", c.word_dim);
  r.read("train_samples", c.train_samples);
  r.read("val_samples", c.val_samples);
  r.read("source_clips_min", c.source_clips_min);
  r.read("source_clips_max", c.source_clips_max);
  r.read("target_clips_min", c.target_clips_min);
  r.read("target_clips_max", c.target_clips_max);
  r.read("source_words_min", c.source_words_min);
  r.read("source_words_max", c.source_words_max);
  r.read("target_words_min", c.target_words_min);
  r.read("target_words_max", c.target_words_max);
  r.read("moment_min", c.moment_min);
  r.read("moment_max", c.moment_max);
  r.read("moment_snap", c.moment_snap);
  r.read("distractor_run", c.distractor_run);
  r.read("filler_words", c.filler_words);
  r.read("vocab_overlap", c.vocab_overlap);
  r.read("word_noise", c.word_noise);
  r.read("token_noise", c.token_noise);
  r.read("noise_sigma", c.noise_sigma);
  r.read("rotate_target", c.rotate_target);
  r.read("target_bias", c.target_bias);
  r.read("target_start_skew", c.target_start_skew);
  r.read("clip_seconds_min", c.clip_seconds_min);
  r.read("clip_seconds_max", c.clip_seconds_max);
  r.read("unit_rms", c.unit_rms);
  r.reject_unknown();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Concept bank

namespace {

using Vec = std::vector<double>;

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return derive_seed(seed, stream); }

Vec gaussian(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
  std::normal_distribution<double> nd(0.0, sigma);
  Vec v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

double norm(const Vec& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

Vec normalized(Vec v) {
  const double n = norm(v);
  for (auto& x : v) x /= n;
  return v;
}

Vec unit(std::mt19937_64& rng, std::size_t n) { return normalized(gaussian(rng, n)); }

Vec noisy_copy(std::mt19937_64& rng, const Vec& base, double noise) {
  Vec v = gaussian(rng, base.size(), noise / std::sqrt(static_cast<double>(base.size())));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += base[i];
  return normalized(std::move(v));
}

// Gram-Schmidt on a Gaussian matrix; rows form an orthonormal basis.
std::vector<Vec> random_orthogonal(std::mt19937_64& rng, std::size_t n) {
  std::vector<Vec> rows;
  while (rows.size() < n) {
    Vec v = gaussian(rng, n);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& r : rows) {
        const double dot = std::inner_product(v.begin(), v.end(), r.begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * r[i];
      }
    if (norm(v) > 1e-6) rows.push_back(normalized(std::move(v)));
  }
  return rows;
}

}  // namespace

ConceptBank ConceptBank::build(const SynthConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(derive(seed, 0));
  ConceptBank b;
  b.n_concepts = c.n_concepts;
  for (std::size_t k = 0; k < c.n_concepts; ++k) b.concepts.push_back(unit(rng, c.word_dim));

  // Fixed "visual" embedding of the concept space into clip space.
  std::vector<Vec> embed;
  for (std::size_t i = 0; i < c.clip_dim; ++i) embed.push_back(gaussian(rng, c.word_dim));
  for (const auto& concept_vec : b.concepts) {
    Vec p(c.clip_dim);
    for (std::size_t i = 0; i < c.clip_dim; ++i)
      p[i] = std::inner_product(embed[i].begin(), embed[i].end(), concept_vec.begin(), 0.0);
    b.clip_prototypes.push_back(normalized(std::move(p)));
  }

  const auto n_shared = static_cast<std::size_t>(std::lround(c.vocab_overlap * static_cast<double>(c.n_concepts)));
  std::vector<std::size_t> order(c.n_concepts);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  b.overlapping.assign(c.n_concepts, false);
  for (std::size_t i = 0; i < n_shared; ++i) b.overlapping[order[i]] = true;

  for (std::size_t k = 0; k < c.n_concepts; ++k) {
    if (b.overlapping[k]) {
      b.source_words.push_back(noisy_copy(rng, b.concepts[k], c.word_noise));
      b.target_words.push_back(noisy_copy(rng, b.concepts[k], c.word_noise));
    } else {
      b.source_words.push_back(unit(rng, c.word_dim));
      b.target_words.push_back(unit(rng, c.word_dim));
    }
  }
  for (std::size_t k = 0; k < c.filler_words; ++k) b.fillers.push_back(unit(rng, c.word_dim));

  if (c.rotate_target) {
    b.rotation = random_orthogonal(rng, c.clip_dim);
  } else {
    b.rotation.assign(c.clip_dim, Vec(c.clip_dim, 0.0));
    for (std::size_t i = 0; i < c.clip_dim; ++i) b.rotation[i][i] = 1.0;
  }
  b.bias = unit(rng, c.clip_dim);
  for (auto& x : b.bias) x *= c.target_bias;
  return b;
}

std::vector<double> ConceptBank::prototype(std::size_t concept_id, Domain domain) const {
  const Vec& p = clip_prototypes.at(concept_id);
  if (domain == Domain::source) return p;
  Vec out(bias);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::inner_product(rotation[i].begin(), rotation[i].end(), p.begin(), 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Samples and splits

Sample::Sample(std::uint32_t id, Domain domain, std::uint32_t concept_id, std::uint32_t n_clips, std::uint32_t clip_dim,
               std::vector<float> clips, std::uint32_t n_words, std::uint32_t word_dim, std::vector<float> words,
               double duration_seconds, Moment moment)
    : id_(id),
      domain_(domain),
      concept_(concept_id),
      n_clips_(n_clips),
      clip_dim_(clip_dim),
      clips_(std::move(clips)),
      n_words_(n_words),
      word_dim_(word_dim),
      words_(std::move(words)),
      duration_(duration_seconds),
      moment_(moment) {
  if (clips_.size() != std::size_t{n_clips_} * clip_dim_ || words_.size() != std::size_t{n_words_} * word_dim_)
    throw DimensionError("sample " + std::to_string(id) + ": feature buffers do not match their counts");
  if (!(moment_.start < moment_.end && moment_.end <= n_clips_))
    throw LabelError("sample " + std::to_string(id) + ": moment outside the video");
}

namespace {

ad::Tensor to_tensor(const std::vector<float>& values, std::size_t rows, std::size_t cols) {
  return ad::Tensor::from({rows, cols}, std::vector<double>(values.begin(), values.end()));
}

}  // namespace

ad::Tensor Sample::clip_tensor() const { return to_tensor(clips_, n_clips_, clip_dim_); }
ad::Tensor Sample::word_tensor() const { return to_tensor(words_, n_words_, word_dim_); }

bool operator==(const Sample& a, const Sample& b) {
  return a.id_ == b.id_ && a.domain_ == b.domain_ && a.concept_ == b.concept_ && a.n_clips_ == b.n_clips_ &&
         a.clip_dim_ == b.clip_dim_ && a.clips_ == b.clips_ && a.n_words_ == b.n_words_ && a.word_dim_ == b.word_dim_ &&
         a.words_ == b.words_ && a.duration_ == b.duration_ && a.moment_ == b.moment_;
}

Split::Split(Domain domain, std::uint32_t clip_dim, std::uint32_t word_dim, std::vector<Sample> samples)
    : domain_(domain), clip_dim_(clip_dim), word_dim_(word_dim), samples_(std::move(samples)) {
  for (const auto& s : samples_)
    if (s.domain() != domain_ || s.clip_dim() != clip_dim_ || s.word_dim() != word_dim_)
      throw DataError("sample " + std::to_string(s.id()) + " does not match its split's domain or dimensions");
}

Moment Split::label(std::size_t i) const {
  ++label_reads_;
  return samples_.at(i).moment_;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct DomainShape {
  std::size_t clips_min, clips_max, words_min, words_max;
};

Sample make_sample(const SynthConfig& c, const ConceptBank& bank, Domain domain, std::uint32_t id, std::mt19937_64& rng) {
  const DomainShape shape = domain == Domain::source
                                ? DomainShape{c.source_clips_min, c.source_clips_max, c.source_words_min, c.source_words_max}
                                : DomainShape{c.target_clips_min, c.target_clips_max, c.target_words_min, c.target_words_max};
  auto uniform_int = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const std::size_t n_clips = uniform_int(shape.clips_min, shape.clips_max);
  const std::size_t n_words = uniform_int(shape.words_min, shape.words_max);
  const std::size_t concept_id = uniform_int(0, c.n_concepts - 1);

  // Moment length and start, snapped down to the grid but never below one snap unit.
  const std::size_t snap = c.moment_snap;
  std::size_t length = uniform_int(c.moment_min, c.moment_max);
  length = std::max(snap, length / snap * snap);
  length = std::min(length, n_clips);
  const std::size_t slack = n_clips - length;
  double frac = u01(rng);
  if (domain == Domain::target) frac = 1.0 - std::pow(1.0 - frac, 1.0 / c.target_start_skew);  // Beta(1, skew)
  std::size_t start = std::min(slack, static_cast<std::size_t>(frac * static_cast<double>(slack + 1)));
  start = start / snap * snap;
  const Moment moment{static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(start + length)};

  // Clip concepts: the query concept inside the moment, distractor runs elsewhere.
  std::vector<std::size_t> clip_concept(n_clips);
  for (std::size_t t = 0; t < n_clips;) {
    if (t >= moment.start && t < moment.end) {
      clip_concept[t++] = concept_id;
      continue;
    }
    std::size_t other = uniform_int(0, c.n_concepts - 2);
    if (other >= concept_id) ++other;
    for (std::size_t r = 0; r < c.distractor_run && t < n_clips && !(t >= moment.start && t < moment.end); ++r)
      clip_concept[t++] = other;
  }

  const double clip_scale = c.unit_rms ? std::sqrt(static_cast<double>(c.clip_dim)) : 1.0;
  const double word_scale = c.unit_rms ? std::sqrt(static_cast<double>(c.word_dim)) : 1.0;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<float> clips(n_clips * c.clip_dim);
  for (std::size_t t = 0; t < n_clips; ++t) {
    const Vec& proto = bank.clip_prototypes[clip_concept[t]];
    Vec x(c.clip_dim);
    for (std::size_t i = 0; i < c.clip_dim; ++i) x[i] = proto[i] + c.noise_sigma * noise(rng);
    for (std::size_t i = 0; i < c.clip_dim; ++i) {
      double v = x[i];
      if (domain == Domain::target)
        v = std::inner_product(bank.rotation[i].begin(), bank.rotation[i].end(), x.begin(), 0.0) + bank.bias[i];
      clips[t * c.clip_dim + i] = static_cast<float>(clip_scale * v);
    }
  }

  // Query: one concept word (two for longer queries) among fillers.
  const auto& dictionary = domain == Domain::source ? bank.source_words : bank.target_words;
  std::vector<std::size_t> word_slots(n_words);
  std::iota(word_slots.begin(), word_slots.end(), 0);
  std::shuffle(word_slots.begin(), word_slots.end(), rng);
  const std::size_t n_concept_words = n_words >= 8 ? 2 : 1;
  std::vector<float> words(n_words * c.word_dim);
  for (std::size_t w = 0; w < n_words; ++w) {
    const bool is_concept = std::find(word_slots.begin(), word_slots.begin() + n_concept_words, w) !=
                            word_slots.begin() + n_concept_words;
    const Vec& base = is_concept ? dictionary[concept_id] : bank.fillers[uniform_int(0, bank.fillers.size() - 1)];
    const double sigma = c.token_noise / std::sqrt(static_cast<double>(c.word_dim));
    for (std::size_t i = 0; i < c.word_dim; ++i)
      words[w * c.word_dim + i] = static_cast<float>(word_scale * (base[i] + sigma * noise(rng)));
  }

  std::uniform_real_distribution<double> clip_seconds(c.clip_seconds_min, c.clip_seconds_max);
  const double duration = static_cast<double>(n_clips) * clip_seconds(rng);
  return Sample(id, domain, static_cast<std::uint32_t>(concept_id), static_cast<std::uint32_t>(n_clips),
                static_cast<std::uint32_t>(c.clip_dim), std::move(clips), static_cast<std::uint32_t>(n_words),
                static_cast<std::uint32_t>(c.word_dim), std::move(words), duration, moment);
}

Split make_split(const SynthConfig& c, const ConceptBank& bank, Domain domain, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) samples.push_back(make_sample(c, bank, domain, static_cast<std::uint32_t>(i), rng));
  return Split(domain, static_cast<std::uint32_t>(c.clip_dim), static_cast<std::uint32_t>(c.word_dim), std::move(samples));
}

}  // namespace

Dataset generate(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const auto bank = ConceptBank::build(config, seed);
  Dataset d;
  d.source_train = make_split(config, bank, Domain::source, config.train_samples, derive(seed, 1));
  d.source_val = make_split(config, bank, Domain::source, config.val_samples, derive(seed, 2));
  d.target_train = make_split(config, bank, Domain::target, config.train_samples, derive(seed, 3));
  d.target_val = make_split(config, bank, Domain::target, config.val_samples, derive(seed, 4));
  return d;
}

// ---------------------------------------------------------------------------
// EVDS encoding

namespace {

constexpr std::size_t kHeaderBytes = 20;
constexpr std::size_t kDescriptorBytes = 32;

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { raw(v); }
  void u32(std::uint32_t v) { raw(v); }
  void f32(float v) { raw(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { raw(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> out;

 private:
  template <class T>
  void raw(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes(b) {}
  std::size_t offset() const { return pos; }
  std::size_t remaining() const { return bytes.size() - pos; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos);
  }
  std::uint8_t u8() { need(1, "field"); return bytes[pos++]; }
  std::uint16_t u16() { return raw<std::uint16_t>(); }
  std::uint32_t u32() { return raw<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(raw<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(raw<std::uint64_t>()); }

 private:
  template <class T>
  T raw() {
    need(sizeof(T), "field");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes[pos + i]) << (8 * i));
    pos += sizeof(T);
    return v;
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_split(const Split& split) {
  Writer w;
  for (char ch : {'E', 'V', 'D', 'S'}) w.u8(static_cast<std::uint8_t>(ch));
  w.u16(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(split.domain()));
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(split.size()));
  w.u32(split.clip_dim());
  w.u32(split.word_dim());
  for (const auto& s : split.samples()) {
    w.u32(s.id_);
    w.u32(s.n_clips_);
    w.u32(s.n_words_);
    w.u32(s.moment_.start);
    w.u32(s.moment_.end);
    w.u32(s.concept_);
    w.f64(s.duration_);
    for (float v : s.clips_) w.f32(v);
    for (float v : s.words_) w.f32(v);
  }
  return std::move(w.out);
}

Split decode_split(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.need(kHeaderBytes, "header");
  if (std::memcmp(bytes.data(), "EVDS", 4) != 0) throw FormatError("bad magic, expected EVDS", 0);
  for (int i = 0; i < 4; ++i) r.u8();
  const auto version_at = r.offset();
  const auto version = r.u16();
  if (version != kFormatVersion)
    throw FormatError("unsupported version " + std::to_string(version), version_at);
  const auto domain_at = r.offset();
  const auto domain_byte = r.u8();
  if (domain_byte > 1) throw FormatError("unknown domain tag " + std::to_string(domain_byte), domain_at);
  const auto domain = static_cast<Domain>(domain_byte);
  r.u8();
  const auto count_at = r.offset();
  const auto n_samples = r.u32();
  const auto clip_dim = r.u32();
  const auto word_dim = r.u32();
  if (clip_dim == 0 || word_dim == 0) throw FormatError("zero feature dimension", count_at + 4);
  if (std::size_t{n_samples} * kDescriptorBytes > r.remaining())
    throw FormatError("sample count " + std::to_string(n_samples) + " exceeds payload", count_at);

  std::vector<Sample> samples;
  samples.reserve(n_samples);
  for (std::uint32_t k = 0; k < n_samples; ++k) {
    const auto at = r.offset();
    r.need(kDescriptorBytes, "sample descriptor");
    const auto id = r.u32();
    const auto n_clips = r.u32();
    const auto n_words = r.u32();
    const Moment moment{r.u32(), r.u32()};
    const auto concept_id = r.u32();
    const auto duration = r.f64();
    if (n_clips == 0 || n_words == 0) throw FormatError("sample with empty clip or word sequence", at + 4);
    const std::size_t payload = (std::size_t{n_clips} * clip_dim + std::size_t{n_words} * word_dim) * 4;
    if (payload > r.remaining())
      throw FormatError("sample " + std::to_string(id) + " payload of " + std::to_string(payload) + " bytes exceeds file",
                        at + 4);
    if (!(moment.start < moment.end && moment.end <= n_clips))
      throw FormatError("sample " + std::to_string(id) + " moment outside the video", at + 12);
    std::vector<float> clips(std::size_t{n_clips} * clip_dim);
    for (auto& v : clips) v = r.f32();
    std::vector<float> words(std::size_t{n_words} * word_dim);
    for (auto& v : words) v = r.f32();
    samples.emplace_back(id, domain, concept_id, n_clips, clip_dim, std::move(clips), n_words, word_dim, std::move(words),
                         duration, moment);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last sample", r.offset());
  return Split(domain, clip_dim, word_dim, std::move(samples));
}

void write_split(const std::filesystem::path& path, const Split& split) {
  const auto bytes = encode_split(split);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

Split load_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_split(bytes);
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data, const SynthConfig& config, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const Split* splits[] = {&data.source_train, &data.source_val, &data.target_train, &data.target_val};
  for (std::size_t i = 0; i < 4; ++i) {
    write_split(dir / (std::string(kSplitNames[i]) + ".evds"), *splits[i]);
    auto entries = config.to_entries();
    entries.insert(entries.begin(), {{"split", kSplitNames[i]},
                                     {"domain", domain_name(splits[i]->domain())},
                                     {"samples", std::to_string(splits[i]->size())},
                                     {"seed", std::to_string(seed)},
                                     {"format_version", std::to_string(kFormatVersion)}});
    std::ofstream out(dir / (std::string(kSplitNames[i]) + ".manifest"), std::ios::binary | std::ios::trunc);
    out << cfg::format_key_values(entries);
    if (!out) throw DataError("cannot write manifest in " + dir.string());
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  Split* splits[] = {&d.source_train, &d.source_val, &d.target_train, &d.target_val};
  for (std::size_t i = 0; i < 4; ++i) *splits[i] = load_split(dir / (std::string(kSplitNames[i]) + ".evds"));
  if (d.source_train.domain() != Domain::source || d.target_train.domain() != Domain::target)
    throw DataError("dataset directory " + dir.string() + " has splits with the wrong domain tag");
  return d;
}

}  // namespace eva::data
