#pragma once

// Synthetic two-domain moment-retrieval data.
//
// A fixed bank of latent concepts drives both domains. A video is a run of
// clips; clips inside the ground-truth moment show the query's concept,
// clips outside show distractor concepts. Queries are short word sequences
// holding one or two concept words among filler words. The target domain
// differs from the source by an orthogonal rotation plus bias of the clip
// features, by its vocabulary (only a fraction of concepts share noisy
// copies of the same word vector across domains), and by where moments sit
// inside the video (skewed toward the start).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eva/autodiff/tensor.hpp"
#include "eva/config.hpp"

namespace eva::data {

enum class Domain : std::uint8_t { source = 0, target = 1 };

const char* domain_name(Domain d);

struct Moment {
  std::uint32_t start = 0;  // clip index, inclusive
  std::uint32_t end = 0;    // clip index, exclusive
  bool operator==(const Moment&) const = default;
};

struct SynthConfig {
  std::size_t n_concepts = 8;
  std::size_t clip_dim = 32;
  std::size_t word_dim = 16;
  std::size_t train_samples = 800;
  std::size_t val_samples = 200;
  std::size_t source_clips_min = 16, source_clips_max = 48;
  std::size_t target_clips_min = 16, target_clips_max = 48;
  std::size_t source_words_min = 4, source_words_max = 12;
  std::size_t target_words_min = 4, target_words_max = 12;
  std::size_t moment_min = 8;   // clips
  std::size_t moment_max = 12;  // clips
  std::size_t moment_snap = 4;  // moment start/length are multiples of this
  std::size_t distractor_run = 4;
  std::size_t filler_words = 10;
  double vocab_overlap = 0.6;
  double word_noise = 0.3;   // perturbation of per-domain word vectors
  double token_noise = 0.1;  // per-occurrence word noise
  double noise_sigma = 0.15;  // per-dimension clip noise
  bool rotate_target = true;
  double target_bias = 0.5;  // norm of the target feature bias
  double target_start_skew = 3.0;  // Beta(1, skew) placement of target moments
  double clip_seconds_min = 1.0, clip_seconds_max = 3.0;
  /// Multiply clip features by sqrt(clip_dim) and word features by
  /// sqrt(word_dim) so noise-free features have per-dimension RMS 1.
  bool unit_rms = true;

  void validate() const;
  std::vector<std::pair<std::string, std::string>> to_entries() const;
  static SynthConfig from_key_values(const cfg::KeyValues& kv);
};

/// Latent structure shared by both domains, rebuilt deterministically from
/// (config, seed).
struct ConceptBank {
  std::size_t n_concepts = 0;
  std::vector<std::vector<double>> concepts;         // n_concepts × word_dim, unit norm
  std::vector<std::vector<double>> clip_prototypes;  // n_concepts × clip_dim, unit norm
  std::vector<std::vector<double>> source_words;     // per concept word vector
  std::vector<std::vector<double>> target_words;
  std::vector<std::vector<double>> fillers;          // shared filler vocabulary
  std::vector<bool> overlapping;                     // concept has a shared word
  std::vector<std::vector<double>> rotation;         // clip_dim × clip_dim, orthogonal
  std::vector<double> bias;                          // clip_dim

  static ConceptBank build(const SynthConfig& config, std::uint64_t seed);
  /// The concept's noise-free clip feature as seen in a domain.
  std::vector<double> prototype(std::size_t concept_id, Domain domain) const;
};

class Split;

/// One (video, query) record. The ground-truth moment is private: it is read
/// through Split::label(), which counts every access.
class Sample {
 public:
  Sample() = default;
  Sample(std::uint32_t id, Domain domain, std::uint32_t concept_id, std::uint32_t n_clips, std::uint32_t clip_dim,
         std::vector<float> clips, std::uint32_t n_words, std::uint32_t word_dim, std::vector<float> words,
         double duration_seconds, Moment moment);

  std::uint32_t id() const { return id_; }
  Domain domain() const { return domain_; }
  std::uint32_t concept_id() const { return concept_; }
  std::uint32_t n_clips() const { return n_clips_; }
  std::uint32_t n_words() const { return n_words_; }
  std::uint32_t clip_dim() const { return clip_dim_; }
  std::uint32_t word_dim() const { return word_dim_; }
  const std::vector<float>& clip_features() const { return clips_; }
  const std::vector<float>& word_features() const { return words_; }
  double duration_seconds() const { return duration_; }

  ad::Tensor clip_tensor() const;  // n_clips × clip_dim
  ad::Tensor word_tensor() const;  // n_words × word_dim

  /// Field-exact equality, including the moment, without touching audits.
  friend bool operator==(const Sample& a, const Sample& b);

 private:
  friend class Split;
  friend std::vector<std::uint8_t> encode_split(const Split&);

  std::uint32_t id_ = 0;
  Domain domain_ = Domain::source;
  std::uint32_t concept_ = 0;
  std::uint32_t n_clips_ = 0, clip_dim_ = 0;
  std::vector<float> clips_;
  std::uint32_t n_words_ = 0, word_dim_ = 0;
  std::vector<float> words_;
  double duration_ = 0;
  Moment moment_;
};

class Split {
 public:
  Split() = default;
  Split(Domain domain, std::uint32_t clip_dim, std::uint32_t word_dim, std::vector<Sample> samples);

  Domain domain() const { return domain_; }
  std::uint32_t clip_dim() const { return clip_dim_; }
  std::uint32_t word_dim() const { return word_dim_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_.at(i); }
  const std::vector<Sample>& samples() const { return samples_; }

  /// Ground-truth moment of sample i; every call is counted.
  Moment label(std::size_t i) const;
  std::uint64_t label_reads() const { return label_reads_; }
  void reset_label_audit() { label_reads_ = 0; }

 private:
  Domain domain_ = Domain::source;
  std::uint32_t clip_dim_ = 0, word_dim_ = 0;
  std::vector<Sample> samples_;
  mutable std::uint64_t label_reads_ = 0;
};

struct Dataset {
  Split source_train, source_val, target_train, target_val;
};

/// Deterministic in (config, seed).
Dataset generate(const SynthConfig& config, std::uint64_t seed);

// EVDS file format (little-endian):
//   header   "EVDS" | u16 version | u8 domain | u8 reserved | u32 n_samples
//            | u32 clip_dim | u32 word_dim                          (20 bytes)
//   per sample: descriptor u32 id | u32 n_clips | u32 n_words | u32 gt_start
//            | u32 gt_end | u32 concept | f64 duration_seconds        (32 bytes)
//            followed by n_clips·clip_dim then n_words·word_dim f32 values.
inline constexpr std::uint16_t kFormatVersion = 1;

void write_split(const std::filesystem::path& path, const Split& split);
/// Throws FormatError (with byte offset) on bad magic, version, or a
/// truncated/corrupted payload.
Split load_split(const std::filesystem::path& path);
Split decode_split(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_split(const Split& split);

inline const char* kSplitNames[] = {"source_train", "source_val", "target_train", "target_val"};

/// Writes the four <name>.evds files plus a <name>.manifest next to each.
void write_dataset(const std::filesystem::path& dir, const Dataset& data, const SynthConfig& config, std::uint64_t seed);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace eva::data
