#include "eva/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "eva/errors.hpp"

namespace eva::train {

namespace {

class Out {
 public:
  void u16(std::uint16_t v) { raw(v); }
  void u32(std::uint32_t v) { raw(v); }
  void u64(std::uint64_t v) { raw(v); }
  void f64(double v) { raw(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void f64s(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  std::vector<std::uint8_t> bytes;

 private:
  template <class T>
  void raw(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class In {
 public:
  explicit In(const std::vector<std::uint8_t>& b) : bytes(b) {}
  std::size_t offset() const { return pos; }
  void need(std::size_t n) const {
    if (bytes.size() - pos < n) throw FormatError("truncated checkpoint", pos);
  }
  std::uint16_t u16() { return raw<std::uint16_t>(); }
  std::uint32_t u32() { return raw<std::uint32_t>(); }
  std::uint64_t u64() { return raw<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(raw<std::uint64_t>()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  bool done() const { return pos == bytes.size(); }

 private:
  template <class T>
  T raw() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(bytes[pos + i]) << (8 * i));
    pos += sizeof(T);
    return v;
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<ParamRecord> snapshot_parameters(const std::vector<ad::ParamPtr>& params) {
  std::vector<ParamRecord> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    const auto& t = p->tensor();
    out.push_back({p->name(), t.shape(), std::vector<double>(t.data().begin(), t.data().end()), p->adam().m, p->adam().v,
                   p->adam().step});
  }
  return out;
}

void load_parameters(model::EvaModel& model, const Checkpoint& ck, bool require_all) {
  auto& store = model.params();
  std::size_t loaded = 0;
  for (const auto& rec : ck.params) {
    if (!store.contains(rec.name)) throw StateError("checkpoint parameter '" + rec.name + "' does not exist in the model");
    auto p = store.get(rec.name);
    if (p->tensor().shape() != rec.shape)
      throw StateError("checkpoint parameter '" + rec.name + "' has shape " + shape_to_string(rec.shape) +
                       ", model expects " + shape_to_string(p->tensor().shape()));
    auto dst = p->tensor().mutable_data();
    std::copy(rec.value.begin(), rec.value.end(), dst.begin());
    p->adam().m = rec.adam_m;
    p->adam().v = rec.adam_v;
    p->adam().step = rec.adam_step;
    p->tensor().zero_grad();
    ++loaded;
  }
  if (require_all && loaded != store.size())
    throw StateError("checkpoint holds " + std::to_string(loaded) + " of " + std::to_string(store.size()) + " parameters");
}

TrainConfig config_from_checkpoint(const Checkpoint& ck) {
  return TrainConfig::from_key_values(cfg::parse_key_values(ck.config_text));
}

model::EvaModel model_from_checkpoint(const Checkpoint& ck) {
  const auto config = config_from_checkpoint(ck);
  if (config.hash() != ck.config_hash) throw StateError("checkpoint config fingerprint mismatch");
  model::EvaModel m(config.model_config(ck.clip_dim, ck.word_dim), config.seed);
  load_parameters(m, ck, false);
  return m;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
  Out o;
  for (char c : {'E', 'V', 'C', 'K'}) o.bytes.push_back(static_cast<std::uint8_t>(c));
  o.u16(kCheckpointVersion);
  o.u64(ck.config_hash);
  o.u32(ck.clip_dim);
  o.u32(ck.word_dim);
  o.str(ck.config_text);
  o.u32(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& p : ck.params) {
    o.str(p.name);
    o.u32(static_cast<std::uint32_t>(p.shape.size()));
    for (auto s : p.shape) o.u32(static_cast<std::uint32_t>(s));
    o.f64s(p.value);
    o.f64s(p.adam_m);
    o.f64s(p.adam_v);
    o.u64(p.adam_step);
  }
  o.u32(static_cast<std::uint32_t>(ck.history.size()));
  for (const auto& r : ck.history) {
    o.u32(static_cast<std::uint32_t>(r.epoch));
    for (double v : {r.l_w, r.l_f, r.l_align, r.l_domain, r.l_total, r.r1_iou03, r.r1_iou05, r.r1_iou07, r.miou}) o.f64(v);
  }
  o.f64(ck.best_miou);
  o.u64(ck.best_epoch);
  o.u64(ck.steps);
  return std::move(o.bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "EVCK", 4) != 0) throw FormatError("bad magic, expected EVCK", 0);
  In in(bytes);
  in.u32();
  const auto version = in.u16();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  Checkpoint ck;
  ck.config_hash = in.u64();
  ck.clip_dim = in.u32();
  ck.word_dim = in.u32();
  ck.config_text = in.str();
  const auto n_params = in.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    ParamRecord p;
    p.name = in.str();
    const auto rank_at = in.offset();
    const auto rank = in.u32();
    if (rank == 0 || rank > 4) throw FormatError("implausible parameter rank " + std::to_string(rank), rank_at);
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      p.shape.push_back(in.u32());
      n *= p.shape.back();
    }
    in.need(n * 24);
    p.value = in.f64s(n);
    p.adam_m = in.f64s(n);
    p.adam_v = in.f64s(n);
    p.adam_step = in.u64();
    ck.params.push_back(std::move(p));
  }
  const auto n_history = in.u32();
  in.need(std::size_t{n_history} * 76);
  for (std::uint32_t i = 0; i < n_history; ++i) {
    MetricsRecord r;
    r.epoch = in.u32();
    for (double* v : {&r.l_w, &r.l_f, &r.l_align, &r.l_domain, &r.l_total, &r.r1_iou03, &r.r1_iou05, &r.r1_iou07, &r.miou})
      *v = in.f64();
    ck.history.push_back(r);
  }
  ck.best_miou = in.f64();
  ck.best_epoch = in.u64();
  ck.steps = in.u64();
  if (!in.done()) throw FormatError("trailing bytes in checkpoint", in.offset());
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = encode_checkpoint(ck);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace eva::train
