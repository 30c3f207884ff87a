#include "lowshot/checkpoint.hpp"

#include "lowshot/error.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace lowshot {
namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'L', 'S', 'H', 'O', 'T', 'C', 'K', 'P'};
constexpr std::size_t kHeaderSize = 16;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) f64(m.data()[k]);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{s[static_cast<std::size_t>(i)]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{s[static_cast<std::size_t>(i)]} << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    auto s = take(n);
    return {s.begin(), s.end()};
  }
  Matrix matrix() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (rows > remaining() || cols > remaining() || (rows != 0 && cols > remaining() / 8 / rows)) {
      throw Error(Errc::CorruptPayload, "tensor larger than the payload");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = f64();
    return m;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) throw Error(Errc::CorruptPayload, "payload ends early");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }
  void expect_end() const {
    if (remaining() != 0) throw Error(Errc::CorruptPayload, "trailing bytes in section");
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes 32-bit lengths; feed in chunks.
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t chunk = std::min<std::size_t>(b.size() - off, 1u << 30);
    crc = crc32(crc, b.data() + off, static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void add_section(Writer& out, const char (&tag)[5], Writer& payload) {
  out.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(tag), 4));
  out.u64(payload.bytes().size());
  out.u32(crc_of(payload.bytes()));
  out.raw(payload.bytes());
}

Writer encode_meta(const Model& model) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(model.provenance.size()));
  for (const auto& [k, v] : model.provenance) {
    w.str(k);
    w.str(v);
  }
  return w;
}

Writer encode_embedder(const EmbeddingNet& net) {
  const EmbedderConfig& c = net.config();
  Writer w;
  w.u64(c.input_dim);
  w.u32(static_cast<std::uint32_t>(c.hidden_dims.size()));
  for (std::size_t h : c.hidden_dims) w.u64(h);
  w.u64(c.embedding_dim);
  w.u8(static_cast<std::uint8_t>(c.activation));
  w.u8(c.normalize ? 1 : 0);
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(net.params().size()));
  for (const auto& [name, p] : net.params()) {
    w.str(name);
    w.u8(static_cast<std::uint8_t>(p.group));
    w.matrix(p.value);
  }
  return w;
}

Writer encode_head(const CosineHead& head) {
  Writer w;
  w.u64(head.dim());
  w.u64(head.class_count());
  for (ClassId id : head.class_ids()) w.i32(id);
  for (std::uint64_t c : head.imprint_counts()) w.u64(c);
  w.f64(head.log_scale());
  w.u8(static_cast<std::uint8_t>(head.params().at("weight").group));
  w.u8(static_cast<std::uint8_t>(head.params().at("log_scale").group));
  w.matrix(head.weights());
  return w;
}

Writer encode_optim(const OptimState& s) {
  Writer w;
  w.u64(s.epoch);
  w.u64(s.step);
  w.u32(static_cast<std::uint32_t>(s.slots.size()));
  for (const auto& [name, slot] : s.slots) {
    w.str(name);
    w.matrix(slot.mean_square);
    w.matrix(slot.momentum);
  }
  return w;
}

ParamGroup group_from(std::uint8_t v) {
  if (v > 1) throw Error(Errc::CorruptPayload, "bad parameter group");
  return static_cast<ParamGroup>(v);
}

std::map<std::string, std::string> decode_meta(Reader r) {
  std::map<std::string, std::string> meta;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string k = r.str();
    meta[k] = r.str();
  }
  r.expect_end();
  return meta;
}

EmbeddingNet decode_embedder(Reader r) {
  EmbedderConfig c;
  c.input_dim = r.u64();
  const std::uint32_t hidden = r.u32();
  if (hidden > r.remaining() / 8) throw Error(Errc::CorruptPayload, "bad hidden layer count");
  c.hidden_dims.clear();
  for (std::uint32_t i = 0; i < hidden; ++i) c.hidden_dims.push_back(r.u64());
  c.embedding_dim = r.u64();
  const std::uint8_t act = r.u8();
  if (act > 1) throw Error(Errc::CorruptPayload, "bad activation");
  c.activation = static_cast<Activation>(act);
  c.normalize = r.u8() != 0;
  c.seed = r.u64();
  ParamSet params;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const ParamGroup g = group_from(r.u8());
    params.add(std::move(name), r.matrix(), g);
  }
  r.expect_end();
  try {
    return EmbeddingNet(c, std::move(params));
  } catch (const Error& e) {
    throw Error(Errc::CorruptPayload, std::string("embedder: ") + e.what());
  }
}

CosineHead decode_head(Reader r) {
  const std::uint64_t dim = r.u64();
  const std::uint64_t classes = r.u64();
  if (classes > r.remaining() / 12) throw Error(Errc::CorruptPayload, "bad class count");
  std::vector<ClassId> ids;
  for (std::uint64_t i = 0; i < classes; ++i) ids.push_back(r.i32());
  std::vector<std::uint64_t> counts;
  for (std::uint64_t i = 0; i < classes; ++i) counts.push_back(r.u64());
  const double log_scale = r.f64();
  const ParamGroup wg = group_from(r.u8());
  const ParamGroup sg = group_from(r.u8());
  Matrix w = r.matrix();
  r.expect_end();
  if (static_cast<std::uint64_t>(w.rows()) != dim || static_cast<std::uint64_t>(w.cols()) != classes) {
    throw Error(Errc::CorruptPayload, "head weight shape mismatch");
  }
  try {
    CosineHead head(std::move(w), std::move(ids));
    head.params().value("log_scale")(0, 0) = log_scale;
    head.params().at("weight").group = wg;
    head.params().at("log_scale").group = sg;
    head.set_imprint_counts(std::move(counts));
    return head;
  } catch (const Error& e) {
    throw Error(Errc::CorruptPayload, std::string("head: ") + e.what());
  }
}

OptimState decode_optim(Reader r) {
  OptimState s;
  s.epoch = r.u64();
  s.step = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    RmsSlot slot;
    slot.mean_square = r.matrix();
    slot.momentum = r.matrix();
    s.slots.emplace(std::move(name), std::move(slot));
  }
  r.expect_end();
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const std::optional<OptimState>& optim) {
  Writer out;
  out.raw(kMagic);
  out.u32(kCheckpointVersion);
  out.u32(optim ? 4 : 3);
  Writer meta = encode_meta(model);
  add_section(out, "META", meta);
  Writer net = encode_embedder(model.embedder);
  add_section(out, "ENET", net);
  Writer head = encode_head(model.head);
  add_section(out, "HEAD", head);
  if (optim) {
    Writer opt = encode_optim(*optim);
    add_section(out, "OPTM", opt);
  }
  return std::move(out.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw Error(Errc::CorruptPayload, "file shorter than the header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw Error(Errc::BadMagic, "not a checkpoint file");
  Reader r(bytes.subspan(kMagic.size()));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(Errc::BadVersion, "checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t sections = r.u32();

  std::optional<std::map<std::string, std::string>> meta;
  std::optional<EmbeddingNet> net;
  std::optional<CosineHead> head;
  std::optional<OptimState> optim;
  for (std::uint32_t i = 0; i < sections; ++i) {
    const auto tag_bytes = r.take(4);
    const std::string tag(tag_bytes.begin(), tag_bytes.end());
    const std::uint64_t length = r.u64();
    const std::uint32_t crc = r.u32();
    if (length > r.remaining()) throw Error(Errc::CorruptPayload, "section " + tag + " is truncated");
    const auto payload = r.take(static_cast<std::size_t>(length));
    if (crc_of(payload) != crc) throw Error(Errc::CorruptPayload, "checksum mismatch in section " + tag);
    if (tag == "META") {
      meta = decode_meta(Reader(payload));
    } else if (tag == "ENET") {
      net = decode_embedder(Reader(payload));
    } else if (tag == "HEAD") {
      head = decode_head(Reader(payload));
    } else if (tag == "OPTM") {
      optim = decode_optim(Reader(payload));
    } else {
      throw Error(Errc::CorruptPayload, "unknown section " + tag);
    }
  }
  r.expect_end();
  if (!meta || !net || !head) throw Error(Errc::CorruptPayload, "missing required section");
  if (head->dim() != net->output_dim()) throw Error(Errc::CorruptPayload, "head and embedder dimensions differ");
  return Checkpoint{Model{std::move(*net), std::move(*head), std::move(*meta)}, std::move(optim)};
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const std::optional<OptimState>& optim) {
  const auto bytes = encode_checkpoint(model, optim);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace lowshot
