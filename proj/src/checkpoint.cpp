#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "moodshift/nnclassifier.hpp"

namespace moodshift::nn {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'H', 'F', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxString = 1u << 20;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void raw(std::string_view s) { buf_.append(s); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    if (n > kMaxString) fail("string length " + std::to_string(n) + " too large");
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(const std::string& msg) const {
    throw CheckpointError("checkpoint " + what_ + ": " + msg + " (offset " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("truncated");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

void section(Writer& out, std::string_view tag, const Writer& body) {
  out.raw(tag);
  out.u64(body.bytes().size());
  out.raw(body.bytes());
}

std::string_view open_section(Reader& in, std::string_view tag) {
  const auto got = in.take(4);
  if (got != tag) in.fail("expected section " + std::string(tag) + ", found '" + std::string(got) + "'");
  const auto len = in.u64();
  return in.take(len);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  ckpt.config.validate();
  ckpt.params.check_layout(ckpt.config);
  if (ckpt.vocab.size() != ckpt.config.vocab_size)
    throw CheckpointError("checkpoint: vocabulary size " + std::to_string(ckpt.vocab.size()) +
                          " does not match config vocab_size " + std::to_string(ckpt.config.vocab_size));

  Writer w;
  w.raw(std::string_view(kMagic, sizeof kMagic));
  w.u32(kVersion);

  Writer conf;
  const auto& c = ckpt.config;
  for (auto v : {c.vocab_size, c.max_len, c.d_model, c.n_heads, c.n_layers, c.d_ff, c.n_classes}) conf.u64(v);
  conf.f64(c.dropout_rate);
  section(w, "CONF", conf);

  Writer vocb;
  vocb.u64(ckpt.vocab.size());
  for (std::size_t i = 0; i < ckpt.vocab.size(); ++i) {
    vocb.str(ckpt.vocab.term(static_cast<int>(i)));
    vocb.u64(ckpt.vocab.doc_freq(static_cast<int>(i)));
  }
  section(w, "VOCB", vocb);

  Writer tens;
  tens.u64(ckpt.params.tensors().size());
  for (const auto& t : ckpt.params.tensors()) {
    tens.str(t.name);
    tens.u64(t.shape.size());
    for (auto s : t.shape) tens.u64(s);
    for (double v : t.values) tens.f64(v);
  }
  section(w, "TENS", tens);

  Writer prov;
  prov.u64(ckpt.provenance.size());
  for (const auto& s : ckpt.provenance) {
    prov.str(s.corpus);
    prov.f64(s.config.learning_rate);
    prov.u64(s.config.batch_size);
    prov.u64(static_cast<std::uint64_t>(s.config.epochs));
    prov.f64(s.config.weight_decay);
    prov.u64(s.config.seed);
    prov.u8(s.config.optimizer == Optimizer::Adam ? 1 : 0);
    prov.f64(s.final_loss);
  }
  section(w, "PROV", prov);

  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CheckpointError("checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  Reader r(data, "header");
  if (r.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) r.fail("bad magic");
  const auto version = r.u32();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));

  Checkpoint ck;
  {
    Reader s(open_section(r, "CONF"), "CONF");
    auto& c = ck.config;
    c.vocab_size = s.u64();
    c.max_len = s.u64();
    c.d_model = s.u64();
    c.n_heads = s.u64();
    c.n_layers = s.u64();
    c.d_ff = s.u64();
    c.n_classes = s.u64();
    c.dropout_rate = s.f64();
    if (!s.done()) s.fail("trailing bytes");
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(std::string("checkpoint CONF: ") + e.what());
    }
  }
  {
    Reader s(open_section(r, "VOCB"), "VOCB");
    const auto n = s.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      auto term = s.str();
      const auto f = s.u64();
      if (ck.vocab.add(term, f) != static_cast<int>(i)) s.fail("duplicate term '" + term + "'");
    }
    if (!s.done()) s.fail("trailing bytes");
    if (ck.vocab.size() != ck.config.vocab_size) s.fail("size does not match config vocab_size");
  }
  {
    Reader s(open_section(r, "TENS"), "TENS");
    const auto n = s.u64();
    auto& ts = ck.params.tensors();
    for (std::uint64_t i = 0; i < n; ++i) {
      Tensor t;
      t.name = s.str();
      const auto rank = s.u64();
      if (rank > 4) s.fail("tensor '" + t.name + "' has rank " + std::to_string(rank));
      std::uint64_t numel = 1;
      for (std::uint64_t k = 0; k < rank; ++k) {
        t.shape.push_back(s.u64());
        numel *= t.shape.back();
      }
      if (numel > (data.size() / 8)) s.fail("tensor '" + t.name + "' larger than the file");
      t.values.resize(numel);
      for (auto& v : t.values) v = s.f64();
      ts.push_back(std::move(t));
    }
    if (!s.done()) s.fail("trailing bytes");
    try {
      ck.params.check_layout(ck.config);
    } catch (const ShapeError& e) {
      throw CheckpointError(std::string("checkpoint TENS: ") + e.what());
    }
  }
  {
    Reader s(open_section(r, "PROV"), "PROV");
    const auto n = s.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      TrainStage st;
      st.corpus = s.str();
      st.config.learning_rate = s.f64();
      st.config.batch_size = s.u64();
      st.config.epochs = static_cast<int>(s.u64());
      st.config.weight_decay = s.f64();
      st.config.seed = s.u64();
      st.config.optimizer = s.u8() ? Optimizer::Adam : Optimizer::Sgd;
      st.final_loss = s.f64();
      ck.provenance.push_back(std::move(st));
    }
    if (!s.done()) s.fail("trailing bytes");
  }
  if (!r.done()) r.fail("trailing bytes after PROV");
  return ck;
}

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  save_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace moodshift::nn
