// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "came/error.hpp"

namespace came {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'M', 'E', 'C', 'K', 'P', 'T'};

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
  void str(const std::string& s) {
    u32(checked32(s.size()));
    buf_ += s;
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  static std::uint32_t checked32(std::size_t v) {
    if (v > 0xFFFFFFFFu) throw InvalidArgument("checkpoint: value too large for u32 field");
    return static_cast<std::uint32_t>(v);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
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
    const std::uint32_t n = u32();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(sizeof kMagic);
    if (std::memcmp(b_.data() + pos_, kMagic, sizeof kMagic) != 0) throw SchemaError("checkpoint: bad magic");
    pos_ += sizeof kMagic;
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) {
    if (b_.size() - pos_ < n) throw SchemaError("checkpoint: truncated file");
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

void write_tensors(Writer& w, const CameParams& p) {
  const auto ts = p.tensors();
  w.u32(Writer::checked32(ts.size()));
  for (const auto& t : ts) {
    w.str(t.name);
    w.u32(Writer::checked32(t.tensor->rows()));
    w.u32(Writer::checked32(t.tensor->cols()));
    for (double v : t.tensor->data()) w.f64(v);
  }
}

void read_tensors(Reader& r, CameParams& p) {
  auto ts = p.tensors();
  const std::uint32_t count = r.u32();
  if (count != ts.size())
    throw SchemaError("checkpoint: expected " + std::to_string(ts.size()) + " tensors, found " + std::to_string(count));
  for (auto& t : ts) {
    const std::string name = r.str();
    if (name != t.name) throw SchemaError("checkpoint: expected tensor '" + t.name + "', found '" + name + "'");
    const std::uint32_t rows = r.u32(), cols = r.u32();
    if (rows != t.tensor->rows() || cols != t.tensor->cols())
      throw SchemaError("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", expected " + std::to_string(t.tensor->rows()) + "x" +
                        std::to_string(t.tensor->cols()));
    for (double& v : t.tensor->data()) v = r.f64();
    if (!t.tensor->all_finite()) throw SchemaError("checkpoint: tensor '" + name + "' holds non-finite values");
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(Writer::checked32(ck.config.num_experts));
  w.u32(Writer::checked32(ck.config.hidden_dim));
  w.u32(Writer::checked32(ck.config.edge_dim));
  w.f64(ck.config.pw_temperature);
  w.u8(ck.config.ew_enabled ? 1 : 0);
  w.u8(ck.config.pw_enabled ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(ck.config.activation));
  w.f64(ck.config.pw_aux_weight);
  w.u32(Writer::checked32(ck.d_x));
  w.u32(Writer::checked32(ck.d_c));
  w.u32(Writer::checked32(ck.vocabulary.size()));
  for (std::size_t c = 0; c < ck.vocabulary.size(); ++c) {
    w.str(ck.vocabulary.names[c]);
    w.u64(ck.vocabulary.train_counts[c]);
  }
  write_tensors(w, ck.params);
  w.u8(ck.train_state ? 1 : 0);
  if (ck.train_state) {
    w.u64(ck.train_state->epochs_completed);
    w.u64(ck.train_state->optimizer.step);
    write_tensors(w, ck.train_state->optimizer.velocity);
  }
  return w.take();
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw SchemaError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.config.num_experts = r.u32();
  ck.config.hidden_dim = r.u32();
  ck.config.edge_dim = r.u32();
  ck.config.pw_temperature = r.f64();
  ck.config.ew_enabled = r.u8() != 0;
  ck.config.pw_enabled = r.u8() != 0;
  const std::uint8_t act = r.u8();
  if (act > 1) throw SchemaError("checkpoint: unknown activation code");
  ck.config.activation = static_cast<Activation>(act);
  ck.config.pw_aux_weight = r.f64();
  try {
    ck.config.validate();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
  ck.d_x = r.u32();
  ck.d_c = r.u32();
  const std::uint32_t m = r.u32();
  if (ck.d_x == 0 || ck.d_c == 0 || m == 0) throw SchemaError("checkpoint: zero dimension");
  for (std::uint32_t c = 0; c < m; ++c) {
    ck.vocabulary.names.push_back(r.str());
    ck.vocabulary.train_counts.push_back(r.u64());
  }
  ck.params = CameParams::zeros(ck.config, ck.d_x, ck.d_c, m);
  read_tensors(r, ck.params);
  if (r.u8()) {
    TrainState st;
    st.epochs_completed = r.u64();
    st.optimizer.step = r.u64();
    st.optimizer.velocity = CameParams::zeros(ck.config, ck.d_x, ck.d_c, m);
    read_tensors(r, st.optimizer.velocity);
    ck.train_state = std::move(st);
  }
  if (!r.at_end()) throw SchemaError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint '" + path.string() + "'");
  const std::string bytes = serialize_checkpoint(ck);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace came
