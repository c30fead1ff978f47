// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace vnsgru {

namespace {

constexpr char kMagic[4] = {'V', 'N', 'S', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
public:
  Reader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
      v = (v << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }

  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool exhausted() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("checkpoint " + path_ + ": " + what + " at byte " +
                      std::to_string(pos_));
  }

private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail("truncated (need " + std::to_string(n) + " bytes)");
  }

  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string encode(const std::vector<NamedParam>& params) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const NamedParam& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    const Tensor& t = *p.tensor;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  }
  return out;
}

void write_atomic(const std::string& bytes, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("checkpoint: cannot open " + tmp + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("checkpoint: short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw FormatError("checkpoint: cannot rename " + tmp + " to " + path);
}

} // namespace

void save_checkpoint(const std::vector<NamedParam>& params, const std::string& path) {
  write_atomic(encode(params), path);
}

void save_checkpoint(const std::vector<NamedTensor>& tensors, const std::string& path) {
  std::vector<NamedParam> refs;
  refs.reserve(tensors.size());
  for (const NamedTensor& t : tensors)
    refs.push_back({t.name, const_cast<Tensor*>(&t.tensor)});
  write_atomic(encode(refs), path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(bytes, path);

  if (r.str(4) != std::string(kMagic, 4)) throw FormatError("checkpoint " + path +
                                                            ": bad magic at byte 0");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("checkpoint " + path + ": unsupported version " +
                      std::to_string(version) + " at byte 4");
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) r.fail("implausible rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = r.u32();
      total *= shape[d];
    }
    std::vector<double> data(total);
    for (std::size_t k = 0; k < total; ++k) data[k] = static_cast<double>(r.f32());
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  if (!r.exhausted()) r.fail("trailing bytes");
  return out;
}

DecoderParams decoder_from_tensors(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const NamedTensor& t : tensors) by_name[t.name] = &t.tensor;

  auto take = [&by_name](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint: missing tensor " + name);
    return *it->second;
  };

  DecoderParams p;
  p.embedding = take("embedding");
  p.proj = take("proj");
  p.proj_bias = take("proj_bias");
  if (p.embedding.rank() != 2 || p.proj.rank() != 2)
    throw ConfigError("checkpoint: embedding/proj must be matrices");

  auto load_gate = [&take](const std::string& prefix) {
    GateParams g;
    g.w1 = take(prefix + ".w1");
    g.w2 = take(prefix + ".w2");
    g.w3 = take(prefix + ".w3");
    g.u1 = take(prefix + ".u1");
    g.u2 = take(prefix + ".u2");
    g.u3 = take(prefix + ".u3");
    g.v1 = take(prefix + ".v1");
    g.v2 = take(prefix + ".v2");
    g.v3 = take(prefix + ".v3");
    g.ln_gain = take(prefix + ".ln_gain");
    g.ln_bias = take(prefix + ".ln_bias");
    return g;
  };

  auto load_layer = [&load_gate](const std::string& prefix) {
    CellParams c;
    c.z = load_gate(prefix + ".z");
    c.r = load_gate(prefix + ".r");
    c.c = load_gate(prefix + ".c");
    c.dims.n_f = c.z.w1.rows();
    c.dims.n_s = c.z.w1.cols();
    c.dims.n_x = c.z.w2.cols();
    c.dims.n_h = c.z.w3.rows();
    c.dims.n_v = c.z.v2.cols();
    return c;
  };

  p.layer1 = load_layer("layer1");
  p.layer2 = load_layer("layer2");

  if (p.embedding.cols() != p.layer1.dims.n_x)
    throw ConfigError("checkpoint: embedding width " + std::to_string(p.embedding.cols()) +
                      " does not match layer-1 input width " +
                      std::to_string(p.layer1.dims.n_x));
  if (p.layer2.dims.n_x != p.layer1.dims.n_h)
    throw ConfigError("checkpoint: layer widths do not stack");
  if (p.proj.rows() != p.layer2.dims.n_h || p.proj.cols() != p.embedding.rows())
    throw ConfigError("checkpoint: projection shape " + shape_str(p.proj) +
                      " does not match hidden/vocab sizes");
  return p;
}

DecoderParams load_decoder(const std::string& path) {
  return decoder_from_tensors(load_checkpoint(path));
}

} // namespace vnsgru
