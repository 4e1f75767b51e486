// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace binaural {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint " + path_ + ": truncated file");
  }
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.header.size()));
  out += ckpt.header;
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.values.size() != ad::numel(t.shape))
      throw std::invalid_argument("checkpoint: tensor " + t.name + " has inconsistent shape");
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("checkpoint: cannot open " + path);
  Reader in(std::string(std::istreambuf_iterator<char>(file), {}), path);
  if (in.raw(4) != std::string(kCheckpointMagic, 4))
    throw std::runtime_error("checkpoint " + path + ": bad magic");
  if (const auto version = in.u32(); version != kCheckpointVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.header = in.raw(in.u32());
  const std::uint32_t count = in.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = in.raw(in.u32());
    const std::uint32_t rank = in.u32();
    if (rank > 8) throw std::runtime_error("checkpoint " + path + ": implausible rank for " + t.name);
    for (std::uint32_t i = 0; i < rank; ++i) t.shape.push_back(static_cast<int>(in.u32()));
    t.values.resize(ad::numel(t.shape));
    for (auto& v : t.values) v = std::bit_cast<float>(in.u32());
    ckpt.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw std::runtime_error("checkpoint " + path + ": trailing bytes");
  return ckpt;
}

}  // namespace binaural
