// Copyright 2026 The subsent Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "subsent/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "subsent/error.hpp"

namespace subsent::num {

namespace {

constexpr char kMagic[8] = {'S', 'U', 'B', 'S', 'E', 'N', 'T', '\0'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

void put_bytes(std::string& out, const std::string& s) {
  put_le<std::uint64_t>(out, s.size());
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i]))
               << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::string str() {
    const auto n = le<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
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
    if (n > bytes_.size() - pos_) {
      throw Error(ErrorCode::kCheckpointFormat, "truncated checkpoint");
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw Error(ErrorCode::kCheckpointFormat, "checkpoint lacks tensor " + name);
}

const std::string& Checkpoint::get(const std::string& key) const {
  auto it = manifest.find(key);
  if (it == manifest.end()) {
    throw Error(ErrorCode::kCheckpointFormat, "checkpoint lacks key " + key);
  }
  return it->second;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.manifest.size()));
  for (const auto& [k, v] : ckpt.manifest) {
    put_bytes(out, k);
    put_bytes(out, v);
  }
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_bytes(out, name);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_le<std::uint64_t>(out, d);
    for (double v : t.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw Error(ErrorCode::kCheckpointFormat, "bad checkpoint magic");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpointFormat,
                "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_entries = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    std::string k = r.str();
    ckpt.manifest[std::move(k)] = r.str();
  }
  const auto n_tensors = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const auto rank = r.le<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.le<std::uint64_t>();
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = std::bit_cast<double>(r.le<std::uint64_t>());
    ckpt.tensors.emplace_back(std::move(name),
                              Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) {
    throw Error(ErrorCode::kCheckpointFormat, "trailing bytes in checkpoint");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace subsent::num
