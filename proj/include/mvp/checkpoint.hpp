/*
 * Copyright (c) 2026, the mvp authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MVP_CHECKPOINT_HPP_
#define MVP_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mvp/error.hpp"
#include "mvp/params.hpp"

namespace mvp {

// Binary checkpoint container, all integers and floats little-endian:
//   magic "MVPC" | u32 version | u32 config_len, config bytes (key=value text)
//   | u64 training step | u64 rng state | u32 tensor count
//   | per tensor: u32 name_len, name, u8 dtype (0 = f64), u32 rank, u64 dims[]
//   | payloads in manifest order, raw f64.

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
  }
  put_bytes(out, buf, sizeof(T));
}

inline void put_f64_le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_le<std::uint64_t>(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, std::string origin)
      : data_(data), origin_(std::move(origin)) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw IntegrityError("truncated checkpoint: " + origin_);
    }
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  template <typename T>
  T take_le() {
    unsigned char buf[sizeof(T)];
    take(buf, sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
  }

  double take_f64_le() {
    const std::uint64_t bits = take_le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string take_string(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw IntegrityError("truncated checkpoint: " + origin_);
    }
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace detail

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_echo;  // key=value text, one per line
  std::uint64_t step = 0;
  std::uint64_t rng_state = 0;
  ModelParams params;  // config inside params is NOT populated by load; see trainer
};

inline std::string encode_checkpoint(const ModelParams& params, const std::string& config_echo,
                                     std::uint64_t step, std::uint64_t rng_state) {
  std::string out;
  out += "MVPC";
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_echo.size()));
  out += config_echo;
  detail::put_le<std::uint64_t>(out, step);
  detail::put_le<std::uint64_t>(out, rng_state);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.count()));
  for (const auto& [name, t] : params.entries()) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(0));  // dtype f64
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put_le<std::uint64_t>(out, d);
  }
  for (const auto& [name, t] : params.entries()) {
    for (double v : t.data()) detail::put_f64_le(out, v);
  }
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& blob, const std::string& origin) {
  detail::Reader r(blob, origin);
  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, "MVPC", 4) != 0) {
    throw IncompatibleCheckpointError("bad magic in " + origin);
  }
  Checkpoint ck;
  ck.version = r.take_le<std::uint32_t>();
  if (ck.version != kCheckpointVersion) {
    throw IncompatibleCheckpointError("unsupported checkpoint version " +
                                      std::to_string(ck.version) + " in " + origin);
  }
  const auto config_len = r.take_le<std::uint32_t>();
  ck.config_echo = r.take_string(config_len);
  ck.step = r.take_le<std::uint64_t>();
  ck.rng_state = r.take_le<std::uint64_t>();
  const auto tensor_count = r.take_le<std::uint32_t>();
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
  };
  std::vector<Entry> manifest;
  manifest.reserve(tensor_count);
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    Entry e;
    const auto name_len = r.take_le<std::uint32_t>();
    e.name = r.take_string(name_len);
    const auto dtype = r.take_le<std::uint8_t>();
    if (dtype != 0) {
      throw IncompatibleCheckpointError("tensor " + e.name + ": unsupported dtype " +
                                        std::to_string(dtype));
    }
    const auto rank = r.take_le<std::uint32_t>();
    if (rank > 8) throw IntegrityError("tensor " + e.name + ": implausible rank");
    for (std::uint32_t k = 0; k < rank; ++k) {
      e.shape.push_back(static_cast<std::size_t>(r.take_le<std::uint64_t>()));
    }
    manifest.push_back(std::move(e));
  }
  for (const Entry& e : manifest) {
    std::size_t numel = 1;
    for (std::size_t d : e.shape) numel *= d;
    std::vector<double> data(numel);
    for (std::size_t i = 0; i < numel; ++i) data[i] = r.take_f64_le();
    ck.params.add(e.name, Tensor(e.shape, std::move(data)));
  }
  if (!r.exhausted()) {
    throw IntegrityError("trailing bytes after checkpoint payload in " + origin);
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            const std::string& config_echo, std::uint64_t step,
                            std::uint64_t rng_state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IntegrityError("cannot open for writing: " + path);
  const std::string blob = encode_checkpoint(params, config_echo, step, rng_state);
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!os) throw IntegrityError("short write to " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IntegrityError("cannot open for reading: " + path);
  std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(blob, path);
}

/// Check every tensor of a loaded checkpoint against the shapes a config
/// would initialize. Raises an IntegrityError naming the first mismatch.
inline void validate_checkpoint_shapes(const ModelParams& loaded, const ModelConfig& expected) {
  const ModelParams reference = ModelParams::init(expected, /*seed=*/0);
  for (const auto& [name, t] : reference.entries()) {
    if (!loaded.has(name)) {
      throw IntegrityError("checkpoint missing tensor " + name);
    }
    const Tensor& got = loaded.tensor(name);
    if (got.shape() != t.shape()) {
      throw IntegrityError("tensor " + name + ": checkpoint shape " + got.shape_string() +
                           " does not match configured shape " + t.shape_string());
    }
  }
  if (loaded.count() != reference.count()) {
    throw IntegrityError("checkpoint holds " + std::to_string(loaded.count()) +
                         " tensors, config expects " + std::to_string(reference.count()));
  }
}

}  // namespace mvp

#endif  // MVP_CHECKPOINT_HPP_
