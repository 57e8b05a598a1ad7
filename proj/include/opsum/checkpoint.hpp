// Copyright 2026 The opsum Authors.
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


// Checkpoint layout: a directory holding meta.json plus one `<name>.bin` per
// parameter. Each .bin is little-endian: magic "OPSM", u32 version (1),
// u32 rank (2), u32 rows, u32 cols, then rows*cols float32 values in
// row-major order.

#ifndef OPSUM_CHECKPOINT_HPP_
#define OPSUM_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "opsum/autograd.hpp"
#include "opsum/base.hpp"

namespace opsum::ag {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buf.append(b, 4);
}

inline std::uint32_t get_u32(const std::string& buf, std::size_t& off) {
  if (off + 4 > buf.size()) throw ValidationError("checkpoint: truncated header");
  std::uint32_t v;
  std::memcpy(&v, buf.data() + off, 4);
  off += 4;
  return v;
}

}  // namespace detail

inline std::string encode_array(const Matrix& m) {
  std::string buf = "OPSM";
  detail::put_u32(buf, 1);
  detail::put_u32(buf, 2);
  detail::put_u32(buf, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(buf, static_cast<std::uint32_t>(m.cols()));
  buf.reserve(buf.size() + static_cast<std::size_t>(m.size()) * 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float f = static_cast<float>(m(r, c));
      char b[4];
      std::memcpy(b, &f, 4);
      buf.append(b, 4);
    }
  }
  return buf;
}

inline Matrix decode_array(const std::string& buf, const std::string& what) {
  if (buf.size() < 4 || buf.compare(0, 4, "OPSM") != 0)
    throw ValidationError(what + ": bad magic");
  std::size_t off = 4;
  if (detail::get_u32(buf, off) != 1) throw ValidationError(what + ": unsupported version");
  if (detail::get_u32(buf, off) != 2) throw ValidationError(what + ": expected rank 2");
  auto rows = detail::get_u32(buf, off);
  auto cols = detail::get_u32(buf, off);
  std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (buf.size() != off + n * 4) throw ValidationError(what + ": size does not match header");
  Matrix m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      float f;
      std::memcpy(&f, buf.data() + off, 4);
      off += 4;
      m(r, c) = f;
    }
  }
  return m;
}

inline void save_checkpoint(const std::filesystem::path& dir, const ParameterRefs& params,
                            const json& meta) {
  std::filesystem::create_directories(dir);
  json names = json::array();
  for (const Parameter* p : params) {
    write_file_atomic(dir / (p->name + ".bin"), encode_array(p->value));
    names.push_back(p->name);
  }
  json full = meta;
  full["parameters"] = names;
  write_file_atomic(dir / "meta.json", full.dump(2) + "\n");
}

inline json load_checkpoint_meta(const std::filesystem::path& dir) {
  auto path = dir / "meta.json";
  if (!std::filesystem::exists(path)) throw ValidationError("no checkpoint at " + dir.string());
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Fills every parameter from `dir`; shapes must match the ones already set.
inline void load_parameters(const std::filesystem::path& dir, const ParameterRefs& params) {
  for (Parameter* p : params) {
    auto path = dir / (p->name + ".bin");
    Matrix m = decode_array(read_file(path), path.string());
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw ValidationError(path.string() + ": shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + " does not match model");
    p->value = std::move(m);
    p->grad.resize(0, 0);
  }
}

// Rounds every value through float32, matching what a save/load round trip
// would produce.
inline void round_to_float(const ParameterRefs& params) {
  for (Parameter* p : params) p->value = p->value.cast<float>().cast<double>();
}

}  // namespace opsum::ag

#endif  // OPSUM_CHECKPOINT_HPP_
