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

#ifndef OPSUM_BASE_HPP_
#define OPSUM_BASE_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace opsum {

using json = nlohmann::json;

// Bad input: malformed files, out-of-range config values, violated
// preconditions. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line-oriented parse failure. `line()` is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Failure during compute (non-finite loss, exhausted retries, I/O).
// The CLI maps these to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logging: one `key=value` line per event on stderr.

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

inline std::atomic<int>& log_threshold() {
  static std::atomic<int> level{static_cast<int>(LogLevel::kInfo)};
  return level;
}

inline void set_log_level(LogLevel level) {
  log_threshold().store(static_cast<int>(level));
}

namespace detail {

inline const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kError: return "error";
    default: return "off";
  }
}

inline void append_fields(std::ostringstream&) {}

template <typename V, typename... Rest>
void append_fields(std::ostringstream& os, std::string_view key, const V& value,
                   Rest&&... rest) {
  os << ' ' << key << '=' << value;
  append_fields(os, std::forward<Rest>(rest)...);
}

}  // namespace detail

// log(LogLevel::kInfo, "epoch done", "epoch", 3, "loss", 1.25);
template <typename... Fields>
void log(LogLevel level, std::string_view msg, Fields&&... fields) {
  if (static_cast<int>(level) < log_threshold().load()) return;
  std::ostringstream os;
  os << "level=" << detail::level_name(level) << " msg=\"" << msg << '"';
  detail::append_fields(os, std::forward<Fields>(fields)...);
  os << '\n';
  std::cerr << os.str();
}

template <typename... Fields>
void log_info(std::string_view msg, Fields&&... fields) {
  log(LogLevel::kInfo, msg, std::forward<Fields>(fields)...);
}

template <typename... Fields>
void log_warn(std::string_view msg, Fields&&... fields) {
  log(LogLevel::kWarn, msg, std::forward<Fields>(fields)...);
}

// ---------------------------------------------------------------------------
// Seeding. Independent streams are derived from (seed, tag) so results do not
// depend on the order in which streams are created.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

// FNV-1a, used for content hashes recorded in manifests and checkpoints.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files.

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary sibling and renames, so readers never observe a
// partially written file.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw RuntimeError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// Parses a JSONL file; blank lines are skipped.
inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> out;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(json::parse(lines[i]));
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) +
                           ": malformed JSON: " + e.what(),
                       i + 1);
    }
  }
  return out;
}

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<json>& rows) {
  std::string buf;
  for (const auto& row : rows) {
    buf += row.dump();
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

// ---------------------------------------------------------------------------
// UTF-8 helpers. Invalid bytes decode as U+FFFD, one byte at a time.

inline std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xf0) len = 4;
    else if (c >= 0xe0) len = 3;
    else if (c >= 0xc0) len = 2;
    if (i + len > s.size()) len = 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline char32_t utf8_codepoint(std::string_view ch) {
  if (ch.empty()) return 0;
  auto c0 = static_cast<unsigned char>(ch[0]);
  if (ch.size() == 1) return c0 < 0x80 ? c0 : 0xfffd;
  auto cont = [&](std::size_t i) {
    return static_cast<char32_t>(static_cast<unsigned char>(ch[i]) & 0x3f);
  };
  if (ch.size() == 2) return ((c0 & 0x1f) << 6) | cont(1);
  if (ch.size() == 3) return ((c0 & 0x0f) << 12) | (cont(1) << 6) | cont(2);
  return ((c0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
}

inline bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0xa0;
}

inline bool is_ascii_alnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

// Letters in the Latin-1 supplement and Latin Extended-A/B blocks.
inline bool is_latin_letter(char32_t cp) {
  return (cp >= 0xc0 && cp <= 0x24f && cp != 0xd7 && cp != 0xf7);
}

inline bool is_alnum(char32_t cp) {
  return is_ascii_alnum(cp) || is_latin_letter(cp);
}

inline bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) ||
           (cp >= 0x5b && cp <= 0x60) || (cp >= 0x7b && cp <= 0x7e);
  }
  // General punctuation: dashes, curly quotes, ellipsis.
  return (cp >= 0x2010 && cp <= 0x2027) || cp == 0xa1 || cp == 0xbf ||
         cp == 0xab || cp == 0xbb;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

// Collapses whitespace runs to one space and trims the ends.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v') {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config sections: every key must be known, present keys override defaults.

inline void check_known_keys(const json& j, std::initializer_list<std::string_view> known,
                             std::string_view section) {
  if (!j.is_object()) throw ValidationError(std::string(section) + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || k == key;
    if (!ok) throw ValidationError(std::string(section) + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read_key(const json& j, std::string_view key, T& out, std::string_view section) {
  auto it = j.find(std::string(key));
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(section) + "." + std::string(key) + ": " + e.what());
  }
}

}  // namespace opsum

#endif  // OPSUM_BASE_HPP_
