#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "spiro/error.hpp"

namespace spiro::io {

/// Writes `content` to `path`, creating missing parent directories.
inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << content;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

/// Two-space indented JSON with a trailing newline. Field order is the
/// insertion order of the ordered_json, so reruns are byte-identical.
inline std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, json_text(j));
}

template <class Writer>
inline std::string to_text(Writer&& w) {
  std::ostringstream os;
  w(os);
  return os.str();
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, path.string() + ": " + e.what());
  }
}

}  // namespace spiro::io
