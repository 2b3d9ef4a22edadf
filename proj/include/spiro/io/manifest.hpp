#pragma once

// Dataset manifest (JSON or CSV). Paths are relative to the manifest's
// directory unless absolute.
//
// JSON: {"schema_version": "spiro-manifest/1", "entries": [{...}, ...]}
// CSV:  first line "# spiro-manifest/1", then a header naming the columns.
//
// Entry fields: subject_id, mask_type (n95|cloth), maneuver (forced|tidal),
// sensor_position (L1|C1|R1|L3|R3|unknown), audio_path, repetition (integer,
// default 0), label (tidal|speech|noise, tidal maneuvers only, default tidal),
// fvc_L, fev1_L, pef_Ls (forced truth), rr_bpm or accel_path (tidal truth),
// and any other string fields (kept as demographics, e.g. health).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "spiro/error.hpp"

namespace spiro::io {

inline constexpr const char* kManifestSchema = "spiro-manifest/1";

struct ManifestEntry {
  std::string subject_id;
  std::string mask_type = "n95";
  std::string maneuver = "forced";
  std::string sensor_position = "unknown";
  std::string audio_path;  // resolved
  std::string accel_path;  // resolved, optional
  std::string label = "tidal";
  int repetition = 0;
  std::optional<double> fvc_L, fev1_L, pef_Ls, rr_bpm;
  std::map<std::string, std::string> demographics;

  std::string key() const {
    return subject_id + "/" + maneuver + "/" + mask_type + "/" + sensor_position + "/" + std::to_string(repetition);
  }
};

struct Manifest {
  std::string schema_version = kManifestSchema;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> of(const std::string& maneuver) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.maneuver == maneuver) out.push_back(&e);
    return out;
  }
};

namespace detail {

inline const std::set<std::string>& positions() {
  static const std::set<std::string> p = {"L1", "C1", "R1", "L3", "R3", "unknown"};
  return p;
}

[[noreturn]] inline void invalid(const ManifestEntry& e, const std::string& what) {
  fail(ErrorKind::ValidationError, "manifest entry " + e.key() + ": " + what);
}

inline bool positive(const std::optional<double>& v) { return v && *v > 0.0; }

}  // namespace detail

/// Checks every entry; with `check_paths` the referenced files must exist.
inline void validate(const Manifest& m, bool check_paths = true) {
  require(m.schema_version == kManifestSchema, ErrorKind::ValidationError,
          "unsupported manifest schema '" + m.schema_version + "' (expected " + kManifestSchema + ")");
  require(!m.entries.empty(), ErrorKind::ValidationError, "manifest has no entries");
  std::set<std::string> keys;
  for (const auto& e : m.entries) {
    if (e.subject_id.empty()) detail::invalid(e, "missing subject_id");
    if (e.mask_type != "n95" && e.mask_type != "cloth") detail::invalid(e, "mask_type must be n95 or cloth");
    if (e.maneuver != "forced" && e.maneuver != "tidal") detail::invalid(e, "maneuver must be forced or tidal");
    if (!detail::positions().count(e.sensor_position)) detail::invalid(e, "unknown sensor_position " + e.sensor_position);
    if (e.audio_path.empty()) detail::invalid(e, "missing audio_path");
    if (e.maneuver == "forced") {
      if (!detail::positive(e.fvc_L)) detail::invalid(e, "forced entry needs a positive fvc_L");
      if (!detail::positive(e.fev1_L)) detail::invalid(e, "forced entry needs a positive fev1_L");
      if (!detail::positive(e.pef_Ls)) detail::invalid(e, "forced entry needs a positive pef_Ls");
    } else {
      if (e.label != "tidal" && e.label != "speech" && e.label != "noise")
        detail::invalid(e, "label must be tidal, speech or noise");
      if (e.label == "tidal" && !detail::positive(e.rr_bpm) && e.accel_path.empty())
        detail::invalid(e, "tidal entry needs rr_bpm or accel_path");
    }
    if (check_paths) {
      if (!std::filesystem::exists(e.audio_path)) detail::invalid(e, "audio file not found: " + e.audio_path);
      if (!e.accel_path.empty() && !std::filesystem::exists(e.accel_path))
        detail::invalid(e, "accelerometer file not found: " + e.accel_path);
    }
    if (!keys.insert(e.key()).second) detail::invalid(e, "duplicate (subject, maneuver, mask, position, repetition)");
  }
}

namespace detail {

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

inline double number(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::ValidationError, "field " + field + ": not a number: '" + text + "'");
}

// Applies one field given as text; returns false for unknown names.
inline bool set_field(ManifestEntry& e, const std::string& k, const std::string& v,
                      const std::filesystem::path& base) {
  if (k == "subject_id") e.subject_id = v;
  else if (k == "mask_type") e.mask_type = v;
  else if (k == "maneuver") e.maneuver = v;
  else if (k == "sensor_position") e.sensor_position = v;
  else if (k == "audio_path") e.audio_path = resolve(base, v);
  else if (k == "accel_path") e.accel_path = resolve(base, v);
  else if (k == "label") e.label = v;
  else if (k == "repetition") e.repetition = static_cast<int>(number(k, v));
  else if (k == "fvc_L") e.fvc_L = number(k, v);
  else if (k == "fev1_L") e.fev1_L = number(k, v);
  else if (k == "pef_Ls") e.pef_Ls = number(k, v);
  else if (k == "rr_bpm") e.rr_bpm = number(k, v);
  else return false;
  return true;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline Manifest parse_manifest_json(const nlohmann::json& j, const std::filesystem::path& base) {
  Manifest m;
  require(j.is_object() && j.contains("schema_version") && j.contains("entries") && j["entries"].is_array(),
          ErrorKind::ValidationError, "manifest must be an object with schema_version and entries");
  m.schema_version = j["schema_version"].get<std::string>();
  for (const auto& item : j["entries"]) {
    require(item.is_object(), ErrorKind::ValidationError, "manifest entries must be objects");
    ManifestEntry e;
    for (const auto& [k, v] : item.items()) {
      if (v.is_null()) continue;
      const std::string text = v.is_string() ? v.get<std::string>() : v.dump();
      if (k == "demographics" && v.is_object()) {
        for (const auto& [dk, dv] : v.items()) e.demographics[dk] = dv.is_string() ? dv.get<std::string>() : dv.dump();
      } else if (!detail::set_field(e, k, text, base)) {
        e.demographics[k] = text;
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Manifest parse_manifest_csv(std::istream& in, const std::filesystem::path& base) {
  Manifest m;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::ValidationError, "empty manifest");
  line = detail::trim(line);
  require(line.rfind("#", 0) == 0, ErrorKind::ValidationError, "CSV manifest must start with '# <schema_version>'");
  m.schema_version = detail::trim(line.substr(1));
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::ValidationError, "CSV manifest has no header");
  const auto header = detail::split_csv(line);
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    require(cells.size() == header.size(), ErrorKind::ValidationError,
            "manifest line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " cells");
    ManifestEntry e;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (cells[c].empty()) continue;
      if (!detail::set_field(e, header[c], cells[c], base)) e.demographics[header[c]] = cells[c];
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline Manifest load_manifest(const std::string& path, bool check_paths = true) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open manifest " + path);
  const auto base = std::filesystem::absolute(path).parent_path();
  Manifest m;
  const bool csv = std::filesystem::path(path).extension() == ".csv";
  if (csv) {
    m = parse_manifest_csv(in, base);
  } else {
    try {
      m = parse_manifest_json(nlohmann::json::parse(in), base);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::FormatError, "manifest " + path + ": " + e.what());
    }
  }
  validate(m, check_paths);
  return m;
}

/// JSON manifest with paths relative to `base`.
inline nlohmann::ordered_json manifest_to_json(const Manifest& m, const std::filesystem::path& base) {
  auto rel = [&](const std::string& p) {
    return p.empty() ? p : std::filesystem::path(p).lexically_relative(base).string();
  };
  nlohmann::ordered_json j;
  j["schema_version"] = m.schema_version;
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json o;
    o["subject_id"] = e.subject_id;
    o["mask_type"] = e.mask_type;
    o["maneuver"] = e.maneuver;
    o["sensor_position"] = e.sensor_position;
    o["repetition"] = e.repetition;
    o["audio_path"] = rel(e.audio_path);
    if (e.maneuver == "tidal") o["label"] = e.label;
    if (!e.accel_path.empty()) o["accel_path"] = rel(e.accel_path);
    if (e.fvc_L) o["fvc_L"] = *e.fvc_L;
    if (e.fev1_L) o["fev1_L"] = *e.fev1_L;
    if (e.pef_Ls) o["pef_Ls"] = *e.pef_Ls;
    if (e.rr_bpm) o["rr_bpm"] = *e.rr_bpm;
    if (!e.demographics.empty()) o["demographics"] = e.demographics;
    entries.push_back(std::move(o));
  }
  return j;
}

}  // namespace spiro::io
