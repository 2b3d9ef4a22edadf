#pragma once

// PCM16 mono WAV reader/writer. Samples map to [-1, 1) by x / 32768.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::io {

namespace detail {

inline std::uint32_t le32(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

inline std::uint16_t le16(const std::vector<unsigned char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

inline void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

[[noreturn]] inline void bad(const std::string& what, std::size_t offset) {
  fail(ErrorKind::FormatError, what + " at byte " + std::to_string(offset));
}

}  // namespace detail

inline signal::AudioRecording parse_wav(const std::vector<unsigned char>& b, const std::string& source = {}) {
  using detail::bad;
  if (b.size() < 12) bad("file too short for a RIFF header", b.size());
  if (std::string(b.begin(), b.begin() + 4) != "RIFF") bad("missing RIFF tag", 0);
  if (std::string(b.begin() + 8, b.begin() + 12) != "WAVE") bad("missing WAVE tag", 8);
  bool have_fmt = false;
  int rate = 0;
  std::size_t at = 12;
  while (at + 8 <= b.size()) {
    const std::string id(b.begin() + static_cast<std::ptrdiff_t>(at), b.begin() + static_cast<std::ptrdiff_t>(at + 4));
    const std::size_t size = detail::le32(b, at + 4);
    const std::size_t body = at + 8;
    if (body + size > b.size()) bad("chunk '" + id + "' runs past end of file", at + 4);
    if (id == "fmt ") {
      if (size < 16) bad("fmt chunk too short", at + 4);
      std::uint16_t format = detail::le16(b, body);
      if (format == 0xFFFE && size >= 40) format = detail::le16(b, body + 24);  // extensible: sub-format GUID
      if (format != 1) bad("not PCM (format tag " + std::to_string(format) + ")", body);
      const auto channels = detail::le16(b, body + 2);
      if (channels != 1) bad("expected mono, found " + std::to_string(channels) + " channels", body + 2);
      rate = static_cast<int>(detail::le32(b, body + 4));
      if (rate <= 0) bad("invalid sample rate", body + 4);
      const auto bits = detail::le16(b, body + 14);
      if (bits != 16) bad("expected 16-bit samples, found " + std::to_string(bits), body + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) bad("data chunk before fmt chunk", at);
      if (size % 2 != 0) bad("odd data size for 16-bit samples", at + 4);
      signal::AudioRecording rec;
      rec.sample_rate_hz = rate;
      rec.source_id = source;
      rec.samples.resize(size / 2);
      for (std::size_t i = 0; i < rec.samples.size(); ++i)
        rec.samples[i] = static_cast<std::int16_t>(detail::le16(b, body + 2 * i)) / 32768.0;
      if (rec.samples.empty()) bad("empty data chunk", at);
      return rec;
    }
    at = body + size + (size & 1);
  }
  bad(have_fmt ? "missing data chunk" : "missing fmt chunk", at);
}

inline signal::AudioRecording load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes, path);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FormatError) throw;
    fail(ErrorKind::FormatError, path + ": " + e.what());
  }
}

inline std::int16_t to_pcm16(double x) {
  return static_cast<std::int16_t>(std::clamp(std::lround(x * 32768.0), -32768L, 32767L));
}

inline std::string encode_wav(const signal::AudioRecording& rec) {
  rec.validate();
  std::string s;
  const auto data_bytes = static_cast<std::uint32_t>(2 * rec.samples.size());
  s += "RIFF";
  detail::put32(s, 36 + data_bytes);
  s += "WAVEfmt ";
  detail::put32(s, 16);
  detail::put16(s, 1);  // PCM
  detail::put16(s, 1);  // mono
  detail::put32(s, static_cast<std::uint32_t>(rec.sample_rate_hz));
  detail::put32(s, static_cast<std::uint32_t>(2 * rec.sample_rate_hz));
  detail::put16(s, 2);
  detail::put16(s, 16);
  s += "data";
  detail::put32(s, data_bytes);
  for (double v : rec.samples) detail::put16(s, static_cast<std::uint16_t>(to_pcm16(v)));
  return s;
}

inline void save_wav(const std::string& path, const signal::AudioRecording& rec) {
  const auto bytes = encode_wav(rec);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path);
}

}  // namespace spiro::io
