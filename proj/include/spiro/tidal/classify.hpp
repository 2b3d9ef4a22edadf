#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "spiro/error.hpp"
#include "spiro/signal/recording.hpp"
#include "spiro/tidal/cnn.hpp"
#include "spiro/tidal/windows.hpp"

namespace spiro::tidal {

inline constexpr int kUncertain = -1;
inline constexpr int kVoteNumerator = 9;  // a class needs 9/10 of the windows
inline constexpr int kVoteDenominator = 10;

inline std::string label_name(int label) {
  return label == kUncertain ? "uncertain" : kClassNames.at(static_cast<std::size_t>(label));
}

struct TidalDecision {
  std::vector<int> per_window_label;
  int voted_label = kUncertain;
  double vote_fraction = 0.0;  // share of the most frequent class
  std::string source;
};

/// A class wins when it holds at least 90 % of the windows (exact integer
/// comparison); otherwise the decision is uncertain.
inline TidalDecision vote(const std::vector<int>& labels) {
  TidalDecision d;
  d.per_window_label = labels;
  if (labels.empty()) return d;
  std::array<long, kClassCount> counts{};
  for (int l : labels) {
    require(l >= 0 && l < kClassCount, ErrorKind::InvalidInput, "window label outside the three classes");
    ++counts[static_cast<std::size_t>(l)];
  }
  const long total = static_cast<long>(labels.size());
  int best = 0;
  for (int c = 1; c < kClassCount; ++c)
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
  d.vote_fraction = static_cast<double>(counts[static_cast<std::size_t>(best)]) / static_cast<double>(total);
  if (kVoteDenominator * counts[static_cast<std::size_t>(best)] >= kVoteNumerator * total) d.voted_label = best;
  return d;
}

inline std::vector<int> window_labels(const CnnModel& m, const TidalWindowBatch& b) {
  std::vector<int> out;
  out.reserve(b.windows.size());
  for (const auto& w : b.windows) out.push_back(predict_class(m, w));
  return out;
}

/// Band-limit, slice with the model's window settings, label every window and vote.
inline TidalDecision classify(const CnnModel& m, const signal::AudioRecording& rec) {
  require(rec.sample_rate_hz == m.sample_rate_hz, ErrorKind::InvalidInput,
          "recording rate " + std::to_string(rec.sample_rate_hz) + " Hz differs from the model's " +
              std::to_string(m.sample_rate_hz) + " Hz");
  auto d = vote(window_labels(m, slice_windows(prepare(rec), m.hyper, m.mfe)));
  d.source = rec.source_id;
  return d;
}

inline nlohmann::ordered_json to_json(const TidalDecision& d) {
  nlohmann::ordered_json j;
  j["source"] = d.source;
  j["label"] = label_name(d.voted_label);
  j["vote_fraction"] = d.vote_fraction;
  std::vector<std::string> names;
  for (int l : d.per_window_label) names.push_back(label_name(l));
  j["window_labels"] = names;
  return j;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline constexpr const char* kCnnFormat = "spiro-cnn/1";

inline nlohmann::ordered_json cnn_to_json(const CnnModel& m) {
  nlohmann::ordered_json j;
  j["format"] = kCnnFormat;
  j["classes"] = kClassNames;
  j["sample_rate_hz"] = m.sample_rate_hz;
  j["train_seed"] = m.train_seed;
  j["hyper"] = {{"window_s", m.hyper.window_s},
                {"offset_fraction", m.hyper.offset_fraction},
                {"fft_length", m.hyper.fft_length}};
  j["mfe"] = {{"bands", m.mfe.bands}, {"fmax_hz", m.mfe.fmax_hz}, {"max_frame_ms", m.mfe.max_frame_ms}};
  j["network"] = {{"conv1_filters", m.cfg.conv1_filters}, {"conv2_filters", m.cfg.conv2_filters},
                  {"kernel", m.cfg.kernel},               {"dropout", m.cfg.dropout},
                  {"epochs", m.cfg.epochs},               {"batch_size", m.cfg.batch_size},
                  {"learning_rate", m.cfg.learning_rate}};
  j["bands"] = m.bands;
  j["frames"] = m.frames;
  j["band_mean"] = m.band_mean;
  j["band_scale"] = m.band_scale;
  j["params"] = m.params;
  return j;
}

inline CnnModel cnn_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format").get<std::string>() == kCnnFormat, ErrorKind::FormatError, "unsupported classifier format");
    const auto& n = j.at("network");
    CnnConfig cfg;
    cfg.conv1_filters = n.at("conv1_filters").get<int>();
    cfg.conv2_filters = n.at("conv2_filters").get<int>();
    cfg.kernel = n.at("kernel").get<int>();
    cfg.dropout = n.at("dropout").get<double>();
    cfg.epochs = n.at("epochs").get<int>();
    cfg.batch_size = n.at("batch_size").get<int>();
    cfg.learning_rate = n.at("learning_rate").get<double>();
    auto m = init_cnn(j.at("bands").get<int>(), j.at("frames").get<int>(), cfg, j.at("train_seed").get<std::uint64_t>());
    m.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    const auto& h = j.at("hyper");
    m.hyper = {h.at("window_s").get<double>(), h.at("offset_fraction").get<double>(), h.at("fft_length").get<int>()};
    const auto& f = j.at("mfe");
    m.mfe = {f.at("bands").get<int>(), f.at("fmax_hz").get<double>(), f.at("max_frame_ms").get<double>()};
    m.band_mean = j.at("band_mean").get<std::vector<double>>();
    m.band_scale = j.at("band_scale").get<std::vector<double>>();
    m.params = j.at("params").get<std::vector<double>>();
    require(m.params.size() == m.param_count() && m.band_mean.size() == static_cast<std::size_t>(m.bands) &&
                m.band_scale.size() == static_cast<std::size_t>(m.bands),
            ErrorKind::FormatError, "classifier weights do not match the declared shape");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, std::string("malformed classifier file: ") + e.what());
  }
}

}  // namespace spiro::tidal
