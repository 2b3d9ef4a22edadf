#pragma once

// Small 1-D CNN over log-MFE maps: bands are input channels, convolution runs
// along time. conv(k) -> ReLU -> maxpool 2 -> conv(k) -> ReLU -> maxpool 2 ->
// dropout -> dense softmax over {tidal, speech, noise}. Trained with
// cross-entropy and Adam on seeded mini-batches.

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/features/frames.hpp"
#include "spiro/seed.hpp"
#include "spiro/tidal/windows.hpp"

namespace spiro::tidal {

inline constexpr int kClassCount = 3;
inline constexpr std::array<const char*, kClassCount> kClassNames = {"tidal", "speech", "noise"};

inline int parse_class(const std::string& s) {
  for (int c = 0; c < kClassCount; ++c)
    if (s == kClassNames[static_cast<std::size_t>(c)]) return c;
  fail(ErrorKind::InvalidInput, "unknown class label: " + s);
}

struct CnnConfig {
  int conv1_filters = 8;
  int conv2_filters = 16;
  int kernel = 3;
  double dropout = 0.25;
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 0.002;
};

struct CnnModel {
  CnnConfig cfg;
  TidalHyper hyper;
  MfeConfig mfe;
  int sample_rate_hz = 16000;
  int bands = 0;   // input channels
  int frames = 0;  // input length
  std::vector<double> band_mean, band_scale;
  std::vector<double> params;
  std::uint64_t train_seed = 0;

  int t1() const { return frames - cfg.kernel + 1; }
  int p1() const { return t1() / 2; }
  int t2() const { return p1() - cfg.kernel + 1; }
  int p2() const { return t2() / 2; }
  int flat() const { return cfg.conv2_filters * p2(); }

  // Parameter layout: w1 (f1 x bands x k), b1, w2 (f2 x f1 x k), b2, wd (3 x flat), bd.
  std::size_t off_b1() const { return static_cast<std::size_t>(cfg.conv1_filters * bands * cfg.kernel); }
  std::size_t off_w2() const { return off_b1() + static_cast<std::size_t>(cfg.conv1_filters); }
  std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(cfg.conv2_filters * cfg.conv1_filters * cfg.kernel); }
  std::size_t off_wd() const { return off_b2() + static_cast<std::size_t>(cfg.conv2_filters); }
  std::size_t off_bd() const { return off_wd() + static_cast<std::size_t>(kClassCount * flat()); }
  std::size_t param_count() const { return off_bd() + kClassCount; }
};

inline int min_frames(const CnnConfig& cfg) {
  // both pooled outputs must be non-empty
  return 2 * (2 + cfg.kernel - 1) + cfg.kernel - 1;
}

/// Standardized, channel-major input (bands x frames).
inline std::vector<double> model_input(const CnnModel& m, const features::FrameMatrix& map) {
  require(map.rows() == m.frames && map.cols() == m.bands, ErrorKind::SchemaError,
          "window map does not match the model input shape");
  std::vector<double> x(static_cast<std::size_t>(m.bands * m.frames));
  for (int c = 0; c < m.bands; ++c)
    for (int t = 0; t < m.frames; ++t)
      x[static_cast<std::size_t>(c * m.frames + t)] =
          (map(t, c) - m.band_mean[static_cast<std::size_t>(c)]) * m.band_scale[static_cast<std::size_t>(c)];
  return x;
}

namespace detail {

struct Activations {
  std::vector<double> a1, p1, a2, p2, d, mask;
  std::vector<int> i1, i2;  // argmax positions of the pools
  std::array<double, kClassCount> prob{};
};

// out[o][t] = b[o] + sum_c sum_k w[o][c][k] in[c][t + k], then ReLU.
inline void conv_relu(const double* w, const double* b, const std::vector<double>& in, int in_ch, int in_len,
                      int out_ch, int k, std::vector<double>& out) {
  const int len = in_len - k + 1;
  out.assign(static_cast<std::size_t>(out_ch * len), 0.0);
  for (int o = 0; o < out_ch; ++o) {
    double* y = out.data() + o * len;
    std::fill(y, y + len, b[o]);
    for (int c = 0; c < in_ch; ++c)
      for (int j = 0; j < k; ++j) {
        const double wv = w[(o * in_ch + c) * k + j];
        const double* xs = in.data() + c * in_len + j;
        for (int t = 0; t < len; ++t) y[t] += wv * xs[t];
      }
    for (int t = 0; t < len; ++t) y[t] = std::max(0.0, y[t]);
  }
}

inline void maxpool2(const std::vector<double>& in, int ch, int in_len, std::vector<double>& out,
                     std::vector<int>& idx) {
  const int len = in_len / 2;
  out.resize(static_cast<std::size_t>(ch * len));
  idx.resize(out.size());
  for (int c = 0; c < ch; ++c)
    for (int t = 0; t < len; ++t) {
      const int a = c * in_len + 2 * t;
      const int best = in[static_cast<std::size_t>(a + 1)] > in[static_cast<std::size_t>(a)] ? a + 1 : a;
      out[static_cast<std::size_t>(c * len + t)] = in[static_cast<std::size_t>(best)];
      idx[static_cast<std::size_t>(c * len + t)] = best;
    }
}

/// Forward pass. A non-null rng enables dropout (inverted scaling).
inline void forward(const CnnModel& m, const std::vector<double>& x, Activations& act, Rng* rng) {
  const auto& p = m.params;
  const auto& cfg = m.cfg;
  conv_relu(p.data(), p.data() + m.off_b1(), x, m.bands, m.frames, cfg.conv1_filters, cfg.kernel, act.a1);
  maxpool2(act.a1, cfg.conv1_filters, m.t1(), act.p1, act.i1);
  conv_relu(p.data() + m.off_w2(), p.data() + m.off_b2(), act.p1, cfg.conv1_filters, m.p1(), cfg.conv2_filters,
            cfg.kernel, act.a2);
  maxpool2(act.a2, cfg.conv2_filters, m.t2(), act.p2, act.i2);
  act.d = act.p2;
  act.mask.assign(act.d.size(), 1.0);
  if (rng != nullptr && cfg.dropout > 0.0) {
    const double keep = 1.0 - cfg.dropout;
    for (std::size_t i = 0; i < act.d.size(); ++i) {
      act.mask[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
      act.d[i] *= act.mask[i];
    }
  }
  const int n = m.flat();
  std::array<double, kClassCount> z{};
  for (int j = 0; j < kClassCount; ++j) {
    double s = p[m.off_bd() + static_cast<std::size_t>(j)];
    const double* w = p.data() + m.off_wd() + static_cast<std::size_t>(j * n);
    for (int i = 0; i < n; ++i) s += w[i] * act.d[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(j)] = s;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (int j = 0; j < kClassCount; ++j) sum += (act.prob[static_cast<std::size_t>(j)] = std::exp(z[static_cast<std::size_t>(j)] - zmax));
  for (double& v : act.prob) v /= sum;
}

/// Accumulates d(cross-entropy)/d(params) into `grad`; returns the loss.
inline double backward(const CnnModel& m, const std::vector<double>& x, const Activations& act, int label,
                       std::vector<double>& grad) {
  const auto& p = m.params;
  const auto& cfg = m.cfg;
  const int n = m.flat();
  std::array<double, kClassCount> dz{};
  for (int j = 0; j < kClassCount; ++j)
    dz[static_cast<std::size_t>(j)] = act.prob[static_cast<std::size_t>(j)] - (j == label ? 1.0 : 0.0);

  std::vector<double> dd(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < kClassCount; ++j) {
    const double g = dz[static_cast<std::size_t>(j)];
    grad[m.off_bd() + static_cast<std::size_t>(j)] += g;
    double* gw = grad.data() + m.off_wd() + static_cast<std::size_t>(j * n);
    const double* w = p.data() + m.off_wd() + static_cast<std::size_t>(j * n);
    for (int i = 0; i < n; ++i) {
      gw[i] += g * act.d[static_cast<std::size_t>(i)];
      dd[static_cast<std::size_t>(i)] += w[i] * g;
    }
  }

  // through dropout and the second pool / ReLU
  std::vector<double> da2(act.a2.size(), 0.0);
  for (std::size_t i = 0; i < dd.size(); ++i) {
    const auto at = static_cast<std::size_t>(act.i2[i]);
    if (act.a2[at] > 0.0) da2[at] += dd[i] * act.mask[i];
  }
  const int f1 = cfg.conv1_filters, f2 = cfg.conv2_filters, k = cfg.kernel;
  const int l2 = m.t2(), lp1 = m.p1();
  std::vector<double> dp1(act.p1.size(), 0.0);
  for (int o = 0; o < f2; ++o) {
    const double* g = da2.data() + o * l2;
    double gb = 0.0;
    for (int t = 0; t < l2; ++t) gb += g[t];
    grad[m.off_b2() + static_cast<std::size_t>(o)] += gb;
    for (int c = 0; c < f1; ++c)
      for (int j = 0; j < k; ++j) {
        const std::size_t wi = m.off_w2() + static_cast<std::size_t>((o * f1 + c) * k + j);
        const double* in = act.p1.data() + c * lp1 + j;
        double* din = dp1.data() + c * lp1 + j;
        double s = 0.0;
        for (int t = 0; t < l2; ++t) {
          s += g[t] * in[t];
          din[t] += p[wi] * g[t];
        }
        grad[wi] += s;
      }
  }

  std::vector<double> da1(act.a1.size(), 0.0);
  for (std::size_t i = 0; i < dp1.size(); ++i) {
    const auto at = static_cast<std::size_t>(act.i1[i]);
    if (act.a1[at] > 0.0) da1[at] += dp1[i];
  }
  const int l1 = m.t1();
  for (int o = 0; o < f1; ++o) {
    const double* g = da1.data() + o * l1;
    double gb = 0.0;
    for (int t = 0; t < l1; ++t) gb += g[t];
    grad[m.off_b1() + static_cast<std::size_t>(o)] += gb;
    for (int c = 0; c < m.bands; ++c)
      for (int j = 0; j < k; ++j) {
        const double* in = x.data() + c * m.frames + j;
        double s = 0.0;
        for (int t = 0; t < l1; ++t) s += g[t] * in[t];
        grad[static_cast<std::size_t>((o * m.bands + c) * k + j)] += s;
      }
  }
  return -std::log(std::max(act.prob[static_cast<std::size_t>(label)], 1e-300));
}

}  // namespace detail

/// Class probabilities of one window (no dropout). Sums to 1.
inline std::array<double, kClassCount> probabilities(const CnnModel& m, const features::FrameMatrix& map) {
  detail::Activations act;
  detail::forward(m, model_input(m, map), act, nullptr);
  return act.prob;
}

inline int predict_class(const CnnModel& m, const features::FrameMatrix& map) {
  const auto p = probabilities(m, map);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

/// Cross-entropy and its gradient for one window without dropout.
inline double loss_and_gradient(const CnnModel& m, const features::FrameMatrix& map, int label,
                                std::vector<double>& grad) {
  const auto x = model_input(m, map);
  detail::Activations act;
  detail::forward(m, x, act, nullptr);
  grad.assign(m.params.size(), 0.0);
  return detail::backward(m, x, act, label, grad);
}

/// Architecture with seeded He-uniform initial weights and identity input scaling.
inline CnnModel init_cnn(int bands, int frames, const CnnConfig& cfg, std::uint64_t seed) {
  require(bands >= 1 && frames >= min_frames(cfg), ErrorKind::InvalidInput,
          "window too short for the network (needs at least " + std::to_string(min_frames(cfg)) + " frames)");
  require(cfg.kernel >= 1 && cfg.conv1_filters >= 1 && cfg.conv2_filters >= 1, ErrorKind::InvalidInput,
          "invalid network shape");
  CnnModel m;
  m.cfg = cfg;
  m.bands = bands;
  m.frames = frames;
  m.band_mean.assign(static_cast<std::size_t>(bands), 0.0);
  m.band_scale.assign(static_cast<std::size_t>(bands), 1.0);
  m.train_seed = seed;
  m.params.assign(m.param_count(), 0.0);
  Rng rng(derive_seed(seed, "cnn-init"));
  auto fill = [&](std::size_t from, std::size_t to, double fan_in) {
    const double lim = std::sqrt(6.0 / fan_in);
    for (std::size_t i = from; i < to; ++i) m.params[i] = rng.uniform(-lim, lim);
  };
  fill(0, m.off_b1(), bands * cfg.kernel);
  fill(m.off_w2(), m.off_b2(), cfg.conv1_filters * cfg.kernel);
  fill(m.off_wd(), m.off_bd(), 0.5 * (m.flat() + kClassCount));
  return m;
}

/// Trains on window maps (all of one shape) with labels in {0, 1, 2}.
/// Deterministic given the seed.
inline CnnModel train_cnn(const std::vector<features::FrameMatrix>& maps, const std::vector<int>& labels,
                          const CnnConfig& cfg, std::uint64_t seed) {
  require(!maps.empty() && maps.size() == labels.size(), ErrorKind::InvalidDataset, "no training windows");
  std::array<int, kClassCount> counts{};
  for (int l : labels) {
    require(l >= 0 && l < kClassCount, ErrorKind::InvalidDataset, "label outside the three classes");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < kClassCount; ++c)
    require(counts[static_cast<std::size_t>(c)] >= 2, ErrorKind::InvalidDataset,
            std::string("need at least 2 examples of class ") + kClassNames[static_cast<std::size_t>(c)]);
  const auto bands = static_cast<int>(maps.front().cols());
  const auto frames = static_cast<int>(maps.front().rows());
  for (const auto& mp : maps)
    require(mp.cols() == bands && mp.rows() == frames, ErrorKind::InvalidDataset, "window maps differ in shape");

  auto m = init_cnn(bands, frames, cfg, seed);
  // per-band standardization from the training frames
  for (int c = 0; c < bands; ++c) {
    double s = 0.0, ss = 0.0, n = 0.0;
    for (const auto& mp : maps)
      for (int t = 0; t < frames; ++t) {
        s += mp(t, c);
        ss += mp(t, c) * mp(t, c);
        n += 1.0;
      }
    const double mean = s / n;
    const double sd = std::sqrt(std::max(0.0, ss / n - mean * mean));
    m.band_mean[static_cast<std::size_t>(c)] = mean;
    m.band_scale[static_cast<std::size_t>(c)] = sd > 1e-9 ? 1.0 / sd : 0.0;
  }
  std::vector<std::vector<double>> inputs;
  inputs.reserve(maps.size());
  for (const auto& mp : maps) inputs.push_back(model_input(m, mp));

  const std::size_t np = m.params.size();
  std::vector<double> grad(np), mom(np, 0.0), vel(np, 0.0);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;
  std::vector<std::size_t> order(maps.size());
  detail::Activations act;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "cnn-epoch", static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        detail::forward(m, inputs[order[b]], act, &rng);
        detail::backward(m, inputs[order[b]], act, labels[order[b]], grad);
      }
      ++step;
      const double scale = 1.0 / static_cast<double>(end - start);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t i = 0; i < np; ++i) {
        const double g = grad[i] * scale;
        mom[i] = b1 * mom[i] + (1.0 - b1) * g;
        vel[i] = b2 * vel[i] + (1.0 - b2) * g * g;
        m.params[i] -= cfg.learning_rate * (mom[i] / c1) / (std::sqrt(vel[i] / c2) + eps);
      }
    }
  }
  return m;
}

}  // namespace spiro::tidal
