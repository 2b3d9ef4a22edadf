#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "spiro/error.hpp"
#include "spiro/signal/fft.hpp"
#include "spiro/signal/recording.hpp"

namespace spiro::signal {

// ---------------------------------------------------------------------------
// Kaiser-window FIR low-pass
// ---------------------------------------------------------------------------

/// Low-pass design parameters for envelope smoothing.
///
/// `transition_width_normalized` is in cycles/sample (so at most 0.5), and
/// `order` is the minimum order from Kaiser's empirical formula
///   order = ceil((A - 7.95) / (14.36 * width)).
/// The cutoff sits in the middle of the transition band.
struct FirSpec {
  double transition_width_normalized = 0.0;
  double stopband_attenuation_db = 10.0;
  int order = 1;
  int sample_rate_hz = 16000;
  double passband_edge_hz = 10.0;

  double transition_width_hz() const noexcept {
    return transition_width_normalized * static_cast<double>(sample_rate_hz);
  }
  double cutoff_hz() const noexcept { return passband_edge_hz + 0.5 * transition_width_hz(); }
  double stopband_edge_hz() const noexcept { return passband_edge_hz + transition_width_hz(); }
  std::size_t tap_count() const noexcept { return static_cast<std::size_t>(order) + 1; }
};

inline int kaiser_order(double attenuation_db, double width_normalized) {
  require(width_normalized > 0.0 && width_normalized < 0.5, ErrorKind::InvalidInput,
          "transition width must lie in (0, 0.5) cycles/sample");
  require(attenuation_db > 0.0, ErrorKind::InvalidInput, "attenuation must be positive");
  const double n = (attenuation_db - 7.95) / (14.36 * width_normalized);
  return std::max(1, static_cast<int>(std::ceil(n)));
}

inline double kaiser_beta(double attenuation_db) noexcept {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0)
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  return 0.0;
}

/// Zeroth-order modified Bessel function of the first kind (power series).
inline double bessel_i0(double x) noexcept {
  double sum = 1.0, term = 1.0;
  const double q = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

inline std::vector<double> kaiser_window(std::size_t length, double beta) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double m = static_cast<double>(length - 1);
  const double denom = bessel_i0(beta);
  for (std::size_t i = 0; i < length; ++i) {
    const double r = 2.0 * static_cast<double>(i) / m - 1.0;
    w[i] = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

/// Windowed-sinc low-pass taps, normalized to unit DC gain.
inline std::vector<double> lowpass_taps(std::size_t length, double cutoff_normalized, double beta) {
  require(length >= 1, ErrorKind::InvalidInput, "filter needs at least one tap");
  auto h = kaiser_window(length, beta);
  const double center = 0.5 * static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) - center;
    const double arg = 2.0 * cutoff_normalized * t;
    const double sinc = (t == 0.0) ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    h[i] *= 2.0 * cutoff_normalized * sinc;
  }
  double sum = 0.0;
  for (double v : h) sum += v;
  for (double& v : h) v /= sum;
  return h;
}

/// Envelope smoothing filter: transition width 2/n (n = sample rate) with a
/// 10 dB stopband specification.
inline FirSpec design_kaiser_fir(int sample_rate_hz, double passband_edge_hz = 10.0,
                                 double attenuation_db = 10.0) {
  require(sample_rate_hz > 0, ErrorKind::InvalidInput, "sample rate must be positive");
  FirSpec spec;
  spec.sample_rate_hz = sample_rate_hz;
  spec.transition_width_normalized = 2.0 / static_cast<double>(sample_rate_hz);
  spec.stopband_attenuation_db = attenuation_db;
  spec.passband_edge_hz = passband_edge_hz;
  spec.order = kaiser_order(attenuation_db, spec.transition_width_normalized);
  require(spec.cutoff_hz() < 0.5 * sample_rate_hz, ErrorKind::InvalidInput,
          "cutoff above Nyquist");
  return spec;
}

inline std::vector<double> fir_taps(const FirSpec& spec) {
  return lowpass_taps(spec.tap_count(), spec.cutoff_hz() / static_cast<double>(spec.sample_rate_hz),
                      kaiser_beta(spec.stopband_attenuation_db));
}

/// Magnitude response of an FIR at `freq_normalized` (cycles/sample), by direct
/// evaluation of the DTFT.
inline double fir_gain(std::span<const double> taps, double freq_normalized) {
  std::complex<double> acc{};
  for (std::size_t k = 0; k < taps.size(); ++k)
    acc += taps[k] * std::polar(1.0, -2.0 * std::numbers::pi * freq_normalized * static_cast<double>(k));
  return std::abs(acc);
}

namespace detail {

// Odd extension used by the forward-backward filters.
inline std::vector<double> odd_extend(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) out.push_back(2.0 * x[0] - x[i]);
  out.insert(out.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) out.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
  return out;
}

// Mirror about the edge samples without repeating them.
inline std::vector<double> even_extend(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> out;
  out.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) out.push_back(x[i]);
  out.insert(out.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) out.push_back(x[n - 1 - i]);
  return out;
}

// Causal FIR filtering (first |x| samples of the full convolution).
inline std::vector<double> fir_causal(std::span<const double> x, std::span<const double> h) {
  auto y = fft_convolve(x, h);
  y.resize(x.size());
  return y;
}

}  // namespace detail

/// Forward-backward FIR filtering. The input is padded by even reflection so
/// a noisy first or last sample does not bias the edges.
inline std::vector<double> fir_filtfilt(std::span<const double> x, std::span<const double> h) {
  require(x.size() > h.size(), ErrorKind::SignalTooShort,
          "filter length " + std::to_string(h.size()) + " >= signal length " + std::to_string(x.size()));
  const std::size_t pad = std::min(x.size() - 1, 3 * h.size());
  auto y = detail::fir_causal(detail::even_extend(x, pad), h);
  std::reverse(y.begin(), y.end());
  y = detail::fir_causal(y, h);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad),
          y.begin() + static_cast<std::ptrdiff_t>(pad + x.size())};
}

/// Zero-phase Kaiser low-pass of an envelope; output clamped at 0.
inline Envelope smooth_fir(const Envelope& env, const FirSpec& spec) {
  require(!env.values.empty(), ErrorKind::InvalidInput, "envelope is empty");
  require(env.sample_rate_hz == spec.sample_rate_hz, ErrorKind::InvalidInput,
          "envelope rate does not match filter design rate");
  require(static_cast<std::size_t>(spec.order) < env.values.size(), ErrorKind::SignalTooShort,
          "filter order " + std::to_string(spec.order) + " >= envelope length " +
              std::to_string(env.values.size()));
  const auto taps = fir_taps(spec);
  Envelope out{fir_filtfilt(env.values, taps), env.sample_rate_hz};
  for (double& v : out.values) v = std::max(0.0, v);
  return out;
}

// ---------------------------------------------------------------------------
// Butterworth band-pass (second-order sections)
// ---------------------------------------------------------------------------

/// One biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};
};

using Sos = std::vector<Biquad>;

/// Digital Butterworth band-pass from an analog prototype of order
/// `prototype_order` (the band-pass transfer function has twice that order).
inline Sos butterworth_bandpass(int prototype_order, double low_hz, double high_hz, int sample_rate_hz) {
  using C = std::complex<double>;
  const double fs = static_cast<double>(sample_rate_hz);
  require(prototype_order >= 1, ErrorKind::InvalidInput, "order must be positive");
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < 0.5 * fs, ErrorKind::InvalidInput,
          "band edges must satisfy 0 < low < high < Nyquist");
  const double w1 = 2.0 * fs * std::tan(std::numbers::pi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(std::numbers::pi * high_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  const int n = prototype_order;

  auto bilinear = [fs](C s) { return (2.0 * fs + s) / (2.0 * fs - s); };
  auto section_from = [](C p1, C p2) {
    // Zeros at z = +1 and z = -1.
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    const C sum = p1 + p2;
    const C prod = p1 * p2;
    q.a = {-sum.real(), prod.real()};
    return q;
  };

  Sos sos;
  for (int k = 0; k < n; ++k) {
    const C p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n));
    if (p.imag() < -1e-12) continue;  // conjugate handled with its partner
    const C pb = p * bw;
    const C disc = std::sqrt(pb * pb - 4.0 * w0sq);
    const C s1 = 0.5 * (pb + disc);
    const C s2 = 0.5 * (pb - disc);
    const C z1 = bilinear(s1);
    const C z2 = bilinear(s2);
    if (std::abs(p.imag()) <= 1e-12) {
      sos.push_back(section_from(z1, z2));
    } else {
      sos.push_back(section_from(z1, std::conj(z1)));
      sos.push_back(section_from(z2, std::conj(z2)));
    }
  }
  // Unit gain at the geometric band center.
  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  const C z = std::polar(1.0, wc);
  C h = 1.0;
  for (const auto& q : sos) {
    const C zi = 1.0 / z;
    h *= (q.b[0] + q.b[1] * zi + q.b[2] * zi * zi) / (1.0 + q.a[0] * zi + q.a[1] * zi * zi);
  }
  const double g = 1.0 / std::abs(h);
  const double per = std::pow(g, 1.0 / static_cast<double>(sos.size()));
  for (auto& q : sos)
    for (double& v : q.b) v *= per;
  return sos;
}

/// |H(e^{j 2 pi f})| of a cascade, f in cycles/sample.
inline double sos_gain(const Sos& sos, double freq_normalized) {
  const std::complex<double> zi = std::polar(1.0, -2.0 * std::numbers::pi * freq_normalized);
  std::complex<double> h = 1.0;
  for (const auto& q : sos)
    h *= (q.b[0] + q.b[1] * zi + q.b[2] * zi * zi) / (1.0 + q.a[0] * zi + q.a[1] * zi * zi);
  return std::abs(h);
}

namespace detail {

// Steady-state initial conditions (transposed direct form II) for a unit step,
// one pair per section, scaled for the cascade.
inline std::vector<std::array<double, 2>> sos_zi(const Sos& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& q = sos[i];
    const double g = (q.b[0] + q.b[1] + q.b[2]) / (1.0 + q.a[0] + q.a[1]);
    const double z2 = q.b[2] - q.a[1] * g;
    const double z1 = q.b[1] - q.a[0] * g + z2;
    zi[i] = {scale * z1, scale * z2};
    scale *= g;
  }
  return zi;
}

inline void sos_filter_inplace(const Sos& sos, std::vector<double>& x) {
  if (x.empty()) return;
  auto zi = sos_zi(sos);
  const double x0 = x.front();
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    double z1 = zi[s][0] * x0, z2 = zi[s][1] * x0;
    for (double& v : x) {
      const double in = v;
      const double out = q.b[0] * in + z1;
      z1 = q.b[1] * in - q.a[0] * out + z2;
      z2 = q.b[2] * in - q.a[1] * out;
      v = out;
    }
  }
}

}  // namespace detail

inline std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x) {
  const std::size_t want = 3 * (2 * sos.size() + 1);
  require(x.size() > want, ErrorKind::SignalTooShort, "signal too short for zero-phase IIR");
  const std::size_t pad = std::min(x.size() - 1, want);
  auto y = detail::odd_extend(x, pad);
  detail::sos_filter_inplace(sos, y);
  std::reverse(y.begin(), y.end());
  detail::sos_filter_inplace(sos, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad),
          y.begin() + static_cast<std::ptrdiff_t>(pad + x.size())};
}

inline constexpr double kTidalLowHz = 50.0;
inline constexpr double kTidalHighHz = 500.0;
/// Order of each pass of the tidal band-pass (prototype order 2).
inline constexpr int kTidalBandpassOrder = 4;

/// Zero-phase 50-500 Hz Butterworth band-pass used ahead of the tidal
/// classifier.
inline AudioRecording bandpass_tidal(const AudioRecording& rec) {
  rec.validate();
  require(rec.sample_rate_hz > 1000, ErrorKind::InvalidInput,
          "band-pass needs a sample rate above 1000 Hz (upper edge must be below Nyquist)");
  const auto sos = butterworth_bandpass(kTidalBandpassOrder / 2, kTidalLowHz, kTidalHighHz, rec.sample_rate_hz);
  AudioRecording out = rec;
  out.samples = sos_filtfilt(sos, rec.samples);
  return out;
}

// ---------------------------------------------------------------------------
// Smoothing and resampling
// ---------------------------------------------------------------------------

/// Centered moving mean. Near the edges the window shrinks to the samples
/// that exist instead of zero padding.
inline std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  require(window >= 1, ErrorKind::InvalidInput, "window must be positive");
  require(window <= x.size(), ErrorKind::InvalidInput, "window longer than sequence");
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window - 1 - left;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n - 1, i + right);
    out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Linear-phase Kaiser low-pass applied centered (zero phase) with even
/// reflection at the edges: unit passband gain up to `pass_hz`, at least
/// `attenuation_db` from `stop_hz`.
inline std::vector<double> lowpass_zero_phase(std::span<const double> x, int sample_rate_hz, double pass_hz,
                                              double stop_hz, double attenuation_db = 60.0) {
  require(0.0 < pass_hz && pass_hz < stop_hz && stop_hz <= 0.5 * sample_rate_hz, ErrorKind::InvalidInput,
          "need 0 < passband < stopband <= Nyquist");
  require(!x.empty(), ErrorKind::InvalidInput, "empty signal");
  const double fs = static_cast<double>(sample_rate_hz);
  int order = kaiser_order(attenuation_db, (stop_hz - pass_hz) / fs);
  if (order % 2 != 0) ++order;  // odd tap count keeps an integer group delay
  const auto taps = lowpass_taps(static_cast<std::size_t>(order) + 1, 0.5 * (pass_hz + stop_hz) / fs,
                                 kaiser_beta(attenuation_db));
  const std::size_t half = static_cast<std::size_t>(order / 2);
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * half);
  for (std::size_t i = half; i >= 1; --i) ext.push_back(x[std::min(i, n - 1)]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= half; ++i) ext.push_back(x[n - 1 - std::min(i, n - 1)]);
  const auto full = fft_convolve(ext, taps);
  return {full.begin() + static_cast<std::ptrdiff_t>(2 * half), full.begin() + static_cast<std::ptrdiff_t>(2 * half + n)};
}

/// Anti-alias low-pass (zero-phase Kaiser FIR, 60 dB, passband to 0.4 x
/// target rate, stopband from the target Nyquist) then keep every k-th sample.
inline AudioRecording decimate(const AudioRecording& rec, int target_rate_hz) {
  rec.validate();
  require(target_rate_hz > 0 && target_rate_hz <= rec.sample_rate_hz &&
              rec.sample_rate_hz % target_rate_hz == 0,
          ErrorKind::InvalidInput, "target rate must divide the source rate");
  const int factor = rec.sample_rate_hz / target_rate_hz;
  if (factor == 1) return rec;
  const auto smooth = lowpass_zero_phase(rec.samples, rec.sample_rate_hz, 0.4 * target_rate_hz, 0.5 * target_rate_hz);
  AudioRecording out;
  out.sample_rate_hz = target_rate_hz;
  out.source_id = rec.source_id;
  for (std::size_t i = 0; i < smooth.size(); i += static_cast<std::size_t>(factor)) out.samples.push_back(smooth[i]);
  return out;
}

}  // namespace spiro::signal
