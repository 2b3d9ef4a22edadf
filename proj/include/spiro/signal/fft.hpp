#pragma once

// FFT front end backed by FFTW. Plans are created with FFTW_ESTIMATE |
// FFTW_UNALIGNED (deterministic, usable with any std::vector storage) and
// cached per thread; plan creation is serialized because the FFTW planner is
// not re-entrant. fftw_execute_dft* on an existing plan is thread-safe.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace spiro::signal {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

constexpr std::size_t next_power_of_two(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Smallest length >= n whose only prime factors are 2, 3 and 5.
inline std::size_t next_fast_length(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

namespace detail {

enum class PlanKind { Forward, Backward, RealToComplex, ComplexToReal };

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class PlanCache {
 public:
  ~PlanCache() {
    std::lock_guard lock(planner_mutex());
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(PlanKind kind, std::size_t n) {
    const auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::lock_guard lock(planner_mutex());
    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    // Scratch buffers only exist for planning; FFTW_ESTIMATE does not touch them.
    std::vector<Complex> c(n + 1);
    std::vector<double> r(n + 2);
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::Forward: plan = fftw_plan_dft_1d(len, cp, cp, FFTW_FORWARD, flags); break;
      case PlanKind::Backward: plan = fftw_plan_dft_1d(len, cp, cp, FFTW_BACKWARD, flags); break;
      case PlanKind::RealToComplex: plan = fftw_plan_dft_r2c_1d(len, r.data(), cp, flags); break;
      case PlanKind::ComplexToReal: plan = fftw_plan_dft_c2r_1d(len, cp, r.data(), flags); break;
    }
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::map<std::pair<PlanKind, std::size_t>, fftw_plan> plans_;
};

inline fftw_plan plan_for(PlanKind kind, std::size_t n) {
  thread_local PlanCache cache;
  return cache.get(kind, n);
}

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Unscaled forward DFT of any length.
inline std::vector<Complex> fft(std::vector<Complex> a) {
  if (a.size() <= 1) return a;
  fftw_execute_dft(detail::plan_for(detail::PlanKind::Forward, a.size()), detail::as_fftw(a.data()),
                   detail::as_fftw(a.data()));
  return a;
}

/// Inverse DFT, scaled by 1/N.
inline std::vector<Complex> ifft(std::vector<Complex> a) {
  if (a.empty()) return a;
  if (a.size() > 1)
    fftw_execute_dft(detail::plan_for(detail::PlanKind::Backward, a.size()), detail::as_fftw(a.data()),
                     detail::as_fftw(a.data()));
  const double scale = 1.0 / static_cast<double>(a.size());
  for (auto& v : a) v *= scale;
  return a;
}

/// Half spectrum (n/2 + 1 bins) of a real signal zero-padded or truncated to n.
inline std::vector<Complex> rfft(std::span<const double> x, std::size_t n = 0) {
  if (n == 0) n = x.size();
  std::vector<double> in(n, 0.0);
  std::copy_n(x.begin(), std::min(n, x.size()), in.begin());
  std::vector<Complex> out(n / 2 + 1);
  if (n == 1) {
    out[0] = in[0];
    return out;
  }
  fftw_execute_dft_r2c(detail::plan_for(detail::PlanKind::RealToComplex, n), in.data(),
                       detail::as_fftw(out.data()));
  return out;
}

/// Inverse of rfft for a length-n signal, scaled by 1/n.
inline std::vector<double> irfft(std::vector<Complex> half, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = half[0].real();
    return out;
  }
  half.resize(n / 2 + 1);
  fftw_execute_dft_c2r(detail::plan_for(detail::PlanKind::ComplexToReal, n), detail::as_fftw(half.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

/// Full (two-sided) spectrum of a real signal.
inline std::vector<Complex> fft_real(std::span<const double> x, std::size_t n = 0) {
  if (n == 0) n = x.size();
  auto half = rfft(x, n);
  std::vector<Complex> full(n);
  for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
  for (std::size_t k = half.size(); k < n; ++k) full[k] = std::conj(full[n - k]);
  return full;
}

/// Linear convolution via zero-padded FFT; output length |x| + |h| - 1.
inline std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t out = x.size() + h.size() - 1;
  const std::size_t n = next_fast_length(out);
  auto fx = rfft(x, n);
  const auto fh = rfft(h, n);
  for (std::size_t k = 0; k < fx.size(); ++k) fx[k] *= fh[k];
  auto y = irfft(std::move(fx), n);
  y.resize(out);
  return y;
}

}  // namespace spiro::signal
