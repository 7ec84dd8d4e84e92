#pragma once

// Sliding weighted sums c_i = sum_k g_k u_{i+k} (u zero past its end) through
// a real FFT of fixed size. The weights are transformed once; each call costs
// one forward and one inverse transform.

#include <nonlocal/error.hpp>

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <type_traits>
#include <vector>

namespace nonlocal {

namespace detail {
// FFTW's planner is not thread safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct FftwPlanDestroy {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

template <class T>
using fftw_buffer = std::unique_ptr<T[], FftwFree>;
using fftw_plan_ptr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

template <class T>
fftw_buffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return fftw_buffer<T>(p);
}

// Smallest 2^a 3^b 5^c 7^d >= n.
inline std::size_t smooth_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p7 = 1; p7 < best; p7 *= 7)
    for (std::size_t p5 = p7; p5 < best; p5 *= 5)
      for (std::size_t p3 = p5; p3 < best; p3 *= 3) {
        std::size_t v = p3;
        while (v < n) v *= 2;
        best = std::min(best, v);
      }
  return best;
}
}  // namespace detail

class SlidingCorrelator {
public:
  // Largest transform length accepted.
  static constexpr std::size_t kMaxSize = std::size_t{1} << 28;

  static bool feasible(std::size_t weights, std::size_t outputs, std::size_t inputs) {
    const std::size_t limit = kMaxSize;
    if (weights > limit || outputs > limit || inputs > limit) return false;
    return std::max(outputs + weights - 1, inputs) <= limit;
  }

  // `outputs` results from `inputs` samples; sums reach up to index
  // outputs - 1 + weights.size() - 1.
  SlidingCorrelator(std::span<const double> weights, std::size_t inputs, std::size_t outputs)
      : n_in_(inputs), n_out_(outputs) {
    if (weights.empty() || outputs == 0) throw ValidationError("correlator: empty weights or outputs");
    if (!feasible(weights.size(), outputs, inputs))
      throw ConfigError("correlator: transform size too large");
    size_ = detail::smooth_size(std::max(outputs + weights.size() - 1, inputs));
    const std::size_t half = size_ / 2 + 1;
    real_ = detail::fftw_alloc<double>(size_);
    spec_ = detail::fftw_alloc<fftw_complex>(half);
    kernel_.resize(half);
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const int n = static_cast<int>(size_);
      forward_.reset(fftw_plan_dft_r2c_1d(n, real_.get(), spec_.get(), FFTW_ESTIMATE));
      inverse_.reset(fftw_plan_dft_c2r_1d(n, spec_.get(), real_.get(), FFTW_ESTIMATE));
    }
    if (!forward_ || !inverse_) throw ConfigError("correlator: FFTW planning failed");

    // Circular correlation kernel: g[0] = w_0, g[size - k] = w_k.
    std::fill_n(real_.get(), size_, 0.0);
    real_[0] = weights[0];
    for (std::size_t k = 1; k < weights.size(); ++k) real_[size_ - k] = weights[k];
    fftw_execute(forward_.get());
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t i = 0; i < half; ++i)
      kernel_[i] = std::complex<double>(spec_[i][0], spec_[i][1]) * scale;
  }

  SlidingCorrelator(const SlidingCorrelator&) = delete;
  SlidingCorrelator& operator=(const SlidingCorrelator&) = delete;
  SlidingCorrelator(SlidingCorrelator&&) noexcept = default;
  SlidingCorrelator& operator=(SlidingCorrelator&&) noexcept = default;

  std::size_t transform_size() const { return size_; }

  // out[i] = sum_k w_k u[i + k] with u[m] = 0 for m >= inputs.
  void operator()(std::span<const double> u, std::span<double> out) {
    if (u.size() != n_in_ || out.size() != n_out_) throw ValidationError("correlator: size mismatch");
    std::copy(u.begin(), u.end(), real_.get());
    std::fill(real_.get() + n_in_, real_.get() + size_, 0.0);
    fftw_execute(forward_.get());
    const std::size_t half = size_ / 2 + 1;
    for (std::size_t i = 0; i < half; ++i) {
      const std::complex<double> z = std::complex<double>(spec_[i][0], spec_[i][1]) * kernel_[i];
      spec_[i][0] = z.real();
      spec_[i][1] = z.imag();
    }
    fftw_execute(inverse_.get());
    std::copy_n(real_.get(), n_out_, out.begin());
  }

private:
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  std::size_t size_ = 0;
  detail::fftw_buffer<double> real_;
  detail::fftw_buffer<fftw_complex> spec_;
  std::vector<std::complex<double>> kernel_;
  detail::fftw_plan_ptr forward_;
  detail::fftw_plan_ptr inverse_;
};

}  // namespace nonlocal
