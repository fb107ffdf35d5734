#include "qolcr/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <mutex>

namespace qolcr::dsp {

namespace {

using cplx = std::complex<double>;

// fftw planner calls are not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

// In-place transform of `data` through an fftw_malloc'd buffer so that the
// plan (and hence the rounding) never depends on caller alignment.
void transform(std::vector<cplx>& data, int sign) {
  const auto n = data.size();
  if (n == 0) return;
  std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(n));
  std::memcpy(buf.get(), data.data(), n * sizeof(cplx));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf.get(), buf.get(), sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::memcpy(static_cast<void*>(data.data()), buf.get(), n * sizeof(cplx));
}

std::vector<cplx> padded(std::span<const double> x, std::size_t n) {
  std::vector<cplx> out(n, cplx{0.0, 0.0});
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

}  // namespace

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cplx> fft(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  transform(out, FFTW_FORWARD);
  return out;
}

std::vector<cplx> ifft(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  transform(out, FFTW_BACKWARD);
  return out;
}

std::vector<cplx> analytic_signal(std::span<const double> x) {
  if (x.empty()) return {};
  const auto n = next_pow2(2 * x.size());
  auto spec = padded(x, n);
  transform(spec, FFTW_FORWARD);
  for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
  transform(spec, FFTW_BACKWARD);
  std::vector<cplx> out(spec.begin(), spec.begin() + static_cast<std::ptrdiff_t>(x.size()));
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return std::vector<double>(x.size(), 0.0);
  const auto full = x.size() + h.size() - 1;
  const auto n = next_pow2(full);
  auto xs = padded(x, n);
  auto hs = padded(h, n);
  transform(xs, FFTW_FORWARD);
  transform(hs, FFTW_FORWARD);
  for (std::size_t k = 0; k < n; ++k) xs[k] *= hs[k];
  transform(xs, FFTW_BACKWARD);
  const auto offset = (h.size() - 1) / 2;
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = xs[i + offset].real() * scale;
  return out;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const auto n = next_pow2(2 * x.size());
  auto spec = padded(x, n);
  transform(spec, FFTW_FORWARD);
  for (auto& v : spec) v = std::norm(v);
  transform(spec, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> out(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) out[k] = spec[k].real() * scale;
  return out;
}

}  // namespace qolcr::dsp
