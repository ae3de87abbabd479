#include "bohmscat/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "bohmscat/error.hpp"

namespace bohmscat {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace

Fft3::Fft3(int n) : n_(n) {
  require(n > 0, "Fft3: n must be positive");
  std::size_t total = static_cast<std::size_t>(n) * n * n;
  cvec a(total), b(total);
  std::lock_guard<std::mutex> lock(planner_mutex());
  // ESTIMATE keeps plan choice independent of timing, so results are
  // reproducible run to run.
  fwd_ = fftw_plan_dft_3d(n, n, n, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD,
                          FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_3d(n, n, n, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD,
                          FFTW_ESTIMATE);
  fwd_inplace_ = fftw_plan_dft_3d(n, n, n, as_fftw(a.data()), as_fftw(a.data()),
                                  FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_inplace_ = fftw_plan_dft_3d(n, n, n, as_fftw(a.data()), as_fftw(a.data()),
                                  FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_ || !fwd_inplace_ || !bwd_inplace_) {
    fail(ErrorKind::invalid_argument, "Fft3: FFTW planning failed");
  }
}

Fft3::~Fft3() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  for (void* p : {fwd_, bwd_, fwd_inplace_, bwd_inplace_}) {
    if (p) fftw_destroy_plan(static_cast<fftw_plan>(p));
  }
}

void Fft3::forward(const cplx* in, cplx* out) const {
  auto plan = static_cast<fftw_plan>(in == out ? fwd_inplace_ : fwd_);
  fftw_execute_dft(plan, as_fftw(in), as_fftw(out));
}

void Fft3::backward(const cplx* in, cplx* out) const {
  auto plan = static_cast<fftw_plan>(in == out ? bwd_inplace_ : bwd_);
  fftw_execute_dft(plan, as_fftw(in), as_fftw(out));
}

}  // namespace bohmscat
