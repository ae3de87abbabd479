#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace bohmscat {

using cplx = std::complex<double>;

template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(alignment));
  }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using cvec = std::vector<cplx, AlignedAllocator<cplx>>;
using rvec = std::vector<double, AlignedAllocator<double>>;

// Unnormalized 3-D DFT on an n^3 row-major array. Plans are built once per
// instance; execution is reentrant, so each worker thread owns one instance.
class Fft3 {
 public:
  explicit Fft3(int n);
  ~Fft3();
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;

  int n() const { return n_; }

  // out[m] = sum_j in[j] exp(-2 pi i m.j / n). In-place allowed.
  void forward(const cplx* in, cplx* out) const;
  // out[j] = sum_m in[m] exp(+2 pi i m.j / n), no 1/n^3.
  void backward(const cplx* in, cplx* out) const;

 private:
  int n_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  void* fwd_inplace_ = nullptr;
  void* bwd_inplace_ = nullptr;
};

}  // namespace bohmscat
