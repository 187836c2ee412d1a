#pragma once

// Unitary DFT helpers over contiguous complex buffers. Forward uses the
// e^{-2 pi i k n / N} kernel; both directions are scaled by 1/sqrt(N).

#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "pmsim/hilbert.hpp"

namespace pmsim::detail {

class UnitaryFft {
 public:
  explicit UnitaryFft(std::size_t n) : n_(n), scale_(1.0 / std::sqrt(static_cast<double>(n))) {
    fft_.SetFlag(Eigen::FFT<double>::Unscaled);
    in_.resize(n);
    out_.resize(n);
  }

  void forward(const cplx* src, cplx* dst) {
    in_.assign(src, src + n_);
    fft_.fwd(out_, in_);
    for (std::size_t i = 0; i < n_; ++i) dst[i] = out_[i] * scale_;
  }

  void inverse(const cplx* src, cplx* dst) {
    in_.assign(src, src + n_);
    fft_.inv(out_, in_);
    for (std::size_t i = 0; i < n_; ++i) dst[i] = out_[i] * scale_;
  }

  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  double scale_;
  Eigen::FFT<double> fft_;
  std::vector<cplx> in_;
  std::vector<cplx> out_;
};

}  // namespace pmsim::detail
