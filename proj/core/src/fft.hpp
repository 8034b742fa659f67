// Copyright 2026 The pfpl-se Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>

namespace pfpl::detail {

/// Unnormalized real FFT of length n backed by a cached FFTW plan.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  /// n reals -> n/2+1 complex bins.
  void forward(const double* in, std::complex<double>* out) const;
  /// n/2+1 complex bins -> n reals, scaled by n relative to the true inverse.
  void inverse(const std::complex<double>* in, double* out) const;

 private:
  std::size_t n_;
  void* r2c_;
  void* c2r_;
};

}  // namespace pfpl::detail
