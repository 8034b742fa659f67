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

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace pfpl::detail {
namespace {

struct PlanPair {
  fftw_plan r2c;
  fftw_plan c2r;
};

// FFTW's planner is not thread-safe; plans are created once per size under
// this lock and never destroyed. Execution with the new-array interface is.
PlanPair plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> cplx(n / 2 + 1);
  const int len = static_cast<int>(n);
  PlanPair p{
      fftw_plan_dft_r2c_1d(len, real.data(), cplx.data(), FFTW_ESTIMATE | FFTW_UNALIGNED),
      fftw_plan_dft_c2r_1d(len, cplx.data(), real.data(),
                           FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT)};
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  const auto p = plans_for(n);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

void RealFft::forward(const double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
  // c2r overwrites its input
  std::vector<std::complex<double>> scratch(in, in + n_ / 2 + 1);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(scratch.data()),
                       out);
}

}  // namespace pfpl::detail
