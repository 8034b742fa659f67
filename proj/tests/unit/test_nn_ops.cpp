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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "pfpl/error.hpp"
#include "pfpl/nn_ops.hpp"

using namespace pfpl;
using namespace pfpl::nn;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Direct definition: y[o,r,c] = b[o] + sum w[o,i,p,q] x[i, r*sh+p-pt, c*sw+q-pl].
Tensor naive_conv(const Tensor& x, const std::vector<double>& w, std::size_t c_out, const std::vector<double>& b,
                  const Conv2dGeometry& g) {
  const std::size_t c_in = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t oh = (h + g.pad_top + g.pad_bottom - g.kernel_h) / g.stride_h + 1;
  const std::size_t ow = (wd + g.pad_left + g.pad_right - g.kernel_w) / g.stride_w + 1;
  Tensor y({c_out, oh, ow});
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c) {
        double s = b.empty() ? 0.0 : b[o];
        for (std::size_t i = 0; i < c_in; ++i) {
          for (std::size_t p = 0; p < g.kernel_h; ++p) {
            for (std::size_t q = 0; q < g.kernel_w; ++q) {
              const long iy = static_cast<long>(r * g.stride_h + p) - static_cast<long>(g.pad_top);
              const long ix = static_cast<long>(c * g.stride_w + q) - static_cast<long>(g.pad_left);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              s += w[((o * c_in + i) * g.kernel_h + p) * g.kernel_w + q] *
                   x[(i * h + static_cast<std::size_t>(iy)) * wd + static_cast<std::size_t>(ix)];
            }
          }
        }
        y[(o * oh + r) * ow + c] = s;
      }
    }
  }
  return y;
}

}  // namespace

TEST_SUITE("nn_ops") {

TEST_CASE("conv2d matches the direct definition") {
  Rng rng(1);
  const auto g = Conv2dGeometry::centered(5, 3, 2, 2);
  const auto x = random_tensor(rng, {3, 17, 11});
  const auto w = testing::normal_vector(rng, 4 * 3 * 5 * 3);
  const auto b = testing::normal_vector(rng, 4);
  const auto y = conv2d_forward(x, w, 4, b, g);
  const auto ref = naive_conv(x, w, 4, b, g);
  REQUIRE(y.shape() == ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("conv2d backward matches finite differences") {
  Rng rng(2);
  const auto g = Conv2dGeometry::centered(3, 3, 2, 1);
  const auto x = random_tensor(rng, {2, 7, 6});
  auto w = testing::normal_vector(rng, 3 * 2 * 9);
  auto b = testing::normal_vector(rng, 3);
  const auto probe = random_tensor(rng, conv2d_forward(x, w, 3, b, g).shape());
  std::vector<double> dw(w.size(), 0.0), db(3, 0.0);
  const auto dx = conv2d_backward(x, probe, w, g, dw, db);

  auto loss_x = [&](std::span<const double> v) {
    return dot(conv2d_forward(Tensor(x.shape(), {v.begin(), v.end()}), w, 3, b, g).values(), probe.values());
  };
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(testing::check_gradient(loss_x, {x.values().begin(), x.values().end()}, dx.values(), all, 1e-6).max_rel_error < 1e-7);

  auto loss_w = [&](std::span<const double> v) {
    return dot(conv2d_forward(x, v, 3, b, g).values(), probe.values());
  };
  std::vector<std::size_t> wi(w.size());
  std::iota(wi.begin(), wi.end(), 0);
  CHECK(testing::check_gradient(loss_w, w, dw, wi, 1e-6).max_rel_error < 1e-7);

  auto loss_b = [&](std::span<const double> v) {
    return dot(conv2d_forward(x, w, 3, v, g).values(), probe.values());
  };
  std::vector<std::size_t> bi = {0, 1, 2};
  CHECK(testing::check_gradient(loss_b, b, db, bi, 1e-6).max_rel_error < 1e-7);
}

TEST_CASE("transposed conv is the adjoint of conv") {
  Rng rng(3);
  const auto g = Conv2dGeometry::centered(5, 3, 2, 2);
  const std::size_t c_in = 3, c_out = 4;
  const auto x = random_tensor(rng, {c_in, 13, 9});
  const auto w = testing::normal_vector(rng, c_out * c_in * 15);
  const auto y = conv2d_forward(x, w, c_out, {}, g);
  const auto probe = random_tensor(rng, y.shape());
  // Transposed weight layout (in, out*K): the conv's output channels are its inputs.
  const auto back = conv_transpose2d_forward(probe, w, c_in, {}, g, 13, 9);
  REQUIRE(back.shape() == x.shape());
  CHECK(dot(y.values(), probe.values()) == doctest::Approx(dot(x.values(), back.values())).epsilon(1e-12));
}

TEST_CASE("transposed conv backward matches finite differences") {
  Rng rng(4);
  const auto g = Conv2dGeometry::centered(3, 5, 2, 2);
  const auto x = random_tensor(rng, {2, 4, 5});
  auto w = testing::normal_vector(rng, 2 * 3 * 15);
  auto b = testing::normal_vector(rng, 3);
  const auto y = conv_transpose2d_forward(x, w, 3, b, g, 8, 9);
  const auto probe = random_tensor(rng, y.shape());
  std::vector<double> dw(w.size(), 0.0), db(3, 0.0);
  const auto dx = conv_transpose2d_backward(x, probe, w, g, dw, db);
  auto fx = [&](std::span<const double> v) {
    return dot(conv_transpose2d_forward(Tensor(x.shape(), {v.begin(), v.end()}), w, 3, b, g, 8, 9).values(),
               probe.values());
  };
  std::vector<std::size_t> xi(x.size());
  std::iota(xi.begin(), xi.end(), 0);
  CHECK(testing::check_gradient(fx, {x.values().begin(), x.values().end()}, dx.values(), xi, 1e-6).max_rel_error < 1e-7);
  auto fw = [&](std::span<const double> v) {
    return dot(conv_transpose2d_forward(x, v, 3, b, g, 8, 9).values(), probe.values());
  };
  std::vector<std::size_t> wi(w.size());
  std::iota(wi.begin(), wi.end(), 0);
  CHECK(testing::check_gradient(fw, w, dw, wi, 1e-6).max_rel_error < 1e-7);
  double total = 0.0;
  for (double v : probe.values()) total += v;
  CHECK(db[0] + db[1] + db[2] == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("instance norm normalizes each channel and has a correct backward") {
  Rng rng(5);
  const auto x = random_tensor(rng, {3, 4, 6});
  auto gamma = testing::normal_vector(rng, 3);
  auto beta = testing::normal_vector(rng, 3);
  NormCache cache;
  const auto y = instance_norm_forward(x, std::vector<double>{1, 1, 1}, std::vector<double>{0, 0, 0}, 0.0, cache);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < 24; ++i) m += y[c * 24 + i];
    m /= 24;
    for (std::size_t i = 0; i < 24; ++i) v += (y[c * 24 + i] - m) * (y[c * 24 + i] - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 24 == doctest::Approx(1.0).epsilon(1e-10));
  }
  const auto probe = random_tensor(rng, x.shape());
  NormCache c2;
  instance_norm_forward(x, gamma, beta, 1e-5, c2);
  std::vector<double> dg(3, 0.0), dbeta(3, 0.0);
  const auto dx = instance_norm_backward(probe, gamma, c2, dg, dbeta);
  auto f = [&](std::span<const double> v) {
    NormCache c;
    return dot(instance_norm_forward(Tensor(x.shape(), {v.begin(), v.end()}), gamma, beta, 1e-5, c).values(),
               probe.values());
  };
  std::vector<std::size_t> xi(x.size());
  std::iota(xi.begin(), xi.end(), 0);
  CHECK(testing::check_gradient(f, {x.values().begin(), x.values().end()}, dx.values(), xi, 1e-5).max_rel_error < 1e-6);
  auto fg = [&](std::span<const double> v) {
    NormCache c;
    return dot(instance_norm_forward(x, v, beta, 1e-5, c).values(), probe.values());
  };
  std::vector<std::size_t> gi = {0, 1, 2};
  CHECK(testing::check_gradient(fg, gamma, dg, gi, 1e-6).max_rel_error < 1e-7);
}

TEST_CASE("group norm with one group normalizes the whole tensor") {
  Rng rng(6);
  const auto x = random_tensor(rng, {4, 1, 9});
  auto gamma = testing::normal_vector(rng, 4);
  auto beta = testing::normal_vector(rng, 4);
  NormCache cache;
  const auto y = group_norm_forward(x, std::vector<double>(4, 1.0), std::vector<double>(4, 0.0), 0.0, cache);
  double m = 0.0, v = 0.0;
  for (double s : y.values()) m += s;
  m /= static_cast<double>(y.size());
  for (double s : y.values()) v += (s - m) * (s - m);
  CHECK(std::abs(m) < 1e-12);
  CHECK(v / static_cast<double>(y.size()) == doctest::Approx(1.0).epsilon(1e-10));

  const auto probe = random_tensor(rng, x.shape());
  NormCache c2;
  group_norm_forward(x, gamma, beta, 1e-5, c2);
  std::vector<double> dg(4, 0.0), dbeta(4, 0.0);
  const auto dx = group_norm_backward(probe, gamma, c2, dg, dbeta);
  auto f = [&](std::span<const double> s) {
    NormCache c;
    return dot(group_norm_forward(Tensor(x.shape(), {s.begin(), s.end()}), gamma, beta, 1e-5, c).values(),
               probe.values());
  };
  std::vector<std::size_t> xi(x.size());
  std::iota(xi.begin(), xi.end(), 0);
  CHECK(testing::check_gradient(f, {x.values().begin(), x.values().end()}, dx.values(), xi, 1e-6).max_rel_error < 1e-6);
}

TEST_CASE("leaky relu and channel concat") {
  Tensor x({2, 1, 2}, {-2.0, 3.0, 0.5, -1.0});
  leaky_relu_inplace(x, 0.1);
  CHECK(x[0] == doctest::Approx(-0.2));
  CHECK(x[1] == 3.0);
  Tensor dy({2, 1, 2}, {1.0, 1.0, 1.0, 1.0});
  leaky_relu_backward_inplace(dy, x, 0.1);
  CHECK(dy[0] == doctest::Approx(0.1));
  CHECK(dy[1] == 1.0);
  CHECK(dy[3] == doctest::Approx(0.1));

  Tensor a({1, 1, 2}, {1.0, 2.0}), b({2, 1, 2}, {3.0, 4.0, 5.0, 6.0});
  const auto c = concat_channels(a, b);
  CHECK(c.dim(0) == 3);
  const auto [l, r] = split_channels(c, 1);
  CHECK(l.values()[1] == 2.0);
  CHECK(r.values()[3] == 6.0);
  CHECK_THROWS_AS(concat_channels(a, Tensor({1, 1, 3})), ShapeError);
}

}
