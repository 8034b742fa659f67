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

#include "pfpl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fft.hpp"
#include "pfpl/error.hpp"
#include "pfpl/log.hpp"

namespace pfpl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_pair(const Waveform& y, const Waveform& y_hat, const char* what) {
  require(y.size() == y_hat.size(), std::string(what) + " needs equal lengths, got " + std::to_string(y.size()) +
                                        " and " + std::to_string(y_hat.size()));
  require(y.sample_rate() == y_hat.sample_rate(), std::string(what) + " needs equal sample rates");
  require(!y.empty(), std::string(what) + " needs non-empty signals");
}

// 0.5 * (1 - cos(2 pi n / (len + 1))), n = 1..len: a Hann window without zero end points.
std::vector<double> open_hann(std::size_t len) {
  std::vector<double> w(len);
  for (std::size_t n = 0; n < len; ++n) {
    w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n + 1) / static_cast<double>(len + 1)));
  }
  return w;
}

// Windowed frames of a signal; a signal shorter than one frame is zero padded.
std::vector<std::vector<double>> windowed_frames(std::span<const double> x, const FrameSettings& fs,
                                                 const std::vector<double>& window) {
  const std::size_t count = x.size() < fs.length ? 1 : (x.size() - fs.length) / fs.hop + 1;
  std::vector<std::vector<double>> frames(count, std::vector<double>(fs.length, 0.0));
  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t start = f * fs.hop;
    for (std::size_t i = 0; i < fs.length && start + i < x.size(); ++i) frames[f][i] = x[start + i] * window[i];
  }
  return frames;
}

double energy(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- LPC

std::vector<double> autocorrelation(const std::vector<double>& x, std::size_t order) {
  std::vector<double> r(order + 1, 0.0);
  for (std::size_t k = 0; k <= order; ++k) {
    for (std::size_t i = 0; i + k < x.size(); ++i) r[k] += x[i] * x[i + k];
  }
  return r;
}

// Levinson-Durbin recursion; returns [1, -a_1, ..., -a_p] or empty when the
// prediction error collapses.
std::vector<double> lpc(const std::vector<double>& r) {
  const std::size_t p = r.size() - 1;
  std::vector<double> a(p, 0.0), prev(p, 0.0);
  double err = r[0];
  for (std::size_t i = 0; i < p; ++i) {
    if (!(err > 0.0)) return {};
    prev = a;
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) acc += prev[j] * r[i - j];
    const double k = (r[i + 1] - acc) / err;
    a[i] = k;
    for (std::size_t j = 0; j < i; ++j) a[j] = prev[j] - k * prev[i - 1 - j];
    err *= 1.0 - k * k;
  }
  std::vector<double> out(p + 1);
  out[0] = 1.0;
  for (std::size_t i = 0; i < p; ++i) out[i + 1] = -a[i];
  return out;
}

double toeplitz_form(const std::vector<double>& a, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) s += a[i] * r[i > j ? i - j : j - i] * a[j];
  }
  return s;
}

// ---------------------------------------------------------------- WSS tables

constexpr std::size_t kCriticalBands = 25;
constexpr double kCenterFreq[kCriticalBands] = {
    50.0,     120.0,    190.0,    260.0,    330.0,    400.0,    470.0,    540.0,    617.372,
    703.378,  798.717,  904.128,  1020.38,  1148.30,  1288.72,  1442.54,  1610.70,  1794.16,
    1993.93,  2211.08,  2446.71,  2701.97,  2978.04,  3276.17,  3597.63};
constexpr double kBandwidth[kCriticalBands] = {
    70.0,    70.0,    70.0,    70.0,    70.0,    70.0,    70.0,    77.3724, 86.0056,
    95.3398, 105.411, 116.256, 127.914, 140.423, 153.823, 168.154, 183.457, 199.776,
    217.153, 235.631, 255.255, 276.072, 298.126, 321.465, 346.136};
constexpr double kWssKmax = 20.0;
constexpr double kWssKlocmax = 1.0;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> band_energies_db(const std::vector<double>& frame, std::size_t nfft,
                                     const std::vector<std::vector<double>>& filters) {
  std::vector<double> padded(nfft, 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());
  std::vector<std::complex<double>> spec(nfft / 2 + 1);
  detail::RealFft(nfft).forward(padded.data(), spec.data());
  const std::size_t half = nfft / 2;
  std::vector<double> e(kCriticalBands);
  for (std::size_t b = 0; b < kCriticalBands; ++b) {
    double s = 0.0;
    for (std::size_t j = 0; j < half; ++j) s += std::norm(spec[j]) * filters[b][j];
    e[b] = 10.0 * std::log10(std::max(s, 1e-10));
  }
  return e;
}

std::vector<double> local_peaks(const std::vector<double>& e, const std::vector<double>& slope) {
  const std::size_t nb = kCriticalBands;
  std::vector<double> peak(nb - 1);
  for (std::size_t i = 0; i + 1 < nb; ++i) {
    if (slope[i] > 0.0) {
      std::size_t n = i;
      while (n + 1 < nb && slope[n] > 0.0) ++n;
      peak[i] = e[n];
    } else {
      std::ptrdiff_t n = static_cast<std::ptrdiff_t>(i);
      while (n >= 0 && slope[static_cast<std::size_t>(n)] <= 0.0) --n;
      peak[i] = e[static_cast<std::size_t>(n + 1)];
    }
  }
  return peak;
}

// ---------------------------------------------------------------- STOI

constexpr int kStoiRate = 10000;
constexpr std::size_t kStoiFrame = 256;
constexpr std::size_t kStoiFft = 512;
constexpr std::size_t kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr std::size_t kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;

// Kaiser-windowed sinc with 60 dB rejection, normalized to unit sum.
std::vector<double> stoi_resample_filter(std::size_t p, std::size_t q) {
  const double stopband = 1.0 / (2.0 * static_cast<double>(std::max(p, q)));
  const double roll_off = stopband / 10.0;
  const double rejection_db = 60.0;
  const double len = std::ceil((rejection_db - 8.0) / (28.714 * roll_off));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const auto half = static_cast<std::ptrdiff_t>(len);
  const std::size_t m = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> h(m);
  const double i0 = std::cyl_bessel_i(0.0, beta);
  double sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double t = static_cast<double>(static_cast<std::ptrdiff_t>(k) - half);
    const double arg = 2.0 * stopband * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = 2.0 * static_cast<double>(k) / static_cast<double>(m - 1) - 1.0;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0;
    h[k] = 2.0 * static_cast<double>(p) * stopband * sinc * kaiser;
    sum += h[k];
  }
  for (double& v : h) v = v / sum * static_cast<double>(p);
  return h;
}

std::vector<double> stoi_resample(std::span<const double> x, int from) {
  if (from == kStoiRate) return {x.begin(), x.end()};
  const auto g = std::gcd(kStoiRate, from);
  const auto p = static_cast<std::size_t>(kStoiRate / g), q = static_cast<std::size_t>(from / g);
  return resample_poly_filter(x, p, q, stoi_resample_filter(p, q));
}

std::vector<std::vector<double>> third_octave_matrix() {
  const std::size_t nbins = kStoiFft / 2 + 1;
  std::vector<double> f(nbins);
  for (std::size_t i = 0; i < nbins; ++i) f[i] = static_cast<double>(kStoiRate) * static_cast<double>(i) / kStoiFft;
  auto nearest = [&](double target) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nbins; ++i) {
      const double d = (f[i] - target) * (f[i] - target);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  std::vector<std::vector<double>> obm(kStoiBands, std::vector<double>(nbins, 0.0));
  for (std::size_t k = 0; k < kStoiBands; ++k) {
    const double kk = static_cast<double>(k);
    const std::size_t lo = nearest(kStoiMinFreq * std::pow(2.0, (2.0 * kk - 1.0) / 6.0));
    const std::size_t hi = nearest(kStoiMinFreq * std::pow(2.0, (2.0 * kk + 1.0) / 6.0));
    for (std::size_t i = lo; i < hi; ++i) obm[k][i] = 1.0;
  }
  return obm;
}

// Frames start at 0, hop, ... while start < len - frame (strictly).
std::size_t stoi_frame_count(std::size_t len) {
  if (len <= kStoiFrame) return 0;
  return (len - kStoiFrame + kStoiFrame / 2 - 1) / (kStoiFrame / 2);
}

std::pair<std::vector<double>, std::vector<double>> remove_silent_frames(const std::vector<double>& x,
                                                                         const std::vector<double>& y) {
  const std::size_t hop = kStoiFrame / 2;
  const auto w = open_hann(kStoiFrame);
  const std::size_t count = stoi_frame_count(x.size());
  std::vector<double> energies(count);
  for (std::size_t f = 0; f < count; ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < kStoiFrame; ++i) {
      const double v = w[i] * x[f * hop + i];
      s += v * v;
    }
    energies[f] = 20.0 * std::log10(std::sqrt(s) + kEps);
  }
  std::vector<std::size_t> kept;
  if (count > 0) {
    const double top = *std::max_element(energies.begin(), energies.end());
    for (std::size_t f = 0; f < count; ++f) {
      if (top - kStoiDynRange - energies[f] < 0.0) kept.push_back(f);
    }
  }
  if (kept.empty()) return {};
  const std::size_t out_len = (kept.size() - 1) * hop + kStoiFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const std::size_t src = kept[j] * hop, dst = j * hop;
    for (std::size_t i = 0; i < kStoiFrame; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  return {std::move(xs), std::move(ys)};
}

// bands x frames third-octave magnitudes.
std::vector<std::vector<double>> third_octave_envelopes(const std::vector<double>& x,
                                                        const std::vector<std::vector<double>>& obm) {
  const std::size_t hop = kStoiFrame / 2;
  const auto w = open_hann(kStoiFrame);
  const std::size_t count = stoi_frame_count(x.size());
  detail::RealFft fft(kStoiFft);
  std::vector<double> frame(kStoiFft);
  std::vector<std::complex<double>> spec(kStoiFft / 2 + 1);
  std::vector<std::vector<double>> out(kStoiBands, std::vector<double>(count));
  for (std::size_t f = 0; f < count; ++f) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t i = 0; i < kStoiFrame; ++i) frame[i] = w[i] * x[f * hop + i];
    fft.forward(frame.data(), spec.data());
    for (std::size_t b = 0; b < kStoiBands; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < spec.size(); ++i) s += obm[b][i] * std::norm(spec[i]);
      out[b][f] = std::sqrt(s);
    }
  }
  return out;
}

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, end);
}

std::string format_value(double v) { return format_optional(v); }

}  // namespace

FrameSettings FrameSettings::for_rate(int sample_rate) {
  FrameSettings fs;
  fs.length = static_cast<std::size_t>(std::lround(0.032 * sample_rate));
  fs.hop = fs.length / 4;
  return fs;
}

double seg_snr(const Waveform& y, const Waveform& y_hat) {
  check_pair(y, y_hat, "seg_snr");
  const auto fs = FrameSettings::for_rate(y.sample_rate());
  const auto window = open_hann(fs.length);
  std::vector<double> err(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) err[i] = y[i] - y_hat[i];
  const auto clean = windowed_frames(y.view(), fs, window);
  const auto noise = windowed_frames(err, fs, window);
  std::vector<double> ce(clean.size());
  for (std::size_t f = 0; f < clean.size(); ++f) ce[f] = energy(clean[f]);
  const double top = *std::max_element(ce.begin(), ce.end());
  if (!(top > 0.0)) throw NoActiveFrames("seg_snr: the clean signal has no active frames");
  const double floor = top * 1e-4;  // 40 dB below the loudest frame
  double total = 0.0;
  std::size_t active = 0;
  for (std::size_t f = 0; f < clean.size(); ++f) {
    if (ce[f] < floor) continue;
    const double ne = energy(noise[f]);
    const double snr = ne > 0.0 ? 10.0 * std::log10(ce[f] / ne) : 35.0;
    total += clip(snr, -10.0, 35.0);
    ++active;
  }
  if (active == 0) throw NoActiveFrames("seg_snr: no active frames");
  return total / static_cast<double>(active);
}

std::size_t llr_order(int sample_rate) { return sample_rate >= 10000 ? 16 : 10; }

double llr(const Waveform& y, const Waveform& y_hat) {
  check_pair(y, y_hat, "llr");
  const auto fs = FrameSettings::for_rate(y.sample_rate());
  const auto window = open_hann(fs.length);
  const std::size_t order = llr_order(y.sample_rate());
  const auto clean = windowed_frames(y.view(), fs, window);
  const auto proc = windowed_frames(y_hat.view(), fs, window);
  std::vector<double> d;
  for (std::size_t f = 0; f < clean.size(); ++f) {
    const auto rc = autocorrelation(clean[f], order);
    const auto rp = autocorrelation(proc[f], order);
    if (!(rc[0] > 0.0) || !(rp[0] > 0.0)) continue;
    const auto ac = lpc(rc);
    const auto ap = lpc(rp);
    if (ac.empty() || ap.empty()) continue;
    const double num = toeplitz_form(ap, rc);
    const double den = toeplitz_form(ac, rc);
    if (!(num > 0.0) || !(den > 0.0)) continue;
    const double v = std::log(num / den);
    if (!std::isfinite(v)) continue;
    d.push_back(clip(v, 0.0, 2.0));
  }
  if (d.empty()) throw NoActiveFrames("llr: every frame is degenerate");
  return median(std::move(d));
}

double wss(const Waveform& y, const Waveform& y_hat) {
  check_pair(y, y_hat, "wss");
  const auto fs = FrameSettings::for_rate(y.sample_rate());
  const auto window = open_hann(fs.length);
  const std::size_t nfft = next_pow2(2 * fs.length);
  const std::size_t half = nfft / 2;
  const double max_freq = y.sample_rate() / 2.0;
  const double min_factor = std::exp(-30.0 / (2.0 * 2.303));
  std::vector<std::vector<double>> filters(kCriticalBands, std::vector<double>(half));
  for (std::size_t b = 0; b < kCriticalBands; ++b) {
    const double f0 = kCenterFreq[b] / max_freq * static_cast<double>(half);
    const double bw = kBandwidth[b] / max_freq * static_cast<double>(half);
    const double norm = std::log(kBandwidth[0]) - std::log(kBandwidth[b]);
    for (std::size_t j = 0; j < half; ++j) {
      const double u = (static_cast<double>(j) - std::floor(f0)) / bw;
      const double v = std::exp(-11.0 * u * u + norm);
      filters[b][j] = v > min_factor ? v : 0.0;
    }
  }
  const auto clean = windowed_frames(y.view(), fs, window);
  const auto proc = windowed_frames(y_hat.view(), fs, window);
  std::vector<double> d(clean.size());
  for (std::size_t f = 0; f < clean.size(); ++f) {
    const auto ec = band_energies_db(clean[f], nfft, filters);
    const auto ep = band_energies_db(proc[f], nfft, filters);
    std::vector<double> sc(kCriticalBands - 1), sp(kCriticalBands - 1);
    for (std::size_t b = 0; b + 1 < kCriticalBands; ++b) {
      sc[b] = ec[b + 1] - ec[b];
      sp[b] = ep[b + 1] - ep[b];
    }
    const auto pc = local_peaks(ec, sc);
    const auto pp = local_peaks(ep, sp);
    const double max_c = *std::max_element(ec.begin(), ec.end());
    const double max_p = *std::max_element(ep.begin(), ep.end());
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b + 1 < kCriticalBands; ++b) {
      const double wc = kWssKmax / (kWssKmax + max_c - ec[b]) * kWssKlocmax / (kWssKlocmax + pc[b] - ec[b]);
      const double wp = kWssKmax / (kWssKmax + max_p - ep[b]) * kWssKlocmax / (kWssKlocmax + pp[b] - ep[b]);
      const double w = 0.5 * (wc + wp);
      const double diff = sc[b] - sp[b];
      num += w * diff * diff;
      den += w;
    }
    d[f] = num / den;
  }
  std::sort(d.begin(), d.end());
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.95 * static_cast<double>(d.size()))));
  d.resize(keep);
  return median(std::move(d));
}

double stoi(const Waveform& y, const Waveform& y_hat) {
  check_pair(y, y_hat, "stoi");
  const auto x10 = stoi_resample(y.view(), y.sample_rate());
  const auto y10 = stoi_resample(y_hat.view(), y_hat.sample_rate());
  const auto [xs, ys] = remove_silent_frames(x10, y10);
  static const auto obm = third_octave_matrix();
  const auto xb = third_octave_envelopes(xs, obm);
  const auto yb = third_octave_envelopes(ys, obm);
  const std::size_t frames = xb[0].size();
  if (frames < kStoiSegment) {
    throw InvalidInput("stoi needs at least " + std::to_string(kStoiSegment) +
                       " non-silent analysis frames (about 384 ms), got " + std::to_string(frames));
  }
  const double clip_value = std::pow(10.0, -kStoiBeta / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> xv(kStoiSegment), yv(kStoiSegment);
  for (std::size_t m = kStoiSegment; m <= frames; ++m) {
    for (std::size_t b = 0; b < kStoiBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (std::size_t i = 0; i < kStoiSegment; ++i) {
        xv[i] = xb[b][m - kStoiSegment + i];
        yv[i] = yb[b][m - kStoiSegment + i];
        nx += xv[i] * xv[i];
        ny += yv[i] * yv[i];
      }
      const double scale = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < kStoiSegment; ++i) {
        yv[i] = std::min(yv[i] * scale, xv[i] * (1.0 + clip_value));
        mx += xv[i];
        my += yv[i];
      }
      mx /= kStoiSegment;
      my /= kStoiSegment;
      double sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < kStoiSegment; ++i) {
        xv[i] -= mx;
        yv[i] -= my;
        sxx += xv[i] * xv[i];
        syy += yv[i] * yv[i];
      }
      const double dx = std::sqrt(sxx) + kEps, dy = std::sqrt(syy) + kEps;
      for (std::size_t i = 0; i < kStoiSegment; ++i) sxy += (xv[i] / dx) * (yv[i] / dy);
      total += sxy;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

CompositeScores composite(double pesq, double llr_value, double wss_value, double seg_snr_value) {
  CompositeScores c;
  c.csig = clip(3.093 - 1.029 * llr_value + 0.603 * pesq - 0.009 * wss_value, 1.0, 5.0);
  c.cbak = clip(1.634 + 0.478 * pesq - 0.007 * wss_value + 0.063 * seg_snr_value, 1.0, 5.0);
  c.covl = clip(1.594 + 0.805 * pesq - 0.512 * llr_value - 0.007 * wss_value, 1.0, 5.0);
  return c;
}

MetricScores evaluate_pair(const Waveform& y, const Waveform& y_hat, const PesqAdapter* adapter) {
  check_pair(y, y_hat, "evaluate_pair");
  MetricScores s;
  s.stoi = stoi(y, y_hat);
  s.seg_snr = seg_snr(y, y_hat);
  s.llr = llr(y, y_hat);
  s.wss = wss(y, y_hat);
  if (adapter != nullptr) {
    s.pesq = adapter->score(y, y_hat);
    if (s.pesq) {
      const auto c = composite(*s.pesq, s.llr, s.wss, s.seg_snr);
      s.csig = c.csig;
      s.cbak = c.cbak;
      s.covl = c.covl;
    } else {
      log_warning("PESQ unavailable: " + adapter->last_error());
    }
  }
  return s;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,pesq,stoi,csig,cbak,covl,seg_snr,llr,wss\n";
  for (const auto& r : rows) {
    const auto& s = r.scores;
    out << r.id << ',' << format_optional(s.pesq) << ',' << format_value(s.stoi) << ','
        << format_optional(s.csig) << ',' << format_optional(s.cbak) << ',' << format_optional(s.covl) << ','
        << format_value(s.seg_snr) << ',' << format_value(s.llr) << ',' << format_value(s.wss) << '\n';
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "id,pesq,stoi,csig,cbak,covl,seg_snr,llr,wss") {
    throw FormatError(path.string() + " does not have the metrics CSV header");
  }
  auto parse = [&](const std::string& cell) -> std::optional<double> {
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw FormatError(path.string() + ": malformed number '" + cell + "'");
    }
    return v;
  };
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) throw FormatError(path.string() + ": expected 9 columns in '" + line + "'");
    MetricRow r;
    r.id = cells[0];
    r.scores.pesq = parse(cells[1]);
    r.scores.stoi = parse(cells[2]).value_or(0.0);
    r.scores.csig = parse(cells[3]);
    r.scores.cbak = parse(cells[4]);
    r.scores.covl = parse(cells[5]);
    r.scores.seg_snr = parse(cells[6]).value_or(0.0);
    r.scores.llr = parse(cells[7]).value_or(0.0);
    r.scores.wss = parse(cells[8]).value_or(0.0);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace pfpl
