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

// End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
// criterion and exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fixtures.hpp"
#include "pfpl/analysis.hpp"
#include "pfpl/checkpoint.hpp"
#include "pfpl/data_io.hpp"
#include "pfpl/dsp.hpp"
#include "pfpl/error.hpp"
#include "pfpl/losses.hpp"
#include "pfpl/metrics.hpp"
#include "pfpl/pesq_adapter.hpp"
#include "pfpl/random.hpp"
#include "pfpl/trainer.hpp"
#include "pfpl/wasserstein.hpp"

using namespace pfpl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { pass, fail, skip } kind = pass;
  std::string detail;
};

// Collects failed sub-checks and a short summary for the report line.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !ok;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome outcome() const {
    Outcome o;
    o.kind = failed_ ? Outcome::fail : Outcome::pass;
    o.detail = notes_;
    for (const auto& f : failures_) o.detail += " | " + f;
    return o;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Waveform wave(std::vector<double> v) { return Waveform(std::move(v), kDefaultSampleRate); }

bool same_params(const ParameterSet& a, const ParameterSet& b) {
  if (a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i) {
    if (a[i].name != b[i].name || a[i].shape != b[i].shape) return false;
    if (std::memcmp(a[i].values.data(), b[i].values.data(), a[i].values.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

// --- 1 -------------------------------------------------------------------

Outcome w1_matches_lp_oracle() {
  Checker c;
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + rng.below(8);
    const auto a = testing::normal_vector(rng, n), b = testing::normal_vector(rng, n, 2.0);
    const double err = std::abs(w1_1d(a, b) - w1_oracle(a, b, 1));
    worst = std::max(worst, err);
    c.expect(err <= 1e-9, "pair " + std::to_string(i) + " differs by " + fmt("%.3g", err));
  }
  c.note("max |w1 - lp| = " + fmt("%.2e", worst));
  return c.outcome();
}

// --- 2 -------------------------------------------------------------------

Outcome w1_metric_axioms() {
  Checker c;
  Rng rng(102);
  constexpr double eps = 1e-12;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(64);
    const auto a = testing::normal_vector(rng, n), b = testing::normal_vector(rng, n), z = testing::normal_vector(rng, n);
    const double ab = w1_1d(a, b), ba = w1_1d(b, a);
    const std::string tag = " (pair " + std::to_string(i) + ")";
    c.expect(ab >= 0.0, "negative distance" + tag);
    c.expect(w1_1d(a, a) == 0.0, "w1(a, a) != 0" + tag);
    c.expect(std::abs(ab - ba) <= eps, "asymmetric" + tag);
    c.expect(w1_1d(a, z) <= ab + w1_1d(b, z) + eps, "triangle inequality" + tag);

    const double t = rng.uniform(-5.0, 5.0);
    auto at = a, bt = b;
    for (auto& v : at) v += t;
    for (auto& v : bt) v += t;
    c.expect(std::abs(w1_1d(at, bt) - ab) <= eps * std::max(1.0, std::abs(t) + ab) * 10, "shift of both" + tag);
    c.expect(std::abs(w1_1d(at, a) - std::abs(t)) <= eps * std::max(1.0, std::abs(t)) * 10, "shift of one" + tag);

    const double s = rng.uniform(-4.0, 4.0);
    auto as = a, bs = b;
    for (auto& v : as) v *= s;
    for (auto& v : bs) v *= s;
    c.expect(std::abs(w1_1d(as, bs) - std::abs(s) * ab) <= eps * std::max(1.0, std::abs(s) * ab), "scaling" + tag);
  }
  c.note("1000 random triples");
  return c.outcome();
}

// --- 3 -------------------------------------------------------------------

Outcome stft_round_trip() {
  Checker c;
  Rng rng(103);
  const StftConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1000 + rng.below(47001);
    const auto w = testing::random_waveform(rng, n, 0.5);
    const auto back = istft(stft(w, cfg));
    if (back.size() != n) {
      c.expect(false, "length " + std::to_string(n) + " came back as " + std::to_string(back.size()));
      continue;
    }
    const double err = relative_l2_error(back.view(), w.view());
    worst = std::max(worst, err);
    c.expect(err < 1e-6, "length " + std::to_string(n) + " rel-L2 " + fmt("%.3g", err));
  }
  c.note("max rel-L2 = " + fmt("%.2e", worst));
  return c.outcome();
}

// --- 4 -------------------------------------------------------------------

Outcome pfpl_identities() {
  Checker c;
  Rng rng(104);
  LossSpec spec;
  spec.name = LossName::pfpl;
  spec.encoder = std::make_shared<PhoneticEncoder>(random_encoder(4));
  double worst_self = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 800 + rng.below(2400);
    const auto x = testing::random_waveform(rng, n, 0.3);
    const auto y = testing::random_waveform(rng, n, 0.3);
    const auto yh = testing::random_waveform(rng, n, 0.3);
    const double self = compute_loss(spec, x, y, y).total;
    worst_self = std::max(worst_self, std::abs(self));
    c.expect(std::abs(self) <= 1e-12, "pfpl(y, y) = " + fmt("%.3g", self));
    const auto v = compute_loss(spec, x, y, yh);
    c.expect(v.total >= v.components.at("mae_term"), "total below the mae term at pair " + std::to_string(i));
  }
  c.note("max |pfpl(y, y)| = " + fmt("%.1e", worst_self));
  return c.outcome();
}

// --- 5 -------------------------------------------------------------------

Outcome gradient_fidelity() {
  Checker c;
  Rng rng(105);
  // The default stand-in needs 465 samples; this variant fits 256.
  const auto enc = std::make_shared<PhoneticEncoder>(random_encoder(5, testing::short_stand_in(128)));
  std::vector<std::size_t> all(256);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (auto name : {LossName::pfpl, LossName::pfpl_w, LossName::wsdr}) {
    LossSpec spec;
    spec.name = name;
    if (spec.needs_encoder()) spec.encoder = enc;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = testing::random_waveform(rng, 256, 0.3);
      const auto y = testing::random_waveform(rng, 256, 0.3);
      const auto yh = testing::random_waveform(rng, 256, 0.3);
      std::vector<double> grad;
      LossOptions opts;
      opts.grad_y_hat = &grad;
      compute_loss(spec, x, y, yh, opts);
      auto f = [&](std::span<const double> v) {
        return compute_loss(spec, x, y, Waveform({v.begin(), v.end()}, kDefaultSampleRate)).total;
      };
      const double e = testing::check_gradient(f, yh.samples(), grad, all, 1e-7).max_rel_error;
      worst = std::max(worst, e);
      c.expect(e < 1e-3, to_string(name) + " trial " + std::to_string(trial) + " rel error " + fmt("%.3g", e));
    }
    c.note(to_string(name) + " " + fmt("%.1e", worst));
  }
  return c.outcome();
}

// --- 6 -------------------------------------------------------------------

Outcome wsdr_anchors() {
  Checker c;
  Rng rng(106);
  double worst = 0.0;
  const auto speech = testing::fixture_wav("speech_a.wav");
  const auto noisy = testing::fixture_wav("speech_a_noisy.wav");
  worst = std::abs(wsdr_loss(noisy, speech, speech) + 1.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng.below(512);
    const auto y = testing::random_waveform(rng, n);
    worst = std::max(worst, std::abs(wsdr_loss(testing::random_waveform(rng, n), y, y) + 1.0));
  }
  c.expect(worst <= 1e-6, "wsdr(y, y) deviates from -1 by " + fmt("%.3g", worst));

  // y=(1,0), x=(1,1), y_hat=(1,0.5): both energies are 1, so alpha = 1/2,
  // the speech cosine is 1/|(1,0.5)| and the residuals are parallel.
  const double expect = -(0.5 / std::sqrt(1.25) + 0.5);
  const double got = wsdr_loss(wave({1, 1}), wave({1, 0}), wave({1, 0.5}));
  c.expect(std::abs(got - expect) <= 1e-4, "triple gave " + fmt("%.6f", got));
  c.expect(std::abs(got + 0.9472) <= 1e-4, "triple is not -0.9472");
  c.note("|wsdr(y,y)+1| <= " + fmt("%.1e", worst) + ", triple " + fmt("%.5f", got));
  return c.outcome();
}

// --- 7 -------------------------------------------------------------------

struct OverfitSettings {
  std::size_t steps = 500;
  double lr = 3e-3;
  std::size_t samples = 8192;
};

double mean_pipeline_loss(const MaskEstimator& model, const LossSpec& loss, const StftConfig& stft,
                          const std::vector<WavePair>& pairs) {
  double s = 0.0;
  for (const auto& p : pairs) s += pipeline_loss(model, loss, stft, p.noisy, p.clean).total;
  return s / static_cast<double>(pairs.size());
}

Outcome overfit_smoke(const OverfitSettings& o) {
  Checker c;
  testing::TempDir dir("overfit");
  testing::write_fixture_corpus(dir / "data", {2, 1, 5.0, o.samples});
  const auto corpus = scan_corpus(dir / "data");

  TrainConfig cfg;
  cfg.loss.name = LossName::pfpl;
  cfg.loss.encoder = std::make_shared<PhoneticEncoder>(random_encoder(0));
  cfg.steps = o.steps;
  cfg.batch_size = 2;
  cfg.adam.lr = o.lr;
  cfg.seed = 7;
  cfg.crop = {o.samples, o.samples, PadPolicy::reflect};

  std::vector<WavePair> pairs;
  for (const auto& e : corpus.split(Split::train)) pairs.push_back(load_pair(corpus, e.id));

  auto model = build_model(ModelConfig::small10(), 0);
  const double initial = mean_pipeline_loss(model, cfg.loss, cfg.stft, pairs);
  OptimizerState state;
  Trainer(cfg, corpus).train(model, state);
  const double final_loss = mean_pipeline_loss(model, cfg.loss, cfg.stft, pairs);

  double in_snr = 0.0, out_snr = 0.0;
  for (const auto& p : pairs) {
    in_snr += seg_snr(p.clean, p.noisy);
    out_snr += seg_snr(p.clean, enhance(model, p.noisy, cfg.stft));
  }
  in_snr /= static_cast<double>(pairs.size());
  out_snr /= static_cast<double>(pairs.size());

  const double ratio = final_loss / initial;
  c.expect(ratio <= 0.10, "pfpl only fell to " + fmt("%.3f", ratio) + " of its initial value");
  c.expect(out_snr - in_snr >= 10.0, "segSNR gain " + fmt("%.2f", out_snr - in_snr) + " dB");
  c.note("pfpl " + fmt("%.4f", initial) + " -> " + fmt("%.4f", final_loss) + " (" + fmt("%.1f%%", 100 * ratio) +
         "), segSNR " + fmt("%.2f", in_snr) + " -> " + fmt("%.2f", out_snr) + " dB");
  return c.outcome();
}

// --- 8 -------------------------------------------------------------------

CompositeScores composite_oracle(double pesq, double llr_v, double wss_v, double snr) {
  auto clip = [](double v) { return std::clamp(v, 1.0, 5.0); };
  return {clip(3.093 - 1.029 * llr_v + 0.603 * pesq - 0.009 * wss_v),
          clip(1.634 + 0.478 * pesq - 0.007 * wss_v + 0.063 * snr),
          clip(1.594 + 0.805 * pesq - 0.512 * llr_v - 0.007 * wss_v)};
}

Outcome composite_checks() {
  Checker c;
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::abs(got - want) <= 1e-3, what + " = " + fmt("%.4f", got) + ", want " + fmt("%.4f", want));
  };
  const auto a = composite(2.0, 1.0, 50.0, 5.0);
  near(a.csig, 2.820, "csig");
  near(a.cbak, 2.555, "cbak");
  near(a.covl, 2.342, "covl");
  const auto b = composite(4.5, 0.0, 0.0, 35.0);
  near(b.csig, 5.0, "clipped csig");
  const auto d = composite(-0.5, 5.0, 200.0, -10.0);
  near(d.csig, 1.0, "floor csig");
  near(d.cbak, 1.0, "floor cbak");
  near(d.covl, 1.0, "floor covl");

  Rng rng(108);
  for (int i = 0; i < 2000; ++i) {
    const double p = rng.uniform(-0.5, 4.5), l = rng.uniform(0, 4), w = rng.uniform(0, 200), s = rng.uniform(-10, 35);
    const auto got = composite(p, l, w, s);
    const auto want = composite_oracle(p, l, w, s);
    for (double v : {got.csig, got.cbak, got.covl}) c.expect(v >= 1.0 && v <= 5.0, "composite out of [1, 5]");
    c.expect(std::abs(got.csig - want.csig) <= 1e-12 && std::abs(got.cbak - want.cbak) <= 1e-12 &&
                 std::abs(got.covl - want.covl) <= 1e-12,
             "composite disagrees with the regression");
  }
  c.note("3 examples, 2000 random inputs clipped to [1, 5]");
  return c.outcome();
}

// --- 9 -------------------------------------------------------------------

Outcome metric_monotonicity() {
  Checker c;
  const auto y = testing::fixture_wav("stoi_clean.wav");
  std::string trace;
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    const auto noise = testing::random_waveform(rng, y.size(), 1.0);
    double last_stoi = 2.0, last_snr = 1e9;
    for (double snr : {20.0, 10.0, 0.0, -10.0}) {
      const auto x = mix_at_snr(y, noise, snr).waveform;
      const double s = stoi(y, x), q = seg_snr(y, x);
      c.expect(s < last_stoi, "stoi not decreasing at " + fmt("%g dB", snr));
      c.expect(q < last_snr, "seg_snr not decreasing at " + fmt("%g dB", snr));
      if (seed == 1) trace += (trace.empty() ? "" : ", ") + fmt("%.3f", s) + "/" + fmt("%.1f", q);
      last_stoi = s;
      last_snr = q;
    }
  }
  c.note("stoi/segSNR at 20,10,0,-10 dB: " + trace);
  return c.outcome();
}

// --- 10 ------------------------------------------------------------------

Outcome correlation_harness() {
  Checker c;
  Rng rng(110);
  std::vector<CorrelationRow> rows(60);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double loss = rng.uniform(0.0, 1.0);
    rows[i].id = "u" + std::to_string(i);
    rows[i].losses["constructed"] = loss;
    rows[i].metrics.stoi = -loss + 1e-3 * rng.normal();
    rows[i].metrics.seg_snr = -loss;
    rows[i].metrics.llr = rng.uniform();
    rows[i].metrics.wss = rng.uniform();
  }
  double r = 1.0;
  for (const auto& cell : pcc_matrix(rows, {"constructed"}))
    if (cell.metric == "stoi" && cell.value) r = *cell.value;
  c.expect(r <= -0.99, "pcc of -loss + jitter is " + fmt("%.5f", r));

  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 3 + rng.below(60);
    const auto u = testing::normal_vector(rng, n), v = testing::normal_vector(rng, n);
    const double base = pearson_cc(u, v);
    const double a = rng.uniform(0.05, 20.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0), b = rng.uniform(-10, 10);
    auto w = u;
    for (auto& x : w) x = a * x + b;
    const double err = std::abs(pearson_cc(w, v) - (a > 0 ? base : -base));
    worst = std::max(worst, err);
    c.expect(err <= 1e-12, "affine map moved pcc by " + fmt("%.3g", err));
  }
  c.note("pcc " + fmt("%.5f", r) + ", affine drift " + fmt("%.1e", worst));
  return c.outcome();
}

// --- 11 ------------------------------------------------------------------

Outcome checkpoint_round_trip() {
  Checker c;
  testing::TempDir dir("accept_ckpt");
  testing::write_fixture_corpus(dir / "data", {3, 1, 5.0, 8000});
  const auto corpus = scan_corpus(dir / "data");

  TrainConfig cfg;
  cfg.loss.name = LossName::pfpl;
  cfg.loss.encoder = std::make_shared<PhoneticEncoder>(random_encoder(11, EncoderSpec::stand_in(64)));
  cfg.steps = 6;
  cfg.batch_size = 2;
  cfg.adam.lr = 1e-3;
  cfg.seed = 11;
  cfg.crop = {4096, 4096, PadPolicy::reflect};

  auto full = build_model(ModelConfig::small10(), 3);
  OptimizerState full_state;
  const auto full_log = Trainer(cfg, corpus).train(full, full_state).losses();

  save_checkpoint(dir / "full.pfpl", full, &full_state, full_state.step, cfg.hash());
  const auto back = load_checkpoint(dir / "full.pfpl");
  c.expect(same_params(back.model.parameters(), full.parameters()), "parameters changed across save/load");
  c.expect(back.optimizer.has_value() && *back.optimizer == full_state, "optimizer state changed across save/load");
  c.expect(back.model.config() == full.config(), "model config changed across save/load");

  auto half_cfg = cfg;
  half_cfg.steps = 3;
  half_cfg.checkpoint_path = dir / "half.pfpl";
  auto part = build_model(ModelConfig::small10(), 3);
  OptimizerState part_state;
  auto log = Trainer(half_cfg, corpus).train(part, part_state).losses();
  auto resumed = load_checkpoint(dir / "half.pfpl");
  c.expect(resumed.optimizer.has_value(), "half-way checkpoint lacks optimizer state");
  if (resumed.optimizer) {
    const auto tail = Trainer(cfg, corpus).train(resumed.model, *resumed.optimizer).losses();
    log.insert(log.end(), tail.begin(), tail.end());
  }
  c.expect(log == full_log, "resumed loss log differs from the uninterrupted run");
  c.expect(same_params(resumed.model.parameters(), full.parameters()), "resumed parameters differ");
  c.note(std::to_string(full.parameter_count()) + " params, " + std::to_string(full_log.size()) +
         " logged steps identical after resume");
  return c.outcome();
}

// --- 12 ------------------------------------------------------------------

Outcome vbd_noisy_baseline() {
  const char* root = std::getenv("PFPL_VBD_ROOT");
  const char* tool = std::getenv("PFPL_PESQ_TOOL");
  if (root == nullptr || tool == nullptr) return {Outcome::skip, "set PFPL_VBD_ROOT and PFPL_PESQ_TOOL to run"};
  Checker c;
  const auto corpus = scan_corpus(root);
  PesqAdapter adapter(tool);
  double pesq_sum = 0.0, stoi_sum = 0.0;
  std::size_t pesq_n = 0, n = 0;
  for (const auto& e : corpus.split(Split::test)) {
    const auto p = load_pair(corpus, e.id);
    const auto m = evaluate_pair(p.clean, p.noisy, &adapter);
    stoi_sum += m.stoi;
    ++n;
    if (m.pesq) {
      pesq_sum += *m.pesq;
      ++pesq_n;
    }
  }
  c.expect(n > 0, "no test utterances");
  c.expect(pesq_n == n, std::to_string(n - pesq_n) + " pesq failures");
  const double pesq = pesq_n ? pesq_sum / static_cast<double>(pesq_n) : 0.0;
  const double st = n ? stoi_sum / static_cast<double>(n) : 0.0;
  c.expect(std::abs(pesq - 1.97) <= 0.05, "mean pesq " + fmt("%.3f", pesq));
  c.expect(std::abs(st - 0.92) <= 0.01, "mean stoi " + fmt("%.4f", st));
  c.note(std::to_string(n) + " utterances, pesq " + fmt("%.3f", pesq) + ", stoi " + fmt("%.4f", st));
  return c.outcome();
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
  double budget_s = 0.0;  // 0: unbounded
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pfpl acceptance suite"};
  std::vector<int> only;
  OverfitSettings overfit;
  app.add_option("--only", only, "criterion numbers to run (default: all)");
  app.add_option("--overfit-steps", overfit.steps, "training steps for criterion 7");
  app.add_option("--overfit-lr", overfit.lr, "learning rate for criterion 7");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "w1 matches the LP oracle", w1_matches_lp_oracle, 10},
      {2, "w1 metric axioms", w1_metric_axioms, 10},
      {3, "stft round trip", stft_round_trip, 30},
      {4, "pfpl identities", pfpl_identities, 60},
      {5, "gradient fidelity", gradient_fidelity, 120},
      {6, "wsdr anchors", wsdr_anchors},
      {7, "overfit smoke test", [&] { return overfit_smoke(overfit); }, 600},
      {8, "composite regressions", composite_checks},
      {9, "metric monotonicity", metric_monotonicity},
      {10, "correlation harness", correlation_harness},
      {11, "checkpoint round trip", checkpoint_round_trip},
      {12, "noisy VBD baseline scores", vbd_noisy_baseline},
  };
  const std::set<int> selected(only.begin(), only.end());

  int failed = 0, passed = 0, skipped = 0;
  for (const auto& cr : criteria) {
    if (!selected.empty() && !selected.count(cr.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0 && secs > cr.budget_s && o.kind == Outcome::pass) {
      o.kind = Outcome::fail;
      o.detail += " | over the " + fmt("%.0f s", cr.budget_s) + " budget";
    }
    const char* tag = o.kind == Outcome::pass ? "PASS" : o.kind == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("[%s] %2d %s (%.1f s): %s\n", tag, cr.id, cr.title, secs, o.detail.c_str());
    std::fflush(stdout);
    if (o.kind == Outcome::pass) ++passed;
    if (o.kind == Outcome::fail) ++failed;
    if (o.kind == Outcome::skip) ++skipped;
  }
  std::printf("%d passed, %d failed, %d skipped\n", passed, failed, skipped);
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
