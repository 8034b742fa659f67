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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pfpl/analysis.hpp"
#include "pfpl/checkpoint.hpp"
#include "pfpl/error.hpp"
#include "pfpl/log.hpp"
#include "pfpl/metrics.hpp"
#include "pfpl/random.hpp"
#include "pfpl/run_config.hpp"
#include "pfpl/trainer.hpp"
#include "pfpl/wasserstein.hpp"
#include "pfpl/wav_io.hpp"

namespace pfpl::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string data_root, encoder, encoder_ckpt, loss, ckpt, out_dir, pesq_tool;
  bool deterministic = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", f.sets, "override one config key (key=value), repeatable");
  app->add_option("--data-root", f.data_root, "corpus root with clean*/noisy* directories");
  auto* enc = app->add_option("--encoder", f.encoder, "phonetic encoder: random:<seed>[:<width>] | ckpt:<path> | identity");
  app->add_option("--encoder-ckpt", f.encoder_ckpt, "encoder archive (same as --encoder ckpt:<path>)")
      ->check(CLI::ExistingFile)
      ->excludes(enc);
  app->add_option("--loss", f.loss, "mae | mse | wsdr | pfpl | pfpl_w | pfpl_w_mae");
  app->add_option("--ckpt", f.ckpt, "model checkpoint");
  app->add_option("--out-dir", f.out_dir, "output directory");
  app->add_option("--pesq-tool", f.pesq_tool, "external PESQ executable");
  app->add_flag("--deterministic", f.deterministic, "record and enforce deterministic mode");
}

/// defaults < config file < --set < dedicated flags
RunConfig resolve(const CommonFlags& f, const std::string& ckpt_key) {
  RunConfig rc;
  if (!f.config.empty()) rc.merge_file(f.config);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    try {
      rc.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (!f.data_root.empty()) rc.set("data.root", f.data_root);
  if (!f.encoder.empty()) rc.set("encoder.source", f.encoder);
  if (!f.encoder_ckpt.empty()) rc.set("encoder.source", "ckpt:" + f.encoder_ckpt);
  if (!f.loss.empty()) rc.set("loss.name", f.loss);
  if (!f.ckpt.empty()) rc.set(ckpt_key, f.ckpt);
  if (!f.out_dir.empty()) rc.set("output.dir", f.out_dir);
  if (!f.pesq_tool.empty()) rc.set("eval.pesq_tool", f.pesq_tool);
  if (f.deterministic) rc.set("run.deterministic", "true");
  return rc;
}

const std::string& require_key(const RunConfig& rc, const std::string& key, const std::string& flag) {
  const auto& v = rc.get(key);
  if (v.empty()) throw UsageError("missing " + flag + " (config key " + key + ")");
  return v;
}

std::shared_ptr<const PhoneticEncoder> make_encoder(const RunConfig& rc) {
  auto enc = load_encoder(rc.get("encoder.source"));
  const auto& tap = rc.get("encoder.tap");
  if (tap == "conv") enc.set_tap(FeatureTap::conv);
  else if (tap != "context") throw ConfigError("encoder.tap expects context or conv, got '" + tap + "'");
  return std::make_shared<PhoneticEncoder>(std::move(enc));
}

std::optional<MaskEstimator> maybe_model(const RunConfig& rc) {
  const auto& path = rc.get("model.checkpoint");
  if (path.empty()) return std::nullopt;
  auto loaded = load_checkpoint(path);
  if (loaded.model.config().bins != rc.stft().bins()) {
    throw ConfigError("checkpoint expects " + std::to_string(loaded.model.config().bins) +
                      " frequency bins but stft.window_length gives " + std::to_string(rc.stft().bins()));
  }
  return std::move(loaded.model);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::unique_ptr<PesqAdapter> maybe_pesq(const RunConfig& rc) {
  const auto& tool = rc.get("eval.pesq_tool");
  if (tool.empty()) return nullptr;
  return std::make_unique<PesqAdapter>(tool);
}

// ---------------------------------------------------------------- train

int cmd_train(const CommonFlags& f, std::optional<std::size_t> steps, const std::string& resume, std::ostream& out) {
  auto rc = resolve(f, "train.checkpoint");
  if (steps) rc.set("train.steps", std::to_string(*steps));
  if (!resume.empty()) rc.set("train.resume", resume);
  const fs::path root = require_key(rc, "data.root", "--data-root");
  const fs::path out_dir = rc.get("output.dir");

  std::shared_ptr<const PhoneticEncoder> enc;
  if (rc.loss(nullptr).needs_encoder()) enc = make_encoder(rc);
  auto cfg = rc.train(enc);
  cfg.checkpoint_path = rc.get("train.checkpoint").empty() ? out_dir / "model.pfpl" : fs::path(rc.get("train.checkpoint"));

  std::optional<MaskEstimator> model;
  OptimizerState state;
  if (!rc.get("train.resume").empty()) {
    auto loaded = load_checkpoint(rc.get("train.resume"));
    if (loaded.config_hash != cfg.hash()) {
      log_warning("resuming from a checkpoint written under config " + loaded.config_hash + ", current config is " +
                  cfg.hash() + "; the run will not match an uninterrupted one");
    }
    if (loaded.optimizer) {
      state = std::move(*loaded.optimizer);
    } else {
      log_warning("checkpoint has no optimizer state; Adam moments restart from zero");
      state.step = loaded.step;
    }
    model = std::move(loaded.model);
  } else if (auto m = maybe_model(rc)) {
    model = std::move(m);
  } else {
    model = build_model(rc.model(), rc.get_u64("model.seed"));
  }

  rc.write_resolved(out_dir);
  Trainer trainer(cfg, scan_corpus(root));
  out << "training " << model->config().name << " (" << model->parameter_count() << " parameters) with "
      << to_string(cfg.loss.name) << " on " << trainer.training_entries().size() << " utterances, steps "
      << state.step << ".." << cfg.steps << "\n";

  std::ofstream log(out_dir / "train_log.csv");
  log << std::setprecision(17) << "step,loss,grad_norm\n";
  const std::size_t every = std::max<std::size_t>(1, cfg.steps / 20);
  const auto report = trainer.train(*model, state, [&](const StepRecord& r) {
    log << r.step << ',' << r.loss << ',' << r.grad_norm << '\n';
    if ((r.step + 1) % every == 0 || r.step + 1 == cfg.steps) {
      out << "step " << r.step + 1 << "/" << cfg.steps << " loss " << r.loss << "\n";
    }
  });
  if (report.log.empty()) {
    // nothing to run; still leave a checkpoint behind
    save_checkpoint(cfg.checkpoint_path, *model, cfg.save_optimizer ? &state : nullptr, state.step, cfg.hash());
  }
  out << "checkpoint: " << cfg.checkpoint_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- enhance

int cmd_enhance(const CommonFlags& f, const std::string& in, const std::string& out_path, const std::string& in_dir,
                std::ostream& out) {
  auto rc = resolve(f, "model.checkpoint");
  if (in.empty() == in_dir.empty()) throw UsageError("enhance needs exactly one of --in or --in-dir");
  if (!in.empty() && out_path.empty()) throw UsageError("enhance --in needs --out");
  require_key(rc, "model.checkpoint", "--ckpt");
  const auto model = *maybe_model(rc);
  const auto stft_cfg = rc.stft();

  std::vector<std::pair<fs::path, fs::path>> jobs;
  fs::path resolved_dir;
  if (!in.empty()) {
    jobs.emplace_back(in, out_path);
    resolved_dir = f.out_dir.empty() ? fs::absolute(out_path).parent_path() : fs::path(rc.get("output.dir"));
  } else {
    resolved_dir = rc.get("output.dir");
    for (const auto& e : fs::directory_iterator(in_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") jobs.emplace_back(e.path(), resolved_dir / e.path().filename());
    }
    std::sort(jobs.begin(), jobs.end());
    if (jobs.empty()) throw InvalidInput("no .wav files in " + in_dir);
  }
  rc.write_resolved(resolved_dir);
  for (const auto& [src, dst] : jobs) {
    const auto x = load_wav(src);
    const auto y = enhance(model, x, stft_cfg);
    if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
    write_wav(dst, y, WavSampleFormat::float32);
    out << src.string() << " -> " << dst.string() << " (" << y.size() << " samples)\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const CommonFlags& f, std::ostream& out) {
  auto rc = resolve(f, "model.checkpoint");
  const fs::path root = require_key(rc, "data.root", "--data-root");
  const fs::path out_dir = rc.get("output.dir");
  const auto model = maybe_model(rc);
  const auto stft_cfg = rc.stft();
  const auto pesq = maybe_pesq(rc);
  const auto corpus = scan_corpus(root);
  const auto test = corpus.split(Split::test);
  if (test.empty()) throw EmptyCorpus("no test utterances under " + root.string());
  if (!model) out << "no --ckpt given: scoring the unprocessed noisy input\n";
  rc.write_resolved(out_dir);

  std::vector<MetricRow> rows;
  std::size_t pesq_failures = 0;
  for (const auto& e : test) {
    const auto pair = load_pair(corpus, e.id);
    const auto est = model ? enhance(*model, pair.noisy, stft_cfg) : pair.noisy;
    rows.push_back({e.id, evaluate_pair(pair.clean, est, pesq.get())});
    if (pesq && !rows.back().scores.pesq) ++pesq_failures;
  }
  write_metrics_csv(out_dir / "metrics.csv", rows);

  out << "utterances " << rows.size() << "\n";
  for (const auto& name : metric_names()) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (auto v = metric_value(r.scores, name)) {
        sum += *v;
        ++n;
      }
    }
    if (n > 0) out << "mean " << name << " " << sum / static_cast<double>(n) << " (n=" << n << ")\n";
  }
  if (pesq_failures > 0) out << "pesq failures " << pesq_failures << "\n";
  out << "metrics: " << (out_dir / "metrics.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- correlate

int cmd_correlate(const CommonFlags& f, const std::string& losses, std::ostream& out) {
  auto rc = resolve(f, "model.checkpoint");
  if (!losses.empty()) rc.set("analysis.losses", losses);
  const fs::path root = require_key(rc, "data.root", "--data-root");
  const fs::path out_dir = rc.get("output.dir");
  auto model = maybe_model(rc);
  if (!model) {
    out << "no --ckpt given: using an untrained model from model.seed\n";
    model = build_model(rc.model(), rc.get_u64("model.seed"));
  }
  std::vector<LossSpec> specs;
  std::shared_ptr<const PhoneticEncoder> enc;
  for (const auto& name : split_list(rc.get("analysis.losses"))) {
    LossSpec s;
    s.name = loss_from_string(name);
    s.mae_weight = rc.get_double("loss.mae_weight");
    s.feature_weight = rc.get_double("loss.feature_weight");
    if (s.needs_encoder()) {
      if (!enc) enc = make_encoder(rc);
      s.encoder = enc;
    }
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw UsageError("analysis.losses is empty");
  const auto pesq = maybe_pesq(rc);
  rc.write_resolved(out_dir);
  const auto report = correlation_report(scan_corpus(root), *model, specs, rc.stft(), pesq.get());
  write_correlation_report(out_dir, report);
  for (const auto& c : report.pcc) {
    out << c.loss << " vs " << c.metric << ": " << (c.value ? std::to_string(*c.value) : c.note) << "\n";
  }
  out << "report: " << (out_dir / "correlation_report.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- export-features

int cmd_export(const CommonFlags& f, const std::vector<std::string>& inputs, const std::vector<std::string>& labels,
               const std::string& csv, std::ostream& out) {
  auto rc = resolve(f, "model.checkpoint");
  if (inputs.empty()) throw UsageError("export-features needs at least one --in");
  if (labels.size() > 1 && labels.size() != inputs.size()) {
    throw UsageError("give one --label per --in, or a single --label for all");
  }
  const auto enc = make_encoder(rc);
  std::vector<FeatureItem> items;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string label = labels.empty() ? "" : labels[labels.size() == 1 ? 0 : i];
    items.push_back({fs::path(inputs[i]).stem().string(), load_wav(inputs[i]), label});
  }
  const fs::path out_dir = rc.get("output.dir");
  const fs::path target = csv.empty() ? out_dir / "features.csv" : fs::path(csv);
  rc.write_resolved(csv.empty() ? out_dir : fs::absolute(target).parent_path());
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  export_features(*enc, items, target);
  out << "features: " << target.string() << " (" << enc->channels() << " channels)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- selftest

int cmd_selftest(std::ostream& out) {
  int failures = 0;
  auto check = [&](const std::string& name, const std::function<std::string()>& body) {
    std::string problem;
    try {
      problem = body();
    } catch (const std::exception& e) {
      problem = std::string("threw: ") + e.what();
    }
    out << (problem.empty() ? "ok   " : "FAIL ") << name << (problem.empty() ? "" : ": " + problem) << "\n";
    failures += problem.empty() ? 0 : 1;
  };
  auto vec = [](Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
  };

  check("w1 sorting equals exhaustive transport", [&]() -> std::string {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      const auto n = 1 + rng.below(7);
      const auto a = vec(rng, n), b = vec(rng, n);
      if (std::abs(w1_1d(a, b) - w1_oracle(a, b, 1)) > 1e-9) return "mismatch at trial " + std::to_string(i);
    }
    return {};
  });
  check("w1 metric axioms", [&]() -> std::string {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      const auto n = 1 + rng.below(32);
      const auto a = vec(rng, n), b = vec(rng, n), c = vec(rng, n);
      const double ab = w1_1d(a, b);
      if (ab < 0.0 || ab != w1_1d(b, a) || w1_1d(a, c) > ab + w1_1d(b, c) + 1e-12) {
        return "violated at trial " + std::to_string(i);
      }
    }
    return {};
  });
  check("stft round trip", [&]() -> std::string {
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
      const auto n = 1000 + rng.below(15000);
      const Waveform x(vec(rng, n), kDefaultSampleRate);
      const auto y = istft(stft(x, StftConfig{}), kDefaultSampleRate);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        num += (y[k] - x[k]) * (y[k] - x[k]);
        den += x[k] * x[k];
      }
      if (y.size() != n || std::sqrt(num / den) >= 1e-6) return "length " + std::to_string(n);
    }
    return {};
  });
  check("wsdr anchors", [&]() -> std::string {
    const Waveform x({1, 1}, kDefaultSampleRate), y({1, 0}, kDefaultSampleRate), h({1, 0.5}, kDefaultSampleRate);
    if (std::abs(wsdr_loss(x, y, y) + 1.0) > 1e-6) return "y_hat = y is not -1";
    if (std::abs(wsdr_loss(x, y, h) + 0.9472) > 1e-4) return "hand-derived triple";
    return {};
  });
  check("pfpl identity and mae bound", [&]() -> std::string {
    Rng rng(4);
    LossSpec s;
    s.encoder = std::make_shared<PhoneticEncoder>(load_encoder("random:0:32"));
    for (int i = 0; i < 10; ++i) {
      const Waveform y(vec(rng, 2000), kDefaultSampleRate), h(vec(rng, 2000), kDefaultSampleRate);
      if (std::abs(compute_loss(s, y, y, y).total) > 1e-12) return "pfpl(y, y) != 0";
      const auto v = compute_loss(s, y, y, h);
      if (v.total < v.components.at("mae_term")) return "pfpl < mae";
    }
    return {};
  });
  check("composite regression example", [&]() -> std::string {
    const auto c = composite(2.0, 1.0, 50.0, 5.0);
    if (std::abs(c.csig - 2.820) > 1e-3 || std::abs(c.cbak - 2.555) > 1e-3 || std::abs(c.covl - 2.342) > 1e-3) {
      return "got " + std::to_string(c.csig) + "/" + std::to_string(c.cbak) + "/" + std::to_string(c.covl);
    }
    return {};
  });
  out << (failures == 0 ? "selftest passed\n" : "selftest failed\n");
  return failures == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

std::string usage() {
  return "usage: pfpl <command> [options]\n"
         "\n"
         "commands:\n"
         "  train            train the mask estimator on a corpus\n"
         "  enhance          enhance wav files with a trained checkpoint\n"
         "  evaluate         score a checkpoint (or the noisy input) on the test split\n"
         "  correlate        per-utterance loss/metric table and PCC matrix\n"
         "  export-features  dump phonetic encoder features to CSV\n"
         "  selftest         run quick property checks\n"
         "\n"
         "run `pfpl <command> --help` for the options of a command\n";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return kExitUsage;
  }
  CLI::App app{"speech enhancement with a phonetic perceptual loss", "pfpl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CommonFlags common;
  std::optional<std::size_t> steps;
  std::string resume, in, out_path, in_dir, losses, csv;
  std::vector<std::string> inputs, labels;

  auto* train = app.add_subcommand("train", "train the mask estimator");
  add_common(train, common);
  train->add_option("--steps", steps, "override train.steps");
  train->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);

  auto* enh = app.add_subcommand("enhance", "enhance wav files");
  add_common(enh, common);
  enh->add_option("--in", in, "input wav")->check(CLI::ExistingFile);
  enh->add_option("--out", out_path, "output wav");
  enh->add_option("--in-dir", in_dir, "directory of input wavs (outputs go to --out-dir)")->check(CLI::ExistingDirectory);

  auto* eval = app.add_subcommand("evaluate", "score the test split");
  add_common(eval, common);

  auto* corr = app.add_subcommand("correlate", "loss/metric correlation report");
  add_common(corr, common);
  corr->add_option("--losses", losses, "comma-separated loss names");

  auto* feat = app.add_subcommand("export-features", "dump encoder features");
  add_common(feat, common);
  feat->add_option("--in", inputs, "input wav, repeatable")->check(CLI::ExistingFile);
  feat->add_option("--label", labels, "label per input (or one for all)");
  feat->add_option("--csv", csv, "output CSV (default <out-dir>/features.csv)");

  auto* self = app.add_subcommand("selftest", "quick property checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << usage();
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(common, steps, resume, out);
    if (enh->parsed()) return cmd_enhance(common, in, out_path, in_dir, out);
    if (eval->parsed()) return cmd_evaluate(common, out);
    if (corr->parsed()) return cmd_correlate(common, losses, out);
    if (feat->parsed()) return cmd_export(common, inputs, labels, csv, out);
    if (self->parsed()) return cmd_selftest(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << usage();
  return kExitUsage;
}

}  // namespace pfpl::cli
