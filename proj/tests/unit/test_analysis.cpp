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
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "pfpl/analysis.hpp"
#include "pfpl/error.hpp"

using namespace pfpl;
using pfpl::testing::TempDir;

namespace {

using V = std::vector<double>;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("pearson examples") {
  CHECK(pearson_cc(V{1, 2, 3}, V{2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson_cc(V{1, 2, 3}, V{3, 2, 1}) == doctest::Approx(-1.0));
  // centred: (-1.5,-.5,.5,1.5) vs (-.5,.5,-.5,.5) -> 1 / (sqrt(5) * 1)
  CHECK(pearson_cc(V{1, 2, 3, 4}, V{0, 1, 0, 1}) == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK(pearson_cc(V{1, 2, 3, 4}, V{1, 3, 2, 4}) == doctest::Approx(0.8));
  CHECK_THROWS_AS(pearson_cc(V{1, 1, 1}, V{1, 2, 3}), DegenerateInput);
  CHECK_THROWS_AS(pearson_cc(V{1, 2}, V{1, 2, 3}), InvalidInput);
}

TEST_CASE("pearson is bounded and affine invariant") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + rng.below(40);
    const auto u = testing::normal_vector(rng, n), v = testing::normal_vector(rng, n);
    const double r = pearson_cc(u, v);
    CHECK(std::abs(r) <= 1.0);
    CHECK(pearson_cc(v, u) == doctest::Approx(r).epsilon(1e-12));
    const double a = rng.uniform(0.1, 5.0), b = rng.uniform(-3, 3);
    V w = u;
    for (auto& x : w) x = a * x + b;
    CHECK(pearson_cc(w, v) == doctest::Approx(r).epsilon(1e-9).scale(1.0));
    for (auto& x : w) x = -x;
    CHECK(pearson_cc(w, v) == doctest::Approx(-r).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("pcc matrix flags degenerate and short columns") {
  std::vector<CorrelationRow> rows(3);
  for (std::size_t i = 0; i < 3; ++i) {
    rows[i].id = "u" + std::to_string(i);
    rows[i].losses["mae"] = 0.1 * static_cast<double>(i + 1);
    rows[i].metrics.stoi = 0.5 + 0.1 * static_cast<double>(i);
    rows[i].metrics.seg_snr = 35.0;
    rows[i].metrics.llr = static_cast<double>(i * i);
    rows[i].metrics.wss = 10.0 - static_cast<double>(i);
  }
  rows[0].metrics.pesq = 2.0;
  const auto cells = pcc_matrix(rows, {"mae"});
  CHECK(cells.size() == metric_names().size());
  for (const auto& c : cells) {
    CAPTURE(c.metric);
    if (c.metric == "stoi") CHECK(*c.value == doctest::Approx(1.0));
    if (c.metric == "wss") CHECK(*c.value == doctest::Approx(-1.0));
    if (c.metric == "seg_snr") {
      CHECK_FALSE(c.value.has_value());
      CHECK(c.note == "degenerate");
    }
    if (c.metric == "pesq") {
      CHECK_FALSE(c.value.has_value());
      CHECK(c.samples == 1);
      CHECK(c.note == "insufficient");
    }
  }
  CHECK_THROWS_AS(metric_value(rows[0].metrics, "snr"), KeyError);
}

TEST_CASE("correlation report on the fixture corpus") {
  TempDir dir("corr");
  testing::write_fixture_corpus(dir / "data", {1, 4, 5.0, 8000});
  const auto corpus = scan_corpus(dir / "data");
  auto model = build_model(ModelConfig::small10(), 1);
  model.inject_mask(MaskInjection::identity);
  auto enc = std::make_shared<PhoneticEncoder>(load_encoder("random:7:64"));
  std::vector<LossSpec> losses(3);
  losses[0].name = LossName::mae;
  losses[1].name = LossName::pfpl;
  losses[1].encoder = enc;
  losses[2].name = LossName::wsdr;
  const auto report = correlation_report(corpus, model, losses, StftConfig{});
  CHECK(report.rows.size() == 4);
  CHECK(report.loss_names == std::vector<std::string>{"mae", "pfpl", "wsdr"});
  CHECK(report.pcc.size() == 3 * metric_names().size());
  CHECK(report.pesq_failures == 0);

  // identity mask: the enhanced signal is the noisy input
  const auto pair = load_pair(corpus, report.rows[0].id);
  CHECK(report.rows[0].losses.at("mae") == doctest::Approx(mae_loss(pair.clean, pair.noisy)).epsilon(1e-9));
  for (const auto& c : report.pcc) {
    if (c.metric == "pesq") CHECK(c.note == "insufficient");
    if (c.value) CHECK(std::abs(*c.value) <= 1.0);
  }

  write_correlation_report(dir / "out", report);
  const auto back = read_correlation_report(dir / "out" / "correlation_report.csv");
  REQUIRE(back.rows.size() == report.rows.size());
  CHECK(back.loss_names == report.loss_names);
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].id == report.rows[i].id);
    CHECK(back.rows[i].losses == report.rows[i].losses);
    CHECK(back.rows[i].metrics.stoi == report.rows[i].metrics.stoi);
    CHECK(back.rows[i].metrics.wss == report.rows[i].metrics.wss);
  }
  REQUIRE(back.pcc.size() == report.pcc.size());
  for (std::size_t i = 0; i < back.pcc.size(); ++i) CHECK(back.pcc[i].value == report.pcc[i].value);

  std::ifstream pcc(dir / "out" / "pcc_matrix.csv");
  std::string line;
  std::getline(pcc, line);
  CHECK(line == "loss,metric,pcc,samples,note");
  std::size_t n = 0;
  while (std::getline(pcc, line)) ++n;
  CHECK(n == report.pcc.size());
}

TEST_CASE("export_features writes one row per frame") {
  TempDir dir("feat");
  const auto enc = load_encoder("random:7");
  const auto y = testing::fixture_wav("speech_a.wav");
  export_features(enc, {{"a", y, "clean"}, {"b", y, "copy"}}, dir / "f.csv");
  std::ifstream in(dir / "f.csv");
  std::string line;
  std::getline(in, line);
  const auto header = split(line);
  CHECK(header.size() == 515);
  CHECK(header[0] == "id");
  CHECK(header[3] == "f0");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) rows.push_back(split(line));
  REQUIRE(rows.size() == 196);
  for (const auto& r : rows) REQUIRE(r.size() == 515);
  CHECK(rows[97][1] == "97");
  CHECK(rows[98][0] == "b");
  CHECK(rows[98][2] == "copy");
  for (std::size_t t = 0; t < 98; t += 7) {
    CHECK(std::equal(rows[t].begin() + 3, rows[t].end(), rows[98 + t].begin() + 3));
  }
  const auto f = enc.encode(y);
  CHECK(std::stod(rows[5][3 + 17]) == doctest::Approx(f.at(5, 17)).epsilon(1e-12));
  CHECK_THROWS_AS(export_features(enc, {}, dir / "e.csv"), InvalidInput);
}

}
