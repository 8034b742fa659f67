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

#include "pfpl/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pfpl/error.hpp"
#include "pfpl/log.hpp"

namespace pfpl {

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_cell(const std::string& cell, const std::string& where) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) throw FormatError(where + ": malformed number '" + cell + "'");
  return v;
}

}  // namespace

double pearson_cc(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), "pearson_cc needs equal lengths");
  require(u.size() >= 2, "pearson_cc needs at least two points");
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu, dv = v[i] - mv;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
  }
  if (!(suu > 0.0) || !(svv > 0.0)) throw DegenerateInput("pearson_cc: zero variance input");
  return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"pesq", "stoi", "csig", "cbak", "covl", "seg_snr", "llr", "wss"};
  return names;
}

std::optional<double> metric_value(const MetricScores& s, const std::string& name) {
  if (name == "pesq") return s.pesq;
  if (name == "stoi") return s.stoi;
  if (name == "csig") return s.csig;
  if (name == "cbak") return s.cbak;
  if (name == "covl") return s.covl;
  if (name == "seg_snr") return s.seg_snr;
  if (name == "llr") return s.llr;
  if (name == "wss") return s.wss;
  throw KeyError("unknown metric '" + name + "'");
}

std::vector<PccCell> pcc_matrix(const std::vector<CorrelationRow>& rows, const std::vector<std::string>& loss_names) {
  std::vector<PccCell> cells;
  for (const auto& loss : loss_names) {
    for (const auto& metric : metric_names()) {
      PccCell cell{loss, metric, std::nullopt, 0, ""};
      std::vector<double> u, v;
      for (const auto& r : rows) {
        const auto m = metric_value(r.metrics, metric);
        auto it = r.losses.find(loss);
        if (!m || it == r.losses.end()) continue;
        u.push_back(it->second);
        v.push_back(*m);
      }
      cell.samples = u.size();
      if (u.size() < 2) {
        cell.note = "insufficient";
      } else {
        try {
          cell.value = pearson_cc(u, v);
        } catch (const DegenerateInput&) {
          cell.note = "degenerate";
        }
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

CorrelationReport correlation_report(const CorpusIndex& corpus, const MaskEstimator& model,
                                     const std::vector<LossSpec>& losses, const StftConfig& stft,
                                     const PesqAdapter* adapter) {
  const auto test = corpus.split(Split::test);
  require(test.size() >= 2, "correlation_report needs at least two test utterances");
  require(!losses.empty(), "correlation_report needs at least one loss");
  CorrelationReport report;
  for (const auto& l : losses) report.loss_names.push_back(to_string(l.name));
  for (const auto& entry : test) {
    const auto pair = load_pair(corpus, entry.id);
    const auto enhanced = enhance(model, pair.noisy, stft);
    CorrelationRow row;
    row.id = entry.id;
    for (const auto& l : losses) row.losses[to_string(l.name)] = compute_loss(l, pair.noisy, pair.clean, enhanced).total;
    row.metrics = evaluate_pair(pair.clean, enhanced, adapter);
    if (adapter != nullptr && !row.metrics.pesq) ++report.pesq_failures;
    report.rows.push_back(std::move(row));
  }
  report.pcc = pcc_matrix(report.rows, report.loss_names);
  return report;
}

void write_correlation_report(const std::filesystem::path& dir, const CorrelationReport& report) {
  std::filesystem::create_directories(dir);
  {
    const auto path = dir / "correlation_report.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "# rows=" << report.rows.size() << " pesq_failures=" << report.pesq_failures << "\n";
    out << "id";
    for (const auto& l : report.loss_names) out << ",loss_" << l;
    for (const auto& m : metric_names()) out << ',' << m;
    out << '\n';
    for (const auto& r : report.rows) {
      out << r.id;
      for (const auto& l : report.loss_names) out << ',' << num(r.losses.at(l));
      for (const auto& m : metric_names()) {
        const auto v = metric_value(r.metrics, m);
        out << ',' << (v ? num(*v) : std::string());
      }
      out << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
  }
  {
    const auto path = dir / "pcc_matrix.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "loss,metric,pcc,samples,note\n";
    for (const auto& c : report.pcc) {
      out << c.loss << ',' << c.metric << ',' << (c.value ? num(*c.value) : std::string()) << ',' << c.samples << ','
          << c.note << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
  }
}

CorrelationReport read_correlation_report(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot read " + csv.string());
  CorrelationReport report;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# ", 0) == 0) {
    const auto pos = line.find("pesq_failures=");
    if (pos != std::string::npos) report.pesq_failures = std::stoul(line.substr(pos + 14));
    std::getline(in, line);
  }
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "id") throw FormatError(csv.string() + " lacks the report header");
  std::vector<std::string> metric_cols;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("loss_", 0) == 0) report.loss_names.push_back(header[i].substr(5));
    else metric_cols.push_back(header[i]);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw FormatError(csv.string() + ": wrong column count in '" + line + "'");
    CorrelationRow row;
    row.id = cells[0];
    std::size_t c = 1;
    for (const auto& l : report.loss_names) row.losses[l] = parse_cell(cells[c++], csv.string()).value_or(0.0);
    for (const auto& m : metric_cols) {
      const auto v = parse_cell(cells[c++], csv.string());
      if (m == "pesq") row.metrics.pesq = v;
      else if (m == "stoi") row.metrics.stoi = v.value_or(0.0);
      else if (m == "csig") row.metrics.csig = v;
      else if (m == "cbak") row.metrics.cbak = v;
      else if (m == "covl") row.metrics.covl = v;
      else if (m == "seg_snr") row.metrics.seg_snr = v.value_or(0.0);
      else if (m == "llr") row.metrics.llr = v.value_or(0.0);
      else if (m == "wss") row.metrics.wss = v.value_or(0.0);
    }
    report.rows.push_back(std::move(row));
  }
  report.pcc = pcc_matrix(report.rows, report.loss_names);
  return report;
}

void export_features(const PhoneticEncoder& encoder, const std::vector<FeatureItem>& items,
                     const std::filesystem::path& csv) {
  require(!items.empty(), "export_features needs at least one item");
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  const std::size_t channels = encoder.channels();
  out << "id,frame,label";
  for (std::size_t c = 0; c < channels; ++c) out << ",f" << c;
  out << '\n';
  for (const auto& item : items) {
    const auto f = encoder.encode(item.waveform);
    for (std::size_t t = 0; t < f.frames; ++t) {
      out << item.id << ',' << t << ',' << item.label;
      for (std::size_t c = 0; c < f.channels; ++c) out << ',' << num(f.at(t, c));
      out << '\n';
    }
  }
  if (!out) throw IoError("failed while writing " + csv.string());
}

}  // namespace pfpl
