/**
 * Copyright 2026 The skey Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "skey/evaluation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "skey/error.hpp"

namespace skey {

FifthsRule parse_fifths_rule(const std::string& text) {
  if (text == "symmetric" || text.empty()) return FifthsRule::kSymmetric;
  if (text == "ascending") return FifthsRule::kAscending;
  fail(ErrorCode::kInvalidArgument, "fifths rule must be symmetric or ascending, got " + text);
}

const char* fifths_rule_name(FifthsRule rule) {
  return rule == FifthsRule::kAscending ? "ascending" : "symmetric";
}

double mirex_score(const KeyLabel& ref, const KeyLabel& est, FifthsRule rule) {
  if (ref == est) return 1.0;
  const int diff = wrap12(est.tonic - ref.tonic);
  if (ref.mode == est.mode) {
    if (diff == 7 || (rule == FifthsRule::kSymmetric && diff == 5)) return 0.5;
    return 0.0;
  }
  if (ref.signature() == est.signature()) return 0.3;
  if (diff == 0) return 0.2;
  return 0.0;
}

double ksea_score(const KeyLabel& ref, const KeyLabel& est) {
  const int diff = wrap12(est.signature() - ref.signature());
  if (diff == 0) return 1.0;
  if (diff == 5 || diff == 7) return 0.5;
  return 0.0;
}

int mode_accuracy(const KeyLabel& ref, const KeyLabel& est) { return ref.mode == est.mode ? 1 : 0; }

MetricsReport evaluate(const std::vector<EvalRecord>& records, FifthsRule rule) {
  MetricsReport report;
  report.rule = rule;
  report.count = static_cast<int>(records.size());
  struct Sums {
    double mirex = 0.0, ksea = 0.0, mode = 0.0;
    int count = 0;
  };
  Sums all;
  std::map<std::string, Sums> genres;
  for (const auto& r : records) {
    const double m = mirex_score(r.reference, r.prediction, rule);
    const double k = ksea_score(r.reference, r.prediction);
    const double a = mode_accuracy(r.reference, r.prediction);
    for (Sums* s : {&all, &genres[r.genre.empty() ? "unknown" : r.genre]}) {
      s->mirex += m;
      s->ksea += k;
      s->mode += a;
      s->count += 1;
    }
    report.confusion[static_cast<std::size_t>(r.reference.index())][static_cast<std::size_t>(r.prediction.index())] += 1;
  }
  auto pct = [](double sum, int n) { return n > 0 ? 100.0 * sum / n : 0.0; };
  report.mirex = pct(all.mirex, all.count);
  report.ksea = pct(all.ksea, all.count);
  report.mode_acc = pct(all.mode, all.count);
  for (const auto& [g, s] : genres) {
    report.per_genre[g] = {pct(s.mirex, s.count), pct(s.ksea, s.count), pct(s.mode, s.count), s.count};
  }
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json genres = nlohmann::json::object();
  for (const auto& [g, s] : per_genre) {
    genres[g] = {{"mirex", s.mirex}, {"ksea", s.ksea}, {"mode_acc", s.mode_acc}, {"count", s.count}};
  }
  std::vector<std::string> labels;
  for (int i = 0; i < kNumKeys; ++i) labels.push_back(KeyLabel::from_index(i).to_string());
  return {{"mirex", mirex},
          {"ksea", ksea},
          {"mode_acc", mode_acc},
          {"count", count},
          {"fifths_rule", fifths_rule_name(rule)},
          {"per_genre", genres},
          {"confusion_labels", labels},
          {"confusion", confusion}};
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << "records " << count << "  (fifths rule: " << fifths_rule_name(rule) << ")\n";
  out << "MIREX " << mirex << "\nKSEA " << ksea << "\nmode acc " << mode_acc << "\n";
  if (!per_genre.empty()) {
    out << "\n" << std::left << std::setw(16) << "genre" << std::right << std::setw(8) << "count" << std::setw(9)
        << "MIREX" << std::setw(9) << "KSEA" << std::setw(9) << "mode" << "\n";
    for (const auto& [g, s] : per_genre) {
      out << std::left << std::setw(16) << g << std::right << std::setw(8) << s.count << std::setw(9) << s.mirex
          << std::setw(9) << s.ksea << std::setw(9) << s.mode_acc << "\n";
    }
  }
  return out.str();
}

nlohmann::json PredictionRecord::to_json() const {
  return {{"id", id},
          {"tonic", key.tonic},
          {"mode", key.mode == Mode::kMajor ? "major" : "minor"},
          {"label_string", key.to_string()},
          {"posterior", posterior}};
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kUnreadableFile, "cannot open predictions " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("_meta")) continue;
    PredictionRecord p;
    require(j.contains("id"), ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(line_no) + ": no id");
    p.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    if (j.contains("label_string")) {
      p.key = parse_key_label(j["label_string"].get<std::string>());
    } else if (j.contains("tonic") && j.contains("mode")) {
      p.key = parse_key_label(std::string(pitch_class_name(wrap12(j["tonic"].get<int>()))) + " " +
                              j["mode"].get<std::string>());
    } else if (j.contains("key_label")) {
      p.key = parse_key_label(j["key_label"].get<std::string>());
    } else {
      fail(ErrorCode::kUnparsableLabel, "prediction " + p.id + " carries no key");
    }
    if (j.contains("posterior") && j["posterior"].size() == kNumKeys) {
      p.posterior = j["posterior"].get<std::array<double, kNumKeys>>();
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& preds,
                       const nlohmann::json& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIoError, "cannot write predictions " + path.string());
  if (!meta.is_null()) out << nlohmann::json{{"_meta", meta}}.dump() << '\n';
  for (const auto& p : preds) out << p.to_json().dump() << '\n';
}

MetricsReport evaluate(const Manifest& manifest, const std::vector<PredictionRecord>& preds, FifthsRule rule) {
  std::unordered_map<std::string, const ManifestRecord*> refs;
  for (const auto& r : manifest.records) refs[r.id] = &r;
  std::unordered_map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : preds) {
    const auto it = refs.find(p.id);
    require(it != refs.end() && it->second->key.has_value(), ErrorCode::kMissingReference,
            "prediction " + p.id + " has no labelled manifest record");
    by_id[p.id] = &p;
  }
  std::vector<EvalRecord> records;
  for (const auto& r : manifest.records) {
    require(r.key.has_value(), ErrorCode::kMissingReference, "manifest record " + r.id + " has no key_label");
    const auto it = by_id.find(r.id);
    require(it != by_id.end(), ErrorCode::kMissingPrediction, "no prediction for " + r.id);
    records.push_back({r.id, *r.key, it->second->key, r.genre});
  }
  return evaluate(records, rule);
}

Eigen::VectorXd embedding_vector(const ModelState& state, const CqtMatrix& cqt) {
  const int tau = static_cast<int>(std::lround(kSegmentSeconds * cqt.frame_rate));
  require(cqt.frames() >= tau, ErrorCode::kTooShort, "track shorter than one segment");
  std::vector<CroppedCqt> crops;
  for (int start = 0; start + tau <= cqt.frames(); start += tau) {
    crops.push_back(transpose_crop(segment_at(cqt, start, tau), kMaxTransposition));
  }
  const auto fms = backbone_forward(crops, state, false);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kCropBins);
  for (const auto& fm : fms) v += fm.rowwise().mean();
  return v / static_cast<double>(fms.size());
}

std::array<double, 2> project_pca(std::vector<EmbeddingRow>& rows) {
  if (rows.empty()) return {0.0, 0.0};
  const auto dim = rows.front().features.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].features.size() == dim, ErrorCode::kShapeMismatch, "embedding sizes differ");
    x.row(static_cast<Eigen::Index>(i)) = rows[i].features.transpose();
  }
  x.rowwise() -= x.colwise().mean();
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(std::max<std::size_t>(1, rows.size() - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index n = cov.rows();
  std::array<double, 2> variance{0.0, 0.0};
  std::array<Eigen::VectorXd, 2> axes;
  for (int a = 0; a < 2; ++a) {
    const Eigen::Index idx = n - 1 - a;
    if (idx < 0) {
      axes[static_cast<std::size_t>(a)] = Eigen::VectorXd::Zero(n);
      continue;
    }
    Eigen::VectorXd axis = eig.eigenvectors().col(idx);
    Eigen::Index big = 0;
    axis.cwiseAbs().maxCoeff(&big);
    if (axis(big) < 0) axis = -axis;
    axes[static_cast<std::size_t>(a)] = axis;
    variance[static_cast<std::size_t>(a)] = std::max(0.0, eig.eigenvalues()(idx));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::VectorXd centered = x.row(static_cast<Eigen::Index>(i)).transpose();
    rows[i].pc1 = centered.dot(axes[0]);
    rows[i].pc2 = centered.dot(axes[1]);
  }
  return variance;
}

std::vector<EmbeddingRow> export_embeddings(const ModelState& state, const Manifest& manifest, const CqtCache& cache,
                                            int jobs, bool force_first_30s) {
  std::vector<EmbeddingRow> rows(manifest.records.size());
  parallel_for(static_cast<int>(rows.size()), jobs, [&](int i) {
    const auto& r = manifest.records[static_cast<std::size_t>(i)];
    auto& row = rows[static_cast<std::size_t>(i)];
    row.id = r.id;
    row.key = r.key;
    row.features = embedding_vector(state, load_record_cqt(r, cache, AudioUse::kInference, force_first_30s));
  });
  project_pca(rows);
  return rows;
}

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<EmbeddingRow>& rows,
                          const nlohmann::json& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path.string());
  if (!meta.is_null()) out << "# " << meta.dump() << '\n';
  out << "id,key_label,pc1,pc2\n" << std::setprecision(9);
  for (const auto& r : rows) {
    out << r.id << ',' << (r.key ? r.key->to_string() : std::string()) << ',' << r.pc1 << ',' << r.pc2 << '\n';
  }
}

FifthsOrder fifths_ordering(const std::vector<EmbeddingRow>& rows) {
  FifthsOrder out;
  for (Mode mode : {Mode::kMajor, Mode::kMinor}) {
    std::array<double, 12> sx{};
    std::array<double, 12> sy{};
    std::array<int, 12> n{};
    for (const auto& r : rows) {
      if (!r.key || r.key->mode != mode) continue;
      const auto t = static_cast<std::size_t>(r.key->tonic);
      sx[t] += r.pc1;
      sy[t] += r.pc2;
      n[t] += 1;
    }
    if (std::any_of(n.begin(), n.end(), [](int c) { return c == 0; })) continue;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t t = 0; t < 12; ++t) {
      sx[t] /= n[t];
      sy[t] /= n[t];
      cx += sx[t] / 12.0;
      cy += sy[t] / 12.0;
    }
    std::vector<std::pair<double, int>> by_angle;
    for (int t = 0; t < 12; ++t) {
      const auto u = static_cast<std::size_t>(t);
      by_angle.emplace_back(std::atan2(sy[u] - cy, sx[u] - cx), t);
    }
    std::sort(by_angle.begin(), by_angle.end());
    for (std::size_t i = 0; i < by_angle.size(); ++i) {
      const int d = wrap12(by_angle[(i + 1) % by_angle.size()].second - by_angle[i].second);
      out.steps += 1;
      out.by_fifth += (d == 5 || d == 7) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace skey
