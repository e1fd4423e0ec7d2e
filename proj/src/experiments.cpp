// Copyright 2026 The eegdiff Authors. All Rights Reserved.
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

#include "eegdiff/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "eegdiff/config.hpp"
#include "eegdiff/errors.hpp"

namespace eegdiff {

std::size_t epochs_for_visits(std::size_t visits, std::size_t windows) {
  require(windows > 0, ErrorKind::protocol, "no training windows");
  return std::max<std::size_t>(1, (visits + windows - 1) / windows);
}

RepresentationReport evaluate_representation(const SpatioTemporalEncoder& encoder,
                                             const Dataset& dataset, const WindowSpec& windows,
                                             const RepresentationEvalConfig& config) {
  const WindowSet train = make_windows(dataset, Split::train, windows);
  const WindowSet test = make_windows(dataset, Split::test, windows);
  require(train.size() > 0 && test.size() > 0, ErrorKind::protocol,
          "representation eval needs train and test windows");
  const Matrix ztr = encoder.embed(train.windows);
  const Matrix zte = encoder.embed(test.windows);
  RepresentationReport r;
  r.train_windows = train.size();
  r.test_windows = test.size();
  r.kmeans = kmeans_accuracy(zte, test.labels, config.seed);
  HeadTrainConfig head = config.head;
  head.seed = config.seed;
  const int max_label = *std::max_element(train.labels.begin(), train.labels.end());
  const int max_test = *std::max_element(test.labels.begin(), test.labels.end());
  const auto classes = static_cast<std::size_t>(std::max(max_label, max_test) + 1);
  const ClassifierHead h = train_classifier_head(ztr, train.labels, classes, head);
  r.classification = classification_accuracy(h, zte, test.labels);
  r.knn = knn_accuracy(ztr, train.labels, zte, test.labels, config.knn_k);
  return r;
}

std::string AblationCell::modules() const {
  if (temporal_layers > 0 && spatial_layers > 0) return "spatio-temporal";
  return temporal_layers > 0 ? "temporal" : "spatial";
}

std::string AblationCell::key() const {
  return std::to_string(temporal_layers) + "x" + std::to_string(temporal_heads) + "/" +
         std::to_string(spatial_layers) + "x" + std::to_string(spatial_heads) + "/t" +
         std::to_string(window_len) + "/s" + std::to_string(stride);
}

AblationGrid make_ablation_grid(std::span<const std::pair<std::size_t, std::size_t>> temporal,
                                std::span<const std::pair<std::size_t, std::size_t>> spatial,
                                std::span<const std::size_t> window_lens, std::size_t stride) {
  require(!window_lens.empty(), ErrorKind::config, "sweep needs at least one sequence length");
  require(!temporal.empty() || !spatial.empty(), ErrorKind::config,
          "sweep needs a temporal or spatial module setting");
  const std::vector<std::pair<std::size_t, std::size_t>> off{{0, 1}};
  const auto ts = temporal.empty() ? std::span(off) : temporal;
  const auto ss = spatial.empty() ? std::span(off) : spatial;
  AblationGrid grid;
  std::set<std::string> seen;
  for (const auto& [tl, th] : ts)
    for (const auto& [sl, sh] : ss)
      for (std::size_t len : window_lens) {
        AblationCell c{tl, th, sl, sh, len, stride};
        if (c.stride == 0) c.stride = std::max<std::size_t>(1, std::min<std::size_t>(len / 2, 32));
        if (!seen.insert(c.key()).second) {
          grid.warnings.push_back("duplicate cell " + c.key() + " dropped");
          continue;
        }
        grid.cells.push_back(c);
      }
  return grid;
}

namespace {

AblationRow run_cell(const Dataset& dataset, const AblationCell& cell,
                     const AblationSettings& settings, std::size_t index) {
  AblationRow row;
  row.cell = cell;
  EncoderConfig ec = settings.base;
  ec.temporal_layers = cell.temporal_layers;
  ec.temporal_heads = cell.temporal_heads;
  ec.spatial_layers = cell.spatial_layers;
  ec.spatial_heads = cell.spatial_heads;
  ec.window_len = cell.window_len;
  ec.channels = dataset.channels;
  const WindowSpec spec{cell.window_len, cell.stride};
  try {
    ec.validate();
    spec.validate(dataset.length);
  } catch (const Error& e) {
    row.reason = e.what();
    return row;
  }
  const WindowSet train = make_windows(dataset, Split::train, spec);
  ContrastiveConfig cc = settings.training;
  if (settings.visits > 0) cc.epochs = epochs_for_visits(settings.visits, train.size());
  SpatioTemporalEncoder encoder(ec, cc.seed);
  const auto trained = train_contrastive(encoder, train.windows, train.labels, cc);
  row.epochs = cc.epochs;
  if (!settings.output_root.empty()) {
    const auto dir = settings.output_root / ("cell_" + std::to_string(index));
    std::filesystem::create_directories(dir);
    auto values = ec.to_map();
    values["window.length"] = std::to_string(spec.window_len);
    values["window.stride"] = std::to_string(spec.stride);
    values["train.epochs"] = std::to_string(cc.epochs);
    std::ofstream(dir / "cell.conf", std::ios::binary) << format_config(values);
    write_loss_csv(dir / "loss.csv", trained.curve);
  }
  row.report = evaluate_representation(encoder, dataset, spec, settings.eval);
  row.ran = true;
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::vector<AblationRow> run_ablation(const Dataset& dataset, std::span<const AblationCell> cells,
                                      const AblationSettings& settings,
                                      const AblationCallback& on_row) {
  require(settings.workers >= 1, ErrorKind::config, "ablation needs at least one worker");
  std::vector<AblationRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        rows[i] = run_cell(dataset, cells[i], settings, i);
      } catch (...) {
        std::lock_guard lock(report_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
      if (on_row) {
        std::lock_guard lock(report_mutex);
        on_row(i, rows[i]);
      }
    }
  };
  const std::size_t n = std::min(settings.workers, std::max<std::size_t>(cells.size(), 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const AblationRow> rows) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::config, "cannot write " + path.string());
  out << "modules,n_lt,n_ht,n_ls,n_hs,seq_len,stride,epochs,kmeans_acc,classification_acc,"
         "knn_acc,status,reason\n";
  for (const auto& r : rows) {
    const auto& c = r.cell;
    out << c.modules() << ',' << c.temporal_layers << ',' << c.temporal_heads << ','
        << c.spatial_layers << ',' << c.spatial_heads << ',' << c.window_len << ',' << c.stride
        << ',' << r.epochs << ',';
    if (r.ran)
      out << format_real(r.report.kmeans) << ',' << format_real(r.report.classification) << ','
          << format_real(r.report.knn) << ",ok,\n";
    else
      out << ",,,skipped," << csv_field(r.reason) << '\n';
  }
}

std::vector<Matrix> tokenize_recordings(const Dataset& dataset,
                                        std::span<const std::size_t> indices,
                                        const WindowSpec& windows,
                                        const SpatioTemporalEncoder& encoder) {
  std::vector<Matrix> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto& rec = dataset.recordings.at(i);
    out.push_back(tokenize(rec.signal, windows, encoder, rec.id).tokens);
  }
  return out;
}

Matrix stack_latents(const Dataset& dataset, std::span<const std::size_t> indices) {
  require(dataset.has_latents(), ErrorKind::config, "dataset has no image latents");
  Matrix out(indices.size(), dataset.latent_size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Matrix& z = dataset.latents.at(indices[r]);
    std::copy(z.values.begin(), z.values.end(), out.values.begin() + r * out.cols);
  }
  return out;
}

std::vector<int> labels_at(const Dataset& dataset, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(dataset.recordings.at(i).label);
  return out;
}

GenerationReport score_generation(const FeatureExtractor& extractor, const Matrix& generated,
                                  std::span<const int> conditioning_labels, const Matrix& real) {
  require(generated.rows == conditioning_labels.size(), ErrorKind::contract,
          "one conditioning label per generated latent");
  GenerationReport r;
  r.generated = generated.rows;
  r.real = real.rows;
  const auto predicted = extractor.predict(generated);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == conditioning_labels[i];
  r.class_match = static_cast<double>(hits) / static_cast<double>(predicted.size());
  r.inception = inception_score(extractor.probabilities(generated));
  r.fid = fid(extractor.features(real), extractor.features(generated), &r.fid_diagnostics);
  return r;
}

}  // namespace eegdiff
