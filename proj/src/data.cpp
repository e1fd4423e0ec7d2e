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

#include "eegdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "eegdiff/archive.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff {
namespace {

struct Component {
  double frequency;  // cycles per sample
  std::vector<double> pattern;  // unit-RMS spatial pattern over channels
};

std::vector<std::vector<Component>> class_templates(const SynthConfig& cfg) {
  RngStream rng(cfg.template_seed, 0x74656d706c617465ull);
  std::vector<std::vector<Component>> out(cfg.classes);
  for (auto& comps : out) {
    for (std::size_t j = 0; j < cfg.components; ++j) {
      Component c{rng.uniform(0.02, 0.2), std::vector<double>(cfg.channels)};
      double ss = 0.0;
      for (double& v : c.pattern) {
        v = rng.normal();
        ss += v * v;
      }
      const double rms = std::sqrt(ss / static_cast<double>(cfg.channels));
      for (double& v : c.pattern) v /= rms;
      comps.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<Matrix> latent_means(const SynthConfig& cfg) {
  RngStream rng(cfg.template_seed, 0x6c6174656e74ull);
  const std::size_t n = cfg.latent_h * cfg.latent_w * cfg.latent_ch;
  std::vector<Matrix> out;
  for (std::size_t k = 0; k < cfg.classes; ++k) {
    Matrix mu(1, n);
    for (double& v : mu.values) v = rng.normal();
    out.push_back(std::move(mu));
  }
  return out;
}

// Signal and noise parts of one recording.
std::pair<Matrix, Matrix> draw_recording(const SynthConfig& cfg,
                                         const std::vector<Component>& comps, RngStream& rng) {
  Matrix signal(cfg.length, cfg.channels);
  for (const auto& comp : comps) {
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < cfg.length; ++t) {
      const double s =
          std::sin(2.0 * std::numbers::pi * comp.frequency * static_cast<double>(t) + phase);
      for (std::size_t ch = 0; ch < cfg.channels; ++ch) signal(t, ch) += comp.pattern[ch] * s;
    }
  }
  // Each unit-RMS sinusoidal component carries power 1/2.
  const double signal_power = 0.5 * static_cast<double>(comps.size());
  const double sigma = std::isinf(cfg.snr) ? 0.0 : std::sqrt(signal_power / cfg.snr);
  Matrix noise(cfg.length, cfg.channels);
  for (double& v : noise.values) v = sigma * rng.normal();
  return {std::move(signal), std::move(noise)};
}

}  // namespace

void SynthConfig::validate() const {
  require(classes >= 2, ErrorKind::config, "synthetic data needs K >= 2 classes");
  require(per_class >= 4, ErrorKind::config, "synthetic data needs m >= 4 samples per class");
  require(channels >= 1 && length >= 1, ErrorKind::config, "channels and length must be positive");
  require(snr > 0.0, ErrorKind::config, "SNR must be positive");
  require(components >= 1, ErrorKind::config, "at least one template component is required");
  require(subjects >= 1, ErrorKind::config, "at least one subject is required");
  if (with_latents)
    require(latent_h >= 1 && latent_w >= 1 && latent_ch >= 1, ErrorKind::config,
            "latent dimensions must be positive");
}

SynthConfig thoughtviz_like() { return SynthConfig{}; }

SynthConfig cvpr40_like() {
  SynthConfig c;
  c.classes = 40;
  c.per_class = 50;
  c.channels = 128;
  c.length = 440;
  c.sampling_rate = 1000.0;
  c.with_latents = true;
  return c;
}

std::optional<SynthConfig> preset(const std::string& name) {
  if (name == "thoughtviz-like") return thoughtviz_like();
  if (name == "cvpr40-like") return cvpr40_like();
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unknown";
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == split) out.push_back(i);
  return out;
}

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto templates = class_templates(cfg);
  Dataset ds;
  ds.classes = cfg.classes;
  ds.per_class = cfg.per_class;
  ds.channels = cfg.channels;
  ds.length = cfg.length;
  ds.sampling_rate = cfg.sampling_rate;
  std::vector<Matrix> means;
  if (cfg.with_latents) {
    means = latent_means(cfg);
    ds.latent_h = cfg.latent_h;
    ds.latent_w = cfg.latent_w;
    ds.latent_ch = cfg.latent_ch;
  }
  RngStream root(seed, 0x73796e7468ull);
  for (std::size_t k = 0; k < cfg.classes; ++k) {
    // One stream per class keeps class k's draws independent of K.
    RngStream rng = root.split(k);
    for (std::size_t i = 0; i < cfg.per_class; ++i) {
      auto [signal, noise] = draw_recording(cfg, templates[k], rng);
      for (std::size_t j = 0; j < signal.size(); ++j) signal.values[j] += noise.values[j];
      EegRecording rec;
      rec.id = static_cast<std::uint32_t>(ds.recordings.size());
      rec.label = static_cast<int>(k);
      rec.subject = static_cast<std::uint32_t>(rng.below(cfg.subjects));
      rec.signal = std::move(signal);
      ds.recordings.push_back(std::move(rec));
      if (cfg.with_latents) {
        Matrix y = means[k];
        for (double& v : y.values) v += cfg.latent_noise * rng.normal();
        ds.latents.push_back(std::move(y));
      }
    }
  }
  ds.splits.assign(ds.recordings.size(), Split::unassigned);
  return ds;
}

double measure_snr(const SynthConfig& cfg, std::uint64_t seed, std::size_t recordings) {
  cfg.validate();
  const auto templates = class_templates(cfg);
  RngStream rng(seed, 0x736e72ull);
  double ratio_sum = 0.0;
  for (std::size_t r = 0; r < recordings; ++r) {
    auto [signal, noise] = draw_recording(cfg, templates[r % cfg.classes], rng);
    double ps = 0.0, pn = 0.0;
    for (double v : signal.values) ps += v * v;
    for (double v : noise.values) pn += v * v;
    ratio_sum += ps / pn;
  }
  return ratio_sum / static_cast<double>(recordings);
}

void assign_splits(Dataset& dataset, std::array<double, 3> fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    require(f >= 0.0, ErrorKind::protocol, "split fractions must be non-negative");
    total += f;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorKind::protocol, "split fractions must sum to 1");
  const std::size_t active = static_cast<std::size_t>(
      std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));
  RngStream root(seed, 0x73706c6974ull);
  dataset.splits.assign(dataset.recordings.size(), Split::unassigned);
  std::vector<int> labels;
  for (const auto& r : dataset.recordings) labels.push_back(r.label);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (int label : labels) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.recordings.size(); ++i)
      if (dataset.recordings[i].label == label) members.push_back(i);
    require(members.size() >= active, ErrorKind::protocol,
            "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                " recordings, fewer than the " + std::to_string(active) + " requested splits");
    RngStream rng = root.split(static_cast<std::uint64_t>(label));
    rng.shuffle(std::span<std::size_t>(members));
    // Largest-remainder rounding keeps every split within one recording of
    // its exact share.
    const double n = static_cast<double>(members.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = fractions[s] * n;
      counts[s] = static_cast<std::size_t>(std::floor(exact));
      remainder[s] = exact - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    while (assigned < members.size()) {
      int best = 0;
      for (int s = 1; s < 3; ++s)
        if (remainder[s] > remainder[best]) best = s;
      ++counts[best];
      remainder[best] = -1.0;
      ++assigned;
    }
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t j = 0; j < counts[s]; ++j)
        dataset.splits[members[pos++]] = static_cast<Split>(s);
  }
}

NormalizeReport normalize(Matrix& signal) {
  NormalizeReport report;
  const std::size_t t = signal.rows, c = signal.cols;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean = 0.0;
    for (std::size_t i = 0; i < t; ++i) mean += signal(i, ch);
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (std::size_t i = 0; i < t; ++i) var += (signal(i, ch) - mean) * (signal(i, ch) - mean);
    var /= static_cast<double>(t);
    if (var <= 1e-24 * std::max(1.0, mean * mean)) {
      for (std::size_t i = 0; i < t; ++i) signal(i, ch) = 0.0;
      ++report.constant_channels;
      continue;
    }
    const double inv = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < t; ++i) signal(i, ch) = (signal(i, ch) - mean) * inv;
  }
  return report;
}

NormalizeReport normalize(Dataset& dataset) {
  NormalizeReport total;
  for (auto& r : dataset.recordings) total.constant_channels += normalize(r.signal).constant_channels;
  dataset.normalized = true;
  return total;
}

Dataset select_classes(const Dataset& dataset, std::span<const int> classes) {
  Dataset out = dataset;
  out.recordings.clear();
  out.splits.clear();
  out.latents.clear();
  out.classes = classes.size();
  for (std::size_t i = 0; i < dataset.recordings.size(); ++i) {
    auto it = std::find(classes.begin(), classes.end(), dataset.recordings[i].label);
    if (it == classes.end()) continue;
    EegRecording r = dataset.recordings[i];
    r.label = static_cast<int>(it - classes.begin());
    out.recordings.push_back(std::move(r));
    out.splits.push_back(dataset.splits[i]);
    if (dataset.has_latents()) out.latents.push_back(dataset.latents[i]);
  }
  return out;
}

WindowSet make_windows(const Dataset& dataset, Split split, const WindowSpec& spec) {
  WindowSet out;
  for (std::size_t i = 0; i < dataset.recordings.size(); ++i) {
    if (dataset.splits[i] != split) continue;
    const auto& rec = dataset.recordings[i];
    for (auto& seg : segment(rec.signal, spec)) {
      out.windows.push_back(std::move(seg.samples));
      out.labels.push_back(rec.label);
      out.source_ids.push_back(rec.id);
      out.offsets.push_back(seg.offset);
    }
  }
  return out;
}

DatasetShape shape_of(const Dataset& d) {
  return {d.classes, d.per_class, d.channels, d.length, d.has_latents()};
}

namespace {

std::string describe(const DatasetShape& s) {
  return "K=" + std::to_string(s.classes) + " m=" + std::to_string(s.per_class) +
         " c=" + std::to_string(s.channels) + " t=" + std::to_string(s.length) +
         " latents=" + (s.latents ? "yes" : "no");
}

}  // namespace

std::vector<std::uint8_t> serialize_dataset(const Dataset& d) {
  require(d.splits.size() == d.recordings.size(), ErrorKind::contract,
          "dataset needs one split tag per recording");
  ByteWriter w;
  w.raw("BGN1", 4);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(d.classes));
  w.u32(static_cast<std::uint32_t>(d.per_class));
  w.u32(static_cast<std::uint32_t>(d.channels));
  w.u32(static_cast<std::uint32_t>(d.length));
  w.u32((d.has_latents() ? 1u : 0u) | (d.normalized ? 2u : 0u));
  w.u32(static_cast<std::uint32_t>(d.recordings.size()));
  w.f64(d.sampling_rate);
  if (d.has_latents()) {
    w.u32(static_cast<std::uint32_t>(d.latent_h));
    w.u32(static_cast<std::uint32_t>(d.latent_w));
    w.u32(static_cast<std::uint32_t>(d.latent_ch));
  }
  for (std::size_t i = 0; i < d.recordings.size(); ++i) {
    const auto& r = d.recordings[i];
    require(r.signal.rows == d.length && r.signal.cols == d.channels, ErrorKind::contract,
            "recording " + std::to_string(r.id) + " does not match the dataset shape");
    w.u32(r.id);
    w.i32(r.label);
    w.u32(r.subject);
    w.u8(static_cast<std::uint8_t>(d.splits[i]));
    for (double v : r.signal.values) w.f64(v);
  }
  for (const auto& y : d.latents) {
    require(y.size() == d.latent_size(), ErrorKind::contract, "latent size mismatch");
    for (double v : y.values) w.f64(v);
  }
  return std::move(w.bytes());
}

Dataset deserialize_dataset(const std::vector<std::uint8_t>& bytes, const DatasetShape* expected) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "BGN1", 4) != 0)
    fail(ErrorKind::format, "bad magic at byte offset 0: expected BGN1");
  const std::uint32_t version = r.u32();
  if (version != 1)
    fail(ErrorKind::format, "unsupported BGN1 version " + std::to_string(version) +
                                " at byte offset 4");
  Dataset d;
  d.classes = r.u32();
  d.per_class = r.u32();
  d.channels = r.u32();
  d.length = r.u32();
  const std::uint32_t flags = r.u32();
  const std::uint32_t n = r.u32();
  d.sampling_rate = r.f64();
  d.normalized = (flags & 2u) != 0;
  const bool latents = (flags & 1u) != 0;
  if (latents) {
    d.latent_h = r.u32();
    d.latent_w = r.u32();
    d.latent_ch = r.u32();
  }
  if (expected) {
    const DatasetShape found{d.classes, d.per_class, d.channels, d.length, latents};
    if (found.classes != expected->classes || found.per_class != expected->per_class ||
        found.channels != expected->channels || found.length != expected->length ||
        found.latents != expected->latents)
      fail(ErrorKind::format, "dataset shape mismatch: file has " + describe(found) +
                                  " but expected " + describe(*expected));
  }
  const std::size_t payload = d.length * d.channels;
  for (std::uint32_t i = 0; i < n; ++i) {
    EegRecording rec;
    rec.id = r.u32();
    rec.label = r.i32();
    rec.subject = r.u32();
    const std::size_t split_offset = r.offset();
    const std::uint8_t split = r.u8();
    if (split > 2 && split != 255)
      fail(ErrorKind::format, "invalid split tag " + std::to_string(split) + " at byte offset " +
                                  std::to_string(split_offset));
    if (payload * 8 > r.remaining())
      fail(ErrorKind::format, "truncated payload for recording " + std::to_string(rec.id) +
                                  " at byte offset " + std::to_string(r.offset()));
    rec.signal = Matrix(d.length, d.channels);
    for (double& v : rec.signal.values) v = r.f64();
    d.recordings.push_back(std::move(rec));
    d.splits.push_back(static_cast<Split>(split));
  }
  if (latents) {
    for (std::uint32_t i = 0; i < n; ++i) {
      Matrix y(1, d.latent_size());
      for (double& v : y.values) v = r.f64();
      d.latents.push_back(std::move(y));
    }
  }
  if (r.remaining() != 0)
    fail(ErrorKind::format, "trailing bytes at byte offset " + std::to_string(r.offset()));
  return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_file(path, serialize_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path, const DatasetShape* expected) {
  return deserialize_dataset(read_file(path), expected);
}

}  // namespace eegdiff
