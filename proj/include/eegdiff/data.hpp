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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/matrix.hpp"
#include "eegdiff/windows.hpp"

namespace eegdiff {

struct SynthConfig {
  std::size_t classes = 10;        // K
  std::size_t per_class = 50;      // m
  std::size_t channels = 14;       // c
  std::size_t length = 128;        // t
  double snr = 4.0;                // signal power / noise power
  std::uint64_t template_seed = 1;
  std::size_t components = 3;      // sinusoids per class template
  std::size_t subjects = 6;
  double sampling_rate = 128.0;    // metadata only
  bool with_latents = false;
  std::size_t latent_h = 8;
  std::size_t latent_w = 8;
  std::size_t latent_ch = 4;
  double latent_noise = 0.5;

  void validate() const;
};

// K=10, c=14, t=128, SNR 4, labels only.
SynthConfig thoughtviz_like();
// K=40, c=128, t=440 with paired latents.
SynthConfig cvpr40_like();
std::optional<SynthConfig> preset(const std::string& name);

enum class Split : std::uint8_t { train = 0, validation = 1, test = 2, unassigned = 255 };
std::string_view to_string(Split split);

struct EegRecording {
  std::uint32_t id = 0;
  int label = 0;
  std::uint32_t subject = 0;
  Matrix signal;  // [t, c]

  friend bool operator==(const EegRecording&, const EegRecording&) = default;
};

struct Dataset {
  std::size_t classes = 0;
  std::size_t per_class = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  double sampling_rate = 0.0;
  bool normalized = false;
  std::vector<EegRecording> recordings;
  std::vector<Split> splits;  // one per recording
  // Optional paired toy latents, one [1, h*w*ch] row per recording, laid
  // out h-major then w then channel.
  std::vector<Matrix> latents;
  std::size_t latent_h = 0;
  std::size_t latent_w = 0;
  std::size_t latent_ch = 0;

  bool has_latents() const { return !latents.empty(); }
  std::size_t latent_size() const { return latent_h * latent_w * latent_ch; }
  std::vector<std::size_t> indices(Split split) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Class k recordings are a sum of k-specific multi-channel sinusoids with
// random phases per recording plus white noise at the requested SNR.
// Templates depend on cfg.template_seed only; recording draws on `seed`.
Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

// Mean per-recording signal-to-noise power ratio measured while generating,
// for validating the generator.
double measure_snr(const SynthConfig& cfg, std::uint64_t seed, std::size_t recordings);

// Stratified per-class assignment; fractions are train/validation/test.
void assign_splits(Dataset& dataset, std::array<double, 3> fractions, std::uint64_t seed);

struct NormalizeReport {
  std::size_t constant_channels = 0;
};
// Per-channel zero mean, unit (population) variance. Constant channels are
// set to zero and counted.
NormalizeReport normalize(Matrix& signal);
NormalizeReport normalize(Dataset& dataset);

// Keeps only recordings whose label is in `classes`, relabelled to
// 0..classes.size()-1 in the given order.
Dataset select_classes(const Dataset& dataset, std::span<const int> classes);

struct WindowSet {
  std::vector<Matrix> windows;
  std::vector<int> labels;
  std::vector<std::uint32_t> source_ids;
  std::vector<std::size_t> offsets;

  std::size_t size() const { return windows.size(); }
};

// Windows cut from the recordings of one split only.
WindowSet make_windows(const Dataset& dataset, Split split, const WindowSpec& spec);

// "BGN1" container. Little-endian:
//   "BGN1" u32 version(=1)
//   u32 K, u32 m, u32 c, u32 t, u32 flags, u32 n_recordings, f64 sampling_rate
//   [u32 latent_h, u32 latent_w, u32 latent_ch]          if flags & 1
//   n_recordings x { u32 id, i32 label, u32 subject, u8 split, f64[t*c] }
//   n_recordings x { f64[h*w*ch] }                       if flags & 1
// flags: bit0 latents present, bit1 normalized.
struct DatasetShape {
  std::size_t classes = 0;
  std::size_t per_class = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  bool latents = false;
};

DatasetShape shape_of(const Dataset& dataset);
std::vector<std::uint8_t> serialize_dataset(const Dataset& dataset);
Dataset deserialize_dataset(const std::vector<std::uint8_t>& bytes,
                            const DatasetShape* expected = nullptr);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path, const DatasetShape* expected = nullptr);

}  // namespace eegdiff
