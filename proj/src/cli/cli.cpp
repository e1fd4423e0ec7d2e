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

#include "eegdiff/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "eegdiff/archive.hpp"
#include "eegdiff/clddm.hpp"
#include "eegdiff/data.hpp"
#include "eegdiff/encoder.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/eval.hpp"
#include "eegdiff/experiments.hpp"
#include "eegdiff/grad_suite.hpp"
#include "eegdiff/kernels.hpp"
#include "eegdiff/triplet.hpp"
#include "eegdiff/windows.hpp"

#ifndef EEGDIFF_VERSION
#define EEGDIFF_VERSION "0.0.0"
#endif

namespace eegdiff::cli {
namespace fs = std::filesystem;

std::string version() { return EEGDIFF_VERSION; }

ConfigMap default_config() {
  ConfigMap m{
      {"seed", "1"},
      {"out", "out"},
      {"data.path", ""},
      {"data.preset", "thoughtviz-like"},
      {"data.classes", ""},
      {"data.per_class", ""},
      {"data.channels", ""},
      {"data.length", ""},
      {"data.snr", ""},
      {"data.template_seed", ""},
      {"data.latents", ""},
      {"data.normalize", "true"},
      {"data.train_fraction", "0.8"},
      {"data.validation_fraction", "0.1"},
      {"data.test_fraction", "0.1"},
      {"window.length", "32"},
      {"window.stride", "16"},
      {"train.recipe", "none"},
      {"train.epochs", "15"},
      {"train.visits", "0"},
      {"train.lr", "0.001"},
      {"train.final_lr_fraction", "1"},
      {"train.margin_beta", "0.05"},
      {"train.semihard_alpha", "0.1"},
      {"train.batch_classes", "8"},
      {"train.batch_per_class", "4"},
      {"eval.k", "0"},
      {"eval.knn_k", "5"},
      {"eval.head_hidden", "64"},
      {"eval.head_epochs", "60"},
      {"eval.head_lr", "0.001"},
      {"eval.export_embeddings", "true"},
      {"zeroshot.held_out", "7,8,9"},
      {"checkpoint.encoder", ""},
      {"checkpoint.denoiser", ""},
      {"diffusion.timesteps", "50"},
      {"diffusion.steps", "1000"},
      {"diffusion.batch", "16"},
      {"diffusion.lr", "0.002"},
      {"diffusion.shuffle", "false"},
      {"diffusion.log_every", "100"},
      {"diffusion.sample_steps", "50"},
      {"diffusion.samples_per_recording", "1"},
      {"diffusion.extractor_hidden", "32"},
      {"diffusion.extractor_epochs", "80"},
      {"diffusion.gallery_per_class", "4"},
      {"ablate.temporal", "2x2,2x4,4x2,4x4"},
      {"ablate.spatial", "none"},
      {"ablate.seq_lens", "32"},
      {"ablate.stride", "0"},
      {"ablate.workers", "1"},
      {"ablate.visits", "0"},
      {"gradcheck.trials", "10"},
      {"gradcheck.tolerance", "0.0001"},
      {"kernels.isa", "auto"},
  };
  for (auto& [k, v] : EncoderConfig{}.to_map()) m[k] = v;
  m["encoder.channels"] = "auto";
  m["encoder.window_len"] = "auto";
  for (auto& [k, v] : DenoiserConfig{}.to_map()) m[k] = v;
  m["denoiser.latent_h"] = "auto";
  m["denoiser.latent_w"] = "auto";
  m["denoiser.latent_ch"] = "auto";
  m["denoiser.token_dim"] = "auto";
  return m;
}

ConfigMap recipe_config(const std::string& recipe) {
  // Desk epochs per recipe: cvpr40 1024/64, thoughtviz 4096/256, zero-shot 60/1.
  static const std::map<std::string, ConfigMap> recipes{
      {"none", {}},
      {"cvpr40",
       {{"encoder.temporal_layers", "2"}, {"encoder.temporal_heads", "4"},
        {"encoder.spatial_layers", "0"}, {"encoder.latent_dim", "128"},
        {"window.length", "32"}, {"train.epochs", "16"}}},
      {"thoughtviz",
       {{"encoder.temporal_layers", "2"}, {"encoder.temporal_heads", "2"},
        {"encoder.spatial_layers", "0"}, {"encoder.latent_dim", "128"},
        {"window.length", "32"}, {"train.epochs", "16"}}},
      {"zero-shot",
       {{"encoder.temporal_layers", "2"}, {"encoder.temporal_heads", "4"},
        {"encoder.spatial_layers", "0"}, {"encoder.latent_dim", "128"},
        {"window.length", "32"}, {"train.epochs", "60"}}},
      {"zero-shot-desk",
       {{"encoder.temporal_layers", "2"}, {"encoder.temporal_heads", "2"},
        {"encoder.spatial_layers", "2"}, {"encoder.spatial_heads", "2"},
        {"encoder.latent_dim", "128"}, {"encoder.dropout", "0.3"}, {"window.length", "32"},
        {"train.epochs", "60"}, {"train.final_lr_fraction", "0.05"}}},
      {"complex",
       {{"encoder.temporal_layers", "6"}, {"encoder.temporal_heads", "8"},
        {"encoder.spatial_layers", "6"}, {"encoder.spatial_heads", "8"},
        {"encoder.latent_dim", "1024"}, {"window.length", "64"}, {"train.epochs", "16"}}},
      {"simple",
       {{"encoder.temporal_layers", "2"}, {"encoder.temporal_heads", "4"},
        {"encoder.spatial_layers", "0"}, {"encoder.latent_dim", "1024"},
        {"window.length", "32"}, {"train.epochs", "16"}}},
  };
  const auto it = recipes.find(recipe);
  if (it == recipes.end()) {
    std::string names;
    for (const auto& [n, _] : recipes) names += (names.empty() ? "" : ", ") + n;
    fail(ErrorKind::config, "unknown train.recipe '" + recipe + "' (known: " + names + ")");
  }
  ConfigMap m = default_config();
  for (const auto& [k, v] : it->second) m[k] = v;
  m["train.recipe"] = recipe;
  return m;
}

ConfigMap resolve_config(const ConfigMap& file, const ConfigMap& overrides) {
  const ConfigMap defaults = default_config();
  for (const auto* layer : {&file, &overrides})
    for (const auto& [k, v] : *layer)
      require(defaults.count(k) != 0, ErrorKind::config, "unknown config key '" + k + "'");
  std::string recipe = "none";
  if (auto it = file.find("train.recipe"); it != file.end()) recipe = it->second;
  if (auto it = overrides.find("train.recipe"); it != overrides.end()) recipe = it->second;
  ConfigMap m = recipe_config(recipe);
  for (const auto* layer : {&file, &overrides})
    for (const auto& [k, v] : *layer) m[k] = v;
  return m;
}

namespace {

// ---- logging --------------------------------------------------------------

std::string quote(const std::string& v) {
  if (!v.empty() && v.find_first_of(" \t=\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

using Fields = std::vector<std::pair<std::string, std::string>>;

class Log {
 public:
  Log(std::ostream& os, std::string command) : os_(os), command_(std::move(command)) {}
  void event(const std::string& name, const Fields& fields = {}) {
    std::string line = fmt::format("cmd={} event={}", command_, name);
    for (const auto& [k, v] : fields) line += fmt::format(" {}={}", k, quote(v));
    os_ << line << '\n';
    os_.flush();
  }

 private:
  std::ostream& os_;
  std::string command_;
};

std::string num(double v) { return format_real(v); }
std::string num(std::size_t v) { return std::to_string(v); }

// ---- config access -------------------------------------------------------

bool is_auto(const ConfigMap& m, const std::string& key) {
  auto it = m.find(key);
  return it != m.end() && it->second == "auto";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> size_list(const ConfigMap& m, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(get_string(m, key, ""))) {
    ConfigMap one{{key, item}};
    out.push_back(get_size(one, key, 0));
  }
  return out;
}

std::vector<int> int_list(const ConfigMap& m, const std::string& key) {
  std::vector<int> out;
  for (auto v : size_list(m, key)) out.push_back(static_cast<int>(v));
  return out;
}

// "2x4,4x4" -> {(2,4),(4,4)}; "none" -> {}
std::vector<std::pair<std::size_t, std::size_t>> module_list(const ConfigMap& m,
                                                             const std::string& key) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::string text = get_string(m, key, "");
  if (text == "none" || text.empty()) return out;
  for (const auto& item : split_list(text)) {
    const auto x = item.find('x');
    require(x != std::string::npos, ErrorKind::config,
            key + ": expected <layers>x<heads>, got '" + item + "'");
    ConfigMap parts{{"l", item.substr(0, x)}, {"h", item.substr(x + 1)}};
    out.emplace_back(get_size(parts, "l", 0), get_size(parts, "h", 0));
  }
  return out;
}

fs::path out_dir(const ConfigMap& m) {
  const std::string out = get_string(m, "out", "");
  require(!out.empty(), ErrorKind::config, "out must name a directory");
  return out;
}

// ---- shared steps ----------------------------------------------------------

Dataset build_dataset(const ConfigMap& m, Log& log) {
  const std::uint64_t seed = get_u64(m, "seed", 1);
  const std::array<double, 3> fractions{get_real(m, "data.train_fraction", 0.8),
                                        get_real(m, "data.validation_fraction", 0.1),
                                        get_real(m, "data.test_fraction", 0.1)};
  Dataset ds;
  const std::string path = get_string(m, "data.path", "");
  if (!path.empty()) {
    ds = load_dataset(path);
    const bool unassigned = std::all_of(ds.splits.begin(), ds.splits.end(),
                                        [](Split s) { return s == Split::unassigned; });
    if (unassigned) assign_splits(ds, fractions, seed);
    log.event("dataset_loaded", {{"path", path}, {"recordings", num(ds.recordings.size())}});
  } else {
    const std::string name = get_string(m, "data.preset", "");
    auto sc = preset(name);
    require(sc.has_value(), ErrorKind::config,
            "unknown data.preset '" + name + "' (known: thoughtviz-like, cvpr40-like)");
    auto set = [&](const std::string& key, auto& field) {
      if (get_string(m, key, "").empty()) return;
      using T = std::decay_t<decltype(field)>;
      if constexpr (std::is_same_v<T, double>)
        field = get_real(m, key, field);
      else if constexpr (std::is_same_v<T, bool>)
        field = get_bool(m, key, field);
      else if constexpr (std::is_same_v<T, std::uint64_t>)
        field = get_u64(m, key, field);
      else
        field = get_size(m, key, field);
    };
    set("data.classes", sc->classes);
    set("data.per_class", sc->per_class);
    set("data.channels", sc->channels);
    set("data.length", sc->length);
    set("data.snr", sc->snr);
    set("data.template_seed", sc->template_seed);
    set("data.latents", sc->with_latents);
    ds = generate_synthetic(*sc, seed);
    assign_splits(ds, fractions, seed);
    log.event("dataset_generated", {{"preset", name},
                                    {"classes", num(ds.classes)},
                                    {"recordings", num(ds.recordings.size())},
                                    {"channels", num(ds.channels)},
                                    {"length", num(ds.length)}});
  }
  if (get_bool(m, "data.normalize", true) && !ds.normalized) {
    const auto report = normalize(ds);
    if (report.constant_channels > 0)
      log.event("warning", {{"message", "constant channels zeroed"},
                            {"count", num(report.constant_channels)}});
  }
  return ds;
}

WindowSpec window_spec(const ConfigMap& m) {
  return {get_size(m, "window.length", 32), get_size(m, "window.stride", 16)};
}

EncoderConfig encoder_config(const ConfigMap& m, const Dataset& ds) {
  ConfigMap e = m;
  if (is_auto(e, "encoder.channels")) e["encoder.channels"] = std::to_string(ds.channels);
  if (is_auto(e, "encoder.window_len")) e["encoder.window_len"] = e.at("window.length");
  EncoderConfig c = EncoderConfig::from_map(e);
  c.validate();
  require(c.channels == ds.channels, ErrorKind::config,
          fmt::format("encoder.channels={} does not match the dataset's {} channels", c.channels,
                      ds.channels));
  require(c.window_len == get_size(m, "window.length", 32), ErrorKind::config,
          "encoder.window_len must equal window.length");
  return c;
}

ContrastiveConfig contrastive_config(const ConfigMap& m) {
  ContrastiveConfig c;
  c.margin_beta = get_real(m, "train.margin_beta", c.margin_beta);
  c.semihard_alpha = get_real(m, "train.semihard_alpha", c.semihard_alpha);
  c.batch_classes = get_size(m, "train.batch_classes", c.batch_classes);
  c.batch_per_class = get_size(m, "train.batch_per_class", c.batch_per_class);
  c.epochs = get_size(m, "train.epochs", c.epochs);
  c.lr = get_real(m, "train.lr", c.lr);
  c.final_lr_fraction = get_real(m, "train.final_lr_fraction", c.final_lr_fraction);
  c.seed = get_u64(m, "seed", 1);
  c.validate();
  return c;
}

RepresentationEvalConfig eval_config(const ConfigMap& m) {
  RepresentationEvalConfig c;
  c.head.hidden = get_size(m, "eval.head_hidden", c.head.hidden);
  c.head.epochs = get_size(m, "eval.head_epochs", c.head.epochs);
  c.head.lr = get_real(m, "eval.head_lr", c.head.lr);
  c.knn_k = get_size(m, "eval.knn_k", c.knn_k);
  c.seed = get_u64(m, "seed", 1);
  return c;
}

std::string checkpoint_path(const ConfigMap& m, const std::string& key) {
  const std::string p = get_string(m, key, "");
  require(!p.empty(), ErrorKind::config, key + " must name a checkpoint file");
  require(fs::exists(p), ErrorKind::config, key + ": no such file '" + p + "'");
  return p;
}

SpatioTemporalEncoder load_frozen_encoder(const ConfigMap& m, const Dataset& ds,
                                          std::string* hash) {
  const std::string path = checkpoint_path(m, "checkpoint.encoder");
  SpatioTemporalEncoder enc = load_encoder(path);
  require(enc.config().channels == ds.channels, ErrorKind::config,
          fmt::format("encoder checkpoint expects {} channels, dataset has {}",
                      enc.config().channels, ds.channels));
  require(enc.config().window_len == get_size(m, "window.length", 32), ErrorKind::config,
          fmt::format("encoder checkpoint has window_len={} but window.length={}",
                      enc.config().window_len, get_size(m, "window.length", 32)));
  if (hash) *hash = git_blob_hash(read_file(path));
  return enc;
}

void write_snapshot(const fs::path& dir, const std::string& command, const ConfigMap& m) {
  fs::create_directories(dir);
  ConfigMap snap = m;
  snap["tool.command"] = command;
  snap["tool.version"] = version();
  std::ofstream out(dir / "config.resolved", std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::config, "cannot write into " + dir.string());
  out << "# resolved configuration\n" << format_config(snap);
}

void fresh_metrics(const fs::path& path, std::span<const MetricReport> rows) {
  fs::remove(path);
  append_metrics_csv(path, rows);
}

void log_metric(Log& log, const MetricReport& r) {
  log.event("metric", {{"metric", r.metric}, {"value", num(r.value)}, {"k", num(r.k)},
                       {"m", num(r.m)}});
}

// ---- commands -------------------------------------------------------------

void cmd_gen_data(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "gen-data", m);
  const Dataset ds = build_dataset(m, log);
  save_dataset(dir / "dataset.bgn", ds);
  std::ofstream csv(dir / "splits.csv", std::ios::binary);
  csv << "id,label,subject,split\n";
  for (std::size_t i = 0; i < ds.recordings.size(); ++i) {
    const auto& r = ds.recordings[i];
    csv << r.id << ',' << r.label << ',' << r.subject << ',' << to_string(ds.splits[i]) << '\n';
  }
  log.event("wrote", {{"path", (dir / "dataset.bgn").string()}});
}

void cmd_train_encoder(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "train-encoder", m);
  const Dataset ds = build_dataset(m, log);
  const EncoderConfig ec = encoder_config(m, ds);
  ContrastiveConfig cc = contrastive_config(m);
  const WindowSpec spec = window_spec(m);
  const WindowSet train = make_windows(ds, Split::train, spec);
  require(train.size() > 0, ErrorKind::protocol, "train split produced no windows");
  if (const auto visits = get_size(m, "train.visits", 0); visits > 0)
    cc.epochs = epochs_for_visits(visits, train.size());
  SpatioTemporalEncoder enc(ec, cc.seed);
  log.event("train_start", {{"windows", num(train.size())},
                            {"epochs", num(cc.epochs)},
                            {"parameters", num(enc.parameter_count())},
                            {"fingerprint", ec.fingerprint()}});
  const auto result = train_contrastive(enc, train.windows, train.labels, cc,
                                        [&](const EpochRecord& r) {
                                          log.event("epoch", {{"epoch", num(r.epoch)},
                                                              {"loss", num(r.mean_loss)},
                                                              {"triplets", num(r.n_triplets)}});
                                        });
  for (const auto& w : result.warnings) log.event("warning", {{"message", w}});
  save_encoder(dir / "encoder.bgnt", enc);
  write_loss_csv(dir / "loss.csv", result.curve);
  log.event("wrote", {{"path", (dir / "encoder.bgnt").string()},
                      {"checksum", enc.parameter_checksum()}});
}

void cmd_eval(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "eval", m);
  const Dataset ds = build_dataset(m, log);
  std::string hash;
  const SpatioTemporalEncoder enc = load_frozen_encoder(m, ds, &hash);
  const WindowSpec spec = window_spec(m);
  const auto ec = eval_config(m);
  const WindowSet train = make_windows(ds, Split::train, spec);
  const WindowSet test = make_windows(ds, Split::test, spec);
  require(train.size() > 0 && test.size() > 0, ErrorKind::protocol,
          "eval needs train and test windows");
  const Matrix ztr = enc.embed(train.windows);
  const Matrix zte = enc.embed(test.windows);
  const std::set<int> present(test.labels.begin(), test.labels.end());
  const std::size_t k = get_size(m, "eval.k", 0);
  require(k == 0 || k == present.size(), ErrorKind::input,
          fmt::format("eval.k={} but the test split holds {} classes", k, present.size()));
  const std::string fp = enc.config().fingerprint();
  const std::uint64_t seed = ec.seed;
  std::vector<MetricReport> rows;
  rows.push_back({"kmeans_accuracy", kmeans_accuracy(zte, test.labels, seed, present.size()),
                  present.size(), test.size(), seed, fp, hash});
  HeadTrainConfig head = ec.head;
  head.seed = seed;
  const ClassifierHead h = train_classifier_head(ztr, train.labels, ds.classes, head);
  rows.push_back({"classification_accuracy", classification_accuracy(h, zte, test.labels),
                  ds.classes, test.size(), seed, fp, hash});
  rows.push_back({"knn_accuracy", knn_accuracy(ztr, train.labels, zte, test.labels, ec.knn_k),
                  ec.knn_k, test.size(), seed, fp, hash});
  for (const auto& r : rows) log_metric(log, r);
  fresh_metrics(dir / "metrics.csv", rows);
  if (get_bool(m, "eval.export_embeddings", true)) {
    std::ofstream out(dir / "embeddings.csv", std::ios::binary);
    out << "source_id,offset,label";
    for (std::size_t j = 0; j < zte.cols; ++j) out << ",z" << j;
    out << '\n';
    for (std::size_t i = 0; i < zte.rows; ++i) {
      out << test.source_ids[i] << ',' << test.offsets[i] << ',' << test.labels[i];
      for (double v : zte.row(i)) out << ',' << format_real(v);
      out << '\n';
    }
  }
}

void cmd_zero_shot(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "zero-shot", m);
  const Dataset ds = build_dataset(m, log);
  const std::vector<int> held = int_list(m, "zeroshot.held_out");
  require(!held.empty(), ErrorKind::protocol, "zeroshot.held_out is empty");
  for (int c : held)
    require(static_cast<std::size_t>(c) < ds.classes, ErrorKind::protocol,
            fmt::format("held-out class {} does not exist in a {}-class dataset", c, ds.classes));
  ZeroShotConfig zc;
  zc.encoder = encoder_config(m, ds);
  zc.training = contrastive_config(m);
  zc.windows = window_spec(m);
  zc.knn_k = get_size(m, "eval.knn_k", 5);
  zc.seed = get_u64(m, "seed", 1);
  log.event("zero_shot_start", {{"held_out", get_string(m, "zeroshot.held_out", "")},
                                {"epochs", num(zc.training.epochs)}});
  const auto result = zero_shot_protocol(ds, held, zc);
  write_loss_csv(dir / "loss.csv", result.training.curve);
  const std::vector<MetricReport> rows{result.kmeans, result.knn};
  for (const auto& r : rows) log_metric(log, r);
  fresh_metrics(dir / "metrics.csv", rows);
}

DenoiserConfig denoiser_config(const ConfigMap& m, const Dataset& ds, std::size_t token_dim) {
  ConfigMap d = m;
  if (is_auto(d, "denoiser.latent_h")) d["denoiser.latent_h"] = std::to_string(ds.latent_h);
  if (is_auto(d, "denoiser.latent_w")) d["denoiser.latent_w"] = std::to_string(ds.latent_w);
  if (is_auto(d, "denoiser.latent_ch")) d["denoiser.latent_ch"] = std::to_string(ds.latent_ch);
  if (is_auto(d, "denoiser.token_dim")) d["denoiser.token_dim"] = std::to_string(token_dim);
  DenoiserConfig c = DenoiserConfig::from_map(d);
  c.validate();
  require(c.token_dim == token_dim, ErrorKind::config,
          fmt::format("denoiser.token_dim={} does not match the encoder's d={}", c.token_dim,
                      token_dim));
  require(c.latent_size() == ds.latent_size(), ErrorKind::config,
          "denoiser latent shape does not match the dataset latents");
  return c;
}

void cmd_train_diffusion(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "train-diffusion", m);
  const Dataset ds = build_dataset(m, log);
  require(ds.has_latents(), ErrorKind::config, "train-diffusion needs a dataset with latents");
  std::string enc_hash;
  const SpatioTemporalEncoder enc = load_frozen_encoder(m, ds, &enc_hash);
  const std::string checksum = enc.parameter_checksum();
  const DenoiserConfig dc = denoiser_config(m, ds, enc.config().latent_dim);
  DiffusionTrainConfig tc;
  tc.timesteps = get_size(m, "diffusion.timesteps", tc.timesteps);
  tc.steps = get_size(m, "diffusion.steps", tc.steps);
  tc.batch = get_size(m, "diffusion.batch", tc.batch);
  tc.lr = get_real(m, "diffusion.lr", tc.lr);
  tc.seed = get_u64(m, "seed", 1);
  tc.shuffle_conditioning = get_bool(m, "diffusion.shuffle", false);
  tc.log_every = get_size(m, "diffusion.log_every", tc.log_every);
  tc.validate();
  const auto idx = ds.indices(Split::train);
  const auto tokens = tokenize_recordings(ds, idx, window_spec(m), enc);
  std::vector<Matrix> latents;
  for (auto i : idx) latents.push_back(ds.latents[i]);
  Denoiser den(dc, tc.seed);
  log.event("train_start", {{"recordings", num(idx.size())},
                            {"tokens_per_recording", num(tokens.front().rows)},
                            {"steps", num(tc.steps)},
                            {"shuffle", tc.shuffle_conditioning ? "true" : "false"}});
  const auto curve = train_diffusion(den, latents, tokens, tc, [&](const DiffusionLogRecord& r) {
    log.event("step", {{"step", num(r.step)}, {"loss", num(r.mean_loss)}});
  });
  require(enc.parameter_checksum() == checksum, ErrorKind::contract,
          "encoder parameters changed during diffusion training");
  TensorArchive a = denoiser_to_archive(den, tc.timesteps);
  a.meta["encoder.checksum"] = checksum;
  a.meta["encoder.window_len"] = std::to_string(enc.config().window_len);
  a.meta["window.stride"] = get_string(m, "window.stride", "16");
  save_archive(dir / "denoiser.bgnt", a);
  std::ofstream csv(dir / "diffusion_loss.csv", std::ios::binary);
  csv << "step,mean_loss\n";
  for (const auto& r : curve) csv << r.step << ',' << format_real(r.mean_loss) << '\n';
  log.event("wrote", {{"path", (dir / "denoiser.bgnt").string()}});
}

void cmd_generate(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "generate", m);
  const Dataset ds = build_dataset(m, log);
  require(ds.has_latents(), ErrorKind::config, "generate needs a dataset with latents");
  std::string enc_hash;
  const SpatioTemporalEncoder enc = load_frozen_encoder(m, ds, &enc_hash);
  const std::string den_path = checkpoint_path(m, "checkpoint.denoiser");
  const TensorArchive archive = load_archive(den_path);
  std::size_t timesteps = 0;
  const Denoiser den = denoiser_from_archive(archive, &timesteps);
  require(den.config().token_dim == enc.config().latent_dim, ErrorKind::config,
          fmt::format("denoiser expects d={} tokens but the encoder emits d={}",
                      den.config().token_dim, enc.config().latent_dim));
  if (const auto* cs = archive.meta.count("encoder.checksum") ? &archive.meta.at("encoder.checksum")
                                                              : nullptr)
    require(*cs == enc.parameter_checksum(), ErrorKind::config,
            "denoiser was trained against a different encoder checkpoint");
  require(den.config().latent_size() == ds.latent_size(), ErrorKind::config,
          "denoiser latent shape does not match the dataset latents");
  const std::uint64_t seed = get_u64(m, "seed", 1);
  const auto test_idx = ds.indices(Split::test);
  const auto train_idx = ds.indices(Split::train);
  require(!test_idx.empty() && !train_idx.empty(), ErrorKind::protocol,
          "generate needs train and test recordings");
  const auto base_tokens = tokenize_recordings(ds, test_idx, window_spec(m), enc);
  const auto base_labels = labels_at(ds, test_idx);
  const std::size_t reps = get_size(m, "diffusion.samples_per_recording", 1);
  require(reps >= 1, ErrorKind::config, "diffusion.samples_per_recording must be positive");
  std::vector<Matrix> tokens;
  std::vector<int> labels;
  for (std::size_t r = 0; r < reps; ++r) {
    tokens.insert(tokens.end(), base_tokens.begin(), base_tokens.end());
    labels.insert(labels.end(), base_labels.begin(), base_labels.end());
  }
  const auto schedule = NoiseSchedule::linear(timesteps);
  const Matrix generated = sample_batch(tokens, den, schedule,
                                        get_size(m, "diffusion.sample_steps", 50), seed);
  const FeatureExtractor fx(stack_latents(ds, train_idx), labels_at(ds, train_idx), ds.classes,
                            seed, get_size(m, "diffusion.extractor_hidden", 32),
                            get_size(m, "diffusion.extractor_epochs", 80));
  const auto report = score_generation(fx, generated, labels, stack_latents(ds, test_idx));
  if (report.fid_diagnostics.under_sampled)
    log.event("warning", {{"message", "fewer samples than feature dimensions; FID is noisy"}});
  const std::string fp = sha1_hex(format_config(den.config().to_map()).data(),
                                  format_config(den.config().to_map()).size())
                             .substr(0, 12);
  const std::string hash = git_blob_hash(read_file(den_path));
  const std::vector<MetricReport> rows{
      {"class_match_accuracy", report.class_match, ds.classes, report.generated, seed, fp, hash},
      {"is", report.inception, ds.classes, report.generated, seed, fp, hash},
      {"fid", report.fid, ds.classes, report.generated, seed, fp, hash}};
  for (const auto& r : rows) log_metric(log, r);
  fresh_metrics(dir / "metrics.csv", rows);
  save_archive(dir / "samples.bgnt", latents_to_archive(generated, labels, den.config()));
  const fs::path gallery = dir / "gallery";
  fs::create_directories(gallery);
  const std::size_t per_class = get_size(m, "diffusion.gallery_per_class", 4);
  std::map<int, std::size_t> written;
  for (std::size_t i = 0; i < generated.rows; ++i) {
    auto& n = written[labels[i]];
    if (n >= per_class) continue;
    const std::string stem = fmt::format("class{:02d}_{:02d}", labels[i], n++);
    write_pgm(gallery / (stem + ".pgm"), generated.row(i), den.config());
    write_ppm(gallery / (stem + ".ppm"), generated.row(i), den.config());
  }
}

void cmd_ablate(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "ablate", m);
  const Dataset ds = build_dataset(m, log);
  const auto temporal = module_list(m, "ablate.temporal");
  const auto spatial = module_list(m, "ablate.spatial");
  const auto lens = size_list(m, "ablate.seq_lens");
  const auto grid = make_ablation_grid(temporal, spatial, lens, get_size(m, "ablate.stride", 0));
  for (const auto& w : grid.warnings) log.event("warning", {{"message", w}});
  AblationSettings s;
  ConfigMap base = m;
  base["encoder.channels"] = std::to_string(ds.channels);
  base["encoder.window_len"] = "32";
  s.base = EncoderConfig::from_map(base);
  s.training = contrastive_config(m);
  s.visits = get_size(m, "ablate.visits", 0);
  s.eval = eval_config(m);
  s.workers = get_size(m, "ablate.workers", 1);
  s.output_root = dir / "cells";
  log.event("ablate_start", {{"cells", num(grid.cells.size())}, {"workers", num(s.workers)}});
  const auto rows = run_ablation(ds, grid.cells, s, [&](std::size_t i, const AblationRow& r) {
    if (r.ran)
      log.event("cell", {{"index", num(i)},
                         {"cell", r.cell.key()},
                         {"kmeans", num(r.report.kmeans)},
                         {"classification", num(r.report.classification)}});
    else
      log.event("cell_skipped", {{"index", num(i)}, {"cell", r.cell.key()}, {"reason", r.reason}});
  });
  write_sweep_csv(dir / "sweep.csv", rows);
}

void cmd_gradcheck(const ConfigMap& m, Log& log) {
  const fs::path dir = out_dir(m);
  write_snapshot(dir, "gradcheck", m);
  const double tol = get_real(m, "gradcheck.tolerance", 1e-4);
  const auto rows =
      run_gradient_suite(get_u64(m, "seed", 1), get_size(m, "gradcheck.trials", 10));
  write_gradcheck_csv(dir / "gradcheck.csv", rows, tol);
  std::size_t failed = 0;
  for (const auto& r : rows) {
    const bool ok = r.max_rel_error < tol;
    failed += !ok;
    log.event("check", {{"name", r.name},
                        {"max_rel_error", num(r.max_rel_error)},
                        {"checked", num(r.checked)},
                        {"pass", ok ? "1" : "0"}});
  }
  require(failed == 0, ErrorKind::numeric,
          fmt::format("{} gradient checks exceed tolerance {}", failed, format_real(tol)));
}

struct Command {
  const char* name;
  const char* help;
  void (*run)(const ConfigMap&, Log&);
};

constexpr Command kCommands[] = {
    {"gen-data", "Generate a synthetic dataset into <out>/dataset.bgn", cmd_gen_data},
    {"train-encoder", "Train the encoder with the semi-hard triplet objective",
     cmd_train_encoder},
    {"eval", "k-means, classification and KNN accuracy of a frozen encoder", cmd_eval},
    {"zero-shot", "Train on seen classes, cluster the held-out ones", cmd_zero_shot},
    {"train-diffusion", "Train the latent denoiser on frozen encoder tokens",
     cmd_train_diffusion},
    {"generate", "Sample latents for test recordings and score IS / FID", cmd_generate},
    {"ablate", "Module / sequence-length sweep on a worker pool", cmd_ablate},
    {"gradcheck", "Finite-difference gradient suite", cmd_gradcheck},
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log_stream, std::ostream& err) {
  CLI::App app{"EEG contrastive encoder and conditional latent diffusion toolkit", "eegdiff"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::string out, data, encoder, denoiser, seed;
  };
  std::map<std::string, Options> options;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    auto& o = options[c.name];
    sub->add_option("-c,--config", o.config, "key=value configuration file");
    sub->add_option("-s,--set", o.sets, "override, key=value (repeatable)");
    sub->add_option("-o,--out", o.out, "output directory (key out)");
    sub->add_option("--seed", o.seed, "seed (key seed)");
    sub->add_option("--data", o.data, "dataset file (key data.path)");
    sub->add_option("--encoder", o.encoder, "encoder checkpoint (key checkpoint.encoder)");
    sub->add_option("--denoiser", o.denoiser, "denoiser checkpoint (key checkpoint.denoiser)");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    log_stream << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    log_stream << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    log_stream << version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "event=error kind=usage message=" << quote(e.what()) << '\n';
    return 2;
  }

  const Command* command = nullptr;
  for (const auto& c : kCommands)
    if (app.got_subcommand(c.name)) command = &c;
  Log log(log_stream, command->name);
  try {
    const auto& o = options[command->name];
    ConfigMap file;
    if (!o.config.empty()) file = load_config_file(o.config);
    ConfigMap overrides;
    std::string text;
    for (const auto& s : o.sets) text += s + "\n";
    overrides = parse_config_text(text, "--set");
    if (!o.out.empty()) overrides["out"] = o.out;
    if (!o.seed.empty()) overrides["seed"] = o.seed;
    if (!o.data.empty()) overrides["data.path"] = o.data;
    if (!o.encoder.empty()) overrides["checkpoint.encoder"] = o.encoder;
    if (!o.denoiser.empty()) overrides["checkpoint.denoiser"] = o.denoiser;
    const ConfigMap cfg = resolve_config(file, overrides);
    if (const auto isa = get_string(cfg, "kernels.isa", "auto"); isa != "auto") {
      const auto parsed = kernels::parse_isa(isa);
      require(parsed.has_value(), ErrorKind::config, "kernels.isa must be auto, scalar or avx2");
      kernels::select(*parsed);
    }
    log.event("start", {{"version", version()},
                        {"isa", std::string(kernels::name(kernels::active().isa))},
                        {"out", get_string(cfg, "out", "")},
                        {"seed", get_string(cfg, "seed", "")}});
    command->run(cfg, log);
    log.event("done");
    return 0;
  } catch (const Error& e) {
    err << fmt::format("cmd={} event=error kind={} exit={} message={}\n", command->name,
                       to_string(e.kind()), exit_code_for(e.kind()), quote(e.what()));
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << fmt::format("cmd={} event=error kind=internal exit=2 message={}\n", command->name,
                       quote(e.what()));
    return 2;
  }
}

}  // namespace eegdiff::cli
