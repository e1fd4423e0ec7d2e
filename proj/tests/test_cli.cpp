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

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eegdiff/archive.hpp"
#include "eegdiff/cli.hpp"
#include "eegdiff/config.hpp"
#include "eegdiff/errors.hpp"

using namespace eegdiff;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string log, err;
};

Run cli_run(std::vector<std::string> args) {
  std::ostringstream log, err;
  Run r;
  r.code = cli::run(args, log, err);
  r.log = log.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 4 classes x 12 recordings with latents.
std::string make_data(const fs::path& dir) {
  const auto r = cli_run({"gen-data", "-o", (dir / "data").string(), "-s", "data.classes=4", "-s",
                          "data.per_class=12", "-s", "data.latents=true"});
  REQUIRE(r.code == 0);
  return (dir / "data" / "dataset.bgn").string();
}

std::string make_encoder(const fs::path& dir, const std::string& data) {
  const auto r = cli_run({"train-encoder", "--data", data, "-o", (dir / "enc").string(), "-s",
                          "encoder.latent_dim=16", "-s", "train.epochs=1"});
  REQUIRE(r.code == 0);
  return (dir / "enc" / "encoder.bgnt").string();
}

}  // namespace

TEST_CASE("help and version exit 0, usage errors exit 2") {
  CHECK(cli_run({"--help"}).code == 0);
  CHECK(cli_run({"--version"}).log == cli::version() + "\n");
  CHECK(cli_run({}).code == 2);
  CHECK(cli_run({"no-such-command"}).code == 2);
  CHECK(cli_run({"gen-data", "--bogus-flag"}).code == 2);
}

TEST_CASE("config precedence and unknown keys") {
  ConfigMap file{{"seed", "5"}, {"train.epochs", "3"}};
  ConfigMap over{{"seed", "9"}};
  const auto cfg = cli::resolve_config(file, over);
  CHECK(cfg.at("seed") == "9");
  CHECK(cfg.at("train.epochs") == "3");
  CHECK(cfg.at("window.length") == "32");

  ConfigMap recipe{{"train.recipe", "zero-shot-desk"}};
  const auto zs = cli::resolve_config(recipe, {});
  CHECK(zs.at("encoder.spatial_layers") == "2");
  // file beats recipe
  ConfigMap recipe_file{{"train.recipe", "zero-shot-desk"}, {"train.epochs", "7"}};
  CHECK(cli::resolve_config(recipe_file, {}).at("train.epochs") == "7");

  CHECK_THROWS_AS(cli::resolve_config({{"train.epoch", "3"}}, {}), Error);
  CHECK_THROWS_AS(cli::recipe_config("no-such-recipe"), Error);

  TempDir tmp("eegdiff_cli_keys");
  const auto r = cli_run({"gen-data", "-o", tmp.path.string(), "-s", "data.clases=4"});
  CHECK(r.code == 2);
  CHECK(r.err.find("kind=config") != std::string::npos);
}

TEST_CASE("config file is read and the resolved snapshot is written") {
  TempDir tmp("eegdiff_cli_snapshot");
  const auto conf = tmp.path / "run.conf";
  std::ofstream(conf) << "# comment\nseed = 11\ndata.classes=3\ndata.per_class=4\n";
  const auto r = cli_run({"gen-data", "-c", conf.string(), "-o", (tmp.path / "out").string(),
                          "-s", "data.per_class=6"});
  REQUIRE(r.code == 0);
  const auto snap = parse_config_text(slurp(tmp.path / "out" / "config.resolved"), "snapshot");
  CHECK(snap.at("seed") == "11");
  CHECK(snap.at("data.classes") == "3");
  CHECK(snap.at("data.per_class") == "6");
  CHECK(snap.at("tool.command") == "gen-data");
  CHECK(snap.at("tool.version") == cli::version());
  CHECK(r.log.find("cmd=gen-data event=start") != std::string::npos);
  CHECK(r.log.find("cmd=gen-data event=done") != std::string::npos);

  CHECK(cli_run({"gen-data", "-c", (tmp.path / "missing.conf").string(), "-o",
                 (tmp.path / "m").string()})
            .code == 2);
}

TEST_CASE("numeric failures exit 3") {
  TempDir tmp("eegdiff_cli_numeric");
  const auto r = cli_run({"gradcheck", "-o", tmp.path.string(), "-s", "gradcheck.trials=1", "-s",
                          "gradcheck.tolerance=1e-300"});
  CHECK(r.code == 3);
  CHECK(fs::exists(tmp.path / "gradcheck.csv"));
  CHECK(cli_run({"gradcheck", "-o", tmp.path.string(), "-s", "gradcheck.trials=1"}).code == 0);
}

TEST_CASE("eval and diffusion contract errors") {
  TempDir tmp("eegdiff_cli_contract");
  const auto data = make_data(tmp.path);
  const auto enc = make_encoder(tmp.path, data);

  auto ok = cli_run({"eval", "--data", data, "--encoder", enc, "-o",
                     (tmp.path / "eval").string(), "-s", "eval.head_epochs=2"});
  CHECK(ok.code == 0);
  const auto metrics = slurp(tmp.path / "eval" / "metrics.csv");
  CHECK(metrics.rfind("metric,value,k,m,seed,config_fingerprint,checkpoint_hash\n", 0) == 0);
  CHECK(metrics.find("kmeans_accuracy") != std::string::npos);

  // k must equal the number of classes in the evaluated split
  CHECK(cli_run({"eval", "--data", data, "--encoder", enc, "-o", (tmp.path / "e2").string(), "-s",
                 "eval.k=7"})
            .code == 2);
  // denoiser token width must match the encoder latent width
  CHECK(cli_run({"train-diffusion", "--data", data, "--encoder", enc, "-o",
                 (tmp.path / "d").string(), "-s", "denoiser.token_dim=32", "-s",
                 "diffusion.steps=2"})
            .code == 2);
  // held-out class outside the label range
  CHECK(cli_run({"zero-shot", "--data", data, "-o", (tmp.path / "z").string(), "-s",
                 "zeroshot.held_out=9"})
            .code == 2);
  CHECK(cli_run({"eval", "--data", (tmp.path / "none.bgn").string(), "--encoder", enc, "-o",
                 (tmp.path / "e3").string()})
            .code == 2);
}

TEST_CASE("ablate drops duplicates with a warning and skips illegal cells") {
  TempDir tmp("eegdiff_cli_ablate");
  const auto data = make_data(tmp.path);
  const auto r = cli_run({"ablate", "--data", data, "-o", (tmp.path / "ab").string(), "-s",
                          "ablate.temporal=1x2,1x2,1x3", "-s", "ablate.seq_lens=16,999", "-s",
                          "ablate.workers=2", "-s", "encoder.latent_dim=16", "-s",
                          "train.epochs=1", "-s", "eval.head_epochs=2"});
  REQUIRE(r.code == 0);
  CHECK(r.log.find("event=warning") != std::string::npos);
  CHECK(r.log.find("event=cell_skipped") != std::string::npos);
  std::istringstream csv(slurp(tmp.path / "ab" / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line ==
        "modules,n_lt,n_ht,n_ls,n_hs,seq_len,stride,epochs,kmeans_acc,classification_acc,"
        "knn_acc,status,reason");
  std::size_t ran = 0, skipped = 0;
  while (std::getline(csv, line)) {
    if (line.find(",ok,") != std::string::npos) ++ran;
    if (line.find(",skipped,") != std::string::npos) ++skipped;
  }
  // 1x2 and 1x3 over two lengths: only 1x2 at l=16 is legal
  CHECK(ran == 1);
  CHECK(skipped == 3);
}
