// Copyright (c) 2026, the phama authors. All rights reserved.
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phama/checkpoint.hpp"
#include "phama/config.hpp"
#include "phama/errors.hpp"
#include "phama/trainer.hpp"

using namespace phama;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "phama_trainer_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Three tiny domains so one can be held out while two remain as sources.
Config micro_cfg(const std::string& target) {
  Config c;
  c.set("data.classes", "2");
  c.set("data.samples_per_class", "10");
  c.set("data.image_size", "16");
  c.set("data.domains", "identity,colormap,texture");
  c.set("model.conv_blocks", "2");
  c.set("model.width", "4");
  c.set("model.proj_dim", "8");
  c.set("model.fusion_levels", "1,2");
  c.set("train.epochs", "2");
  c.set("train.batch_size", "8");
  c.set("train.ramp_epochs", "2");
  c.set("run.target_domain", target);
  return c;
}

}  // namespace

TEST_CASE("config defaults resolve for every schema key") {
  Config c;
  CHECK(c.get_int("train.batch_size") == 64);
  CHECK(c.get_double("train.lr") == doctest::Approx(0.05));
  CHECK(c.get_double("train.momentum_coef") == doctest::Approx(0.9995));
  CHECK(c.get_double("train.tau") == doctest::Approx(0.07));
  CHECK(c.get_bool("train.ramp"));
  CHECK(c.get_string("train.matching") == "patchnce");
  CHECK(c.get_string_list("data.domains").size() == 4);
  CHECK(c.get_int_list("eval.severities") == std::vector<int>{1, 2, 3, 4, 5});

  auto parsed = nlohmann::json::parse(c.resolved_json());
  for (const ConfigKeyInfo& k : config_schema()) {
    CAPTURE(k.key);
    CHECK(parsed.contains(k.key));
  }
  const std::string help = config_help_text();
  for (const ConfigKeyInfo& k : config_schema())
    CHECK(help.find(k.key) != std::string::npos);
}

TEST_CASE("config files accept comments and later overrides win") {
  fs::path dir = fresh_dir("cfg_file");
  {
    std::ofstream f(dir / "exp.cfg");
    f << "# experiment\n"
      << "train.eta = 0.2   # office-home-style\n"
      << "\n"
      << "train.epochs=5\n"
      << "run.target_domain = photo\n";
  }
  Config c = Config::from_file((dir / "exp.cfg").string());
  CHECK(c.get_double("train.eta") == doctest::Approx(0.2));
  CHECK(c.get_int("train.epochs") == 5);
  CHECK(c.get_string("run.target_domain") == "photo");

  c.apply_override("train.eta=0.7");
  CHECK(c.get_double("train.eta") == doctest::Approx(0.7));
  CHECK_THROWS_AS(c.apply_override("train.eta"), ConfigError);
}

TEST_CASE("unknown keys and malformed values carry the key path") {
  Config c;
  try {
    c.set("train.nope", "1");
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "train.nope");
    CHECK_MESSAGE(std::string(e.what()).find("unknown") != std::string::npos,
                  e.what());
  }
  CHECK_THROWS_AS(c.set("train.epochs", "abc"), ConfigError);
  CHECK_THROWS_AS(c.set("train.eta", "fast"), ConfigError);
  CHECK_THROWS_AS(c.set("train.ramp", "maybe"), ConfigError);

  fs::path dir = fresh_dir("cfg_bad");
  {
    std::ofstream f(dir / "bad.cfg");
    f << "train.nope = 1\n";
  }
  CHECK_THROWS_AS(Config::from_file((dir / "bad.cfg").string()), ConfigError);
  CHECK_THROWS_AS(Config::from_file((dir / "missing.cfg").string()), IoError);
}

TEST_CASE("config hash is stable under copies and sensitive to values") {
  Config a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.set("train.beta", "0.5");
  CHECK(a.hash() != b.hash());
  b.set("train.beta", "0.1");
  CHECK(a.hash() == b.hash());
}

TEST_CASE("checkpoints round-trip parameters, buffers, and metadata") {
  nn::EncoderSpec spec;
  spec.arch = "resnet_style";
  spec.depth = 18;
  spec.num_classes = 3;
  spec.proj_dim = 16;
  spec.fusion_levels = {3, 4};
  nn::Encoder<float> enc(spec, Rng(41));
  Rng noise(7);
  for (auto& [name, buf] : enc.buffers())
    for (float& v : *buf) v = float(noise.normal());

  fs::path dir = fresh_dir("ckpt");
  const std::string path = (dir / "model.ckpt").string();
  const std::vector<double> history = {61.25, 70.5, 70.5};
  save_checkpoint(path, enc, 2, history, "deadbeefdeadbeef");

  LoadedCheckpoint loaded = load_checkpoint(path);
  CHECK(loaded.epoch == 2);
  CHECK(loaded.val_history == history);
  CHECK(loaded.config_hash == "deadbeefdeadbeef");
  CHECK(loaded.spec.arch == "resnet_style");
  CHECK(loaded.spec.num_classes == 3);
  CHECK(loaded.spec.fusion_levels == std::pair<int, int>{3, 4});

  auto want = enc.params();
  auto got = loaded.encoder->params();
  REQUIRE(want.size() == got.size());
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(want[i]->name == got[i]->name);
    CHECK(want[i]->w == got[i]->w);
  }
  auto wbuf = enc.buffers();
  auto gbuf = loaded.encoder->buffers();
  REQUIRE(wbuf.size() == gbuf.size());
  REQUIRE(!wbuf.empty());
  for (size_t i = 0; i < wbuf.size(); ++i) {
    CHECK(wbuf[i].first == gbuf[i].first);
    CHECK(*wbuf[i].second == *gbuf[i].second);
  }
}

TEST_CASE("corrupted checkpoint files are rejected") {
  fs::path dir = fresh_dir("ckpt_bad");
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);
  {
    std::ofstream f(dir / "garbage.ckpt", std::ios::binary);
    f << "not a checkpoint at all";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint((dir / "garbage.ckpt").string()),
                       doctest::Contains("not a checkpoint"), DataError);

  nn::EncoderSpec spec;
  spec.conv_blocks = 2;
  spec.width = 4;
  spec.num_classes = 2;
  spec.proj_dim = 4;
  spec.fusion_levels = {1, 2};
  nn::Encoder<float> enc(spec, Rng(1));
  const std::string good = (dir / "good.ckpt").string();
  save_checkpoint(good, enc, 0, {50.0}, "h");
  const std::string whole = slurp(good);
  {
    std::ofstream f(dir / "short.ckpt", std::ios::binary);
    f << whole.substr(0, whole.size() - 64);
  }
  CHECK_THROWS_WITH_AS(load_checkpoint((dir / "short.ckpt").string()),
                       doctest::Contains("truncated"), DataError);
}

TEST_CASE("variant names map onto the module grid") {
  CHECK(all_variant_names().size() == 6);
  for (const std::string& name : all_variant_names())
    CHECK(variant_name(parse_variant(name)) == name);
  CHECK_THROWS_AS(parse_variant("deep_all"), ConfigError);

  const VariantTraits base = variant_traits(Variant::BaselineErm);
  CHECK(!base.apda);
  CHECK(!base.contrast);
  CHECK(!base.momentum);

  const VariantTraits a = variant_traits(Variant::ApdaOnly);
  CHECK(a.apda);
  CHECK(!a.contrast);

  const VariantTraits b = variant_traits(Variant::NoMomentum);
  CHECK(b.apda);
  CHECK(b.contrast);
  CHECK(!b.momentum);
  CHECK(b.dir_o2a);
  CHECK(b.dir_a2o);
  CHECK(b.target_grads);

  const VariantTraits c = variant_traits(Variant::O2aOnly);
  CHECK(c.momentum);
  CHECK(c.dir_o2a);
  CHECK(!c.dir_a2o);
  CHECK(!c.target_grads);

  const VariantTraits d = variant_traits(Variant::A2oOnly);
  CHECK(d.momentum);
  CHECK(!d.dir_o2a);
  CHECK(d.dir_a2o);

  const VariantTraits f = variant_traits(Variant::Full);
  CHECK(f.apda);
  CHECK(f.contrast);
  CHECK(f.momentum);
  CHECK(f.dir_o2a);
  CHECK(f.dir_a2o);
  CHECK(!f.target_grads);
}

TEST_CASE("momentum network starts as an exact parameter copy") {
  Config cfg = micro_cfg("0_identity");
  MultiDomainDataset ds = build_dataset(cfg);
  Trainer t(cfg, ds, fresh_dir("momentum_init").string());
  REQUIRE(t.momentum() != nullptr);
  auto on = t.online().params();
  auto mo = t.momentum()->params();
  REQUIRE(on.size() == mo.size());
  for (size_t i = 0; i < on.size(); ++i) {
    CHECK(on[i]->name == mo[i]->name);
    CHECK(on[i]->w == mo[i]->w);
  }

  Config base = micro_cfg("0_identity");
  base.set("train.variant", "baseline_erm");
  Trainer tb(base, ds, fresh_dir("momentum_none").string());
  CHECK(tb.momentum() == nullptr);
}

TEST_CASE("training twice with one seed is bitwise identical") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("run.seed", "11");
  MultiDomainDataset ds = build_dataset(cfg);

  fs::path d1 = fresh_dir("det_a"), d2 = fresh_dir("det_b");
  TrainResult r1 = train(cfg, ds, d1.string());
  TrainResult r2 = train(cfg, ds, d2.string());
  CHECK(r1.val_history == r2.val_history);
  CHECK(slurp(d1 / "train_log.jsonl") == slurp(d2 / "train_log.jsonl"));
  CHECK(slurp(d1 / "last.ckpt") == slurp(d2 / "last.ckpt"));

  LoadedCheckpoint c1 = load_checkpoint((d1 / "last.ckpt").string());
  LoadedCheckpoint c2 = load_checkpoint((d2 / "last.ckpt").string());
  auto p1 = c1.encoder->params(), p2 = c2.encoder->params();
  for (size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->w == p2[i]->w);
}

TEST_CASE("recorded step size follows the decay schedule") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("train.epochs", "5");
  cfg.set("train.lr", "0.5");
  cfg.set("train.lr_decay", "0.1");
  cfg.set("train.lr_decay_every", "2");
  MultiDomainDataset ds = build_dataset(cfg);
  fs::path dir = fresh_dir("schedule");
  Trainer t(cfg, ds, dir.string());
  for (int e = 0; e < 5; ++e)
    CHECK(t.epoch_lr(e) == 0.5 * std::pow(0.1, double(e / 2)));
  for (int e = 0; e < t.epochs(); ++e) t.run_epoch(e);
  t.finish();

  std::ifstream log(dir / "train_log.jsonl");
  std::string line;
  while (std::getline(log, line)) {
    auto rec = nlohmann::json::parse(line);
    const int e = rec.at("epoch").get<int>();
    CHECK(rec.at("lr").get<double>() ==
          doctest::Approx(0.5 * std::pow(0.1, double(e / 2))).epsilon(1e-12));
    CHECK(rec.contains("step"));
    CHECK(rec.contains("cls_o"));
    CHECK(rec.contains("cls_a"));
    CHECK(rec.contains("contr"));
    CHECK(rec.contains("beta"));
    CHECK(rec.contains("total"));
  }
}

TEST_CASE("model selection picks argmax with earliest tie or the last epoch") {
  CHECK(select_model({70, 80, 80}, "val") == 1);
  CHECK(select_model({70, 80, 80}, "last") == 2);
  CHECK(select_model({50, 60, 70}, "val") == 2);
  CHECK(select_model({50, 60, 70}, "last") == 2);
  CHECK(select_model({90}, "val") == 0);
  CHECK_THROWS_AS(select_model({}, "val"), DataError);
  CHECK_THROWS_AS(select_model({70}, "best-of"), ConfigError);
}

TEST_CASE("selection rule is reflected in the saved checkpoints") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("train.selection", "last");
  MultiDomainDataset ds = build_dataset(cfg);
  fs::path dir = fresh_dir("select_last");
  TrainResult r = train(cfg, ds, dir.string());
  CHECK(r.best_epoch == int(r.val_history.size()) - 1);
  LoadedCheckpoint best = load_checkpoint(r.best_path);
  CHECK(best.epoch == r.best_epoch);
  CHECK(best.config_hash == cfg.hash());

  cfg.set("train.selection", "val");
  fs::path dir2 = fresh_dir("select_val");
  TrainResult rv = train(cfg, ds, dir2.string());
  LoadedCheckpoint bv = load_checkpoint(rv.best_path);
  CHECK(bv.epoch == rv.best_epoch);
  CHECK(rv.val_history[size_t(rv.best_epoch)] ==
        *std::max_element(rv.val_history.begin(), rv.val_history.end()));
}

TEST_CASE("target-domain samples never reach a training batch") {
  Config cfg = micro_cfg("1_colormap");
  MultiDomainDataset ds = build_dataset(cfg);
  fs::path dir = fresh_dir("isolation");
  Trainer t(cfg, ds, dir.string());
  t.run_epoch(0);

  const int target = ds.find_domain("1_colormap");
  REQUIRE(target >= 0);
  const auto& seen = t.trained_sample_ids();
  CHECK(!seen.empty());
  for (const DomainSample& s : ds.domains[size_t(target)].samples)
    CHECK(seen.count(s.id) == 0);

  std::unordered_set<std::string> allowed;
  for (int d = 0; d < int(ds.domains.size()); ++d) {
    if (d == target) continue;
    for (int idx : ds.domains[size_t(d)].train_idx)
      allowed.insert(ds.domains[size_t(d)].samples[size_t(idx)].id);
  }
  for (const std::string& id : seen) CHECK(allowed.count(id) == 1);
}

TEST_CASE("non-finite loss aborts with the offending step logged") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("train.lr", "1e18");
  cfg.set("train.epochs", "3");
  cfg.set("train.variant", "baseline_erm");
  MultiDomainDataset ds = build_dataset(cfg);
  fs::path dir = fresh_dir("diverge");
  CHECK_THROWS_WITH_AS(train(cfg, ds, dir.string()),
                       doctest::Contains("step"), NumericError);
  const std::string log = slurp(dir / "train_log.jsonl");
  CHECK(log.find("\"total\":null") != std::string::npos);
}

TEST_CASE("degenerate experiment configurations are rejected up front") {
  Config cfg = micro_cfg("0_identity");
  MultiDomainDataset ds = build_dataset(cfg);

  Config no_target = cfg;
  no_target.set("run.target_domain", "");
  CHECK_THROWS_AS(train(no_target, ds, fresh_dir("no_target").string()),
                  ConfigError);

  Config bad_target = cfg;
  bad_target.set("run.target_domain", "5_watercolor");
  CHECK_THROWS_WITH_AS(
      train(bad_target, ds, fresh_dir("bad_target").string()),
      doctest::Contains("5_watercolor"), ConfigError);

  Config huge_batch = cfg;
  huge_batch.set("train.batch_size", "4096");
  CHECK_THROWS_AS(train(huge_batch, ds, fresh_dir("huge_batch").string()),
                  DataError);

  Config bad_eta = cfg;
  bad_eta.set("train.eta", "1.5");
  CHECK_THROWS_AS(train(bad_eta, ds, fresh_dir("bad_eta").string()),
                  ConfigError);

  Config bad_sel = cfg;
  bad_sel.set("train.selection", "oracle");
  CHECK_THROWS_AS(train(bad_sel, ds, fresh_dir("bad_sel").string()),
                  ConfigError);
}

TEST_CASE("training writes the documented run artifacts") {
  Config cfg = micro_cfg("2_texture");
  MultiDomainDataset ds = build_dataset(cfg);
  fs::path dir = fresh_dir("artifacts");
  TrainResult r = train(cfg, ds, dir.string());
  CHECK(fs::exists(dir / "best.ckpt"));
  CHECK(fs::exists(dir / "last.ckpt"));
  CHECK(fs::exists(dir / "train_log.jsonl"));
  CHECK(fs::exists(dir / "config_resolved.json"));

  auto resolved = nlohmann::json::parse(slurp(dir / "config_resolved.json"));
  CHECK(resolved.at("run.target_domain").get<std::string>() == "2_texture");
  CHECK(resolved.at("train.batch_size").get<int>() == 8);

  int lines = 0;
  std::ifstream log(dir / "train_log.jsonl");
  std::string line;
  while (std::getline(log, line))
    if (!line.empty()) ++lines;
  CHECK(lines == r.steps);
  CHECK(r.val_history.size() == 2);
}

TEST_CASE("every variant trains for a step without error") {
  for (const std::string& name : all_variant_names()) {
    CAPTURE(name);
    Config cfg = micro_cfg("0_identity");
    cfg.set("train.variant", name);
    cfg.set("train.epochs", "1");
    MultiDomainDataset ds = build_dataset(cfg);
    fs::path dir = fresh_dir("variant_" + name);
    TrainResult r = train(cfg, ds, dir.string());
    CHECK(r.steps > 0);
    CHECK(std::isfinite(r.final_total));
  }
}

TEST_CASE("ablation grid aggregates seeds and writes the sweep plot") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("train.epochs", "1");
  cfg.set("data.samples_per_class", "8");
  cfg.set("ablate.seeds", "0,1");
  cfg.set("ablate.targets", "0_identity");
  fs::path dir = fresh_dir("grid_beta");
  auto results = run_ablation_grid(cfg, "beta", dir.string());
  REQUIRE(results.size() == 5);
  for (const CellResult& r : results) {
    CAPTURE(r.cell);
    CHECK(r.grid == "beta");
    CHECK(r.target == "0_identity");
    CHECK(r.collapsed == 0);
    CHECK(r.accuracies.size() == 2);
    CHECK(r.mean() >= 0.0);
    CHECK(r.mean() <= 100.0);
    CHECK(r.stddev() >= 0.0);
  }
  CHECK(fs::exists(dir / "beta.csv"));
  CHECK(fs::exists(dir / "plot_beta_sweep.csv"));
  int rows = 0;
  std::ifstream sweep(dir / "plot_beta_sweep.csv");
  std::string line;
  while (std::getline(sweep, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);  // header + five curve points

  const std::string csv = slurp(dir / "beta.csv");
  for (const char* cell : {"beta_0.1", "beta_0.5", "beta_1.0", "beta_2.0",
                           "beta_5.0"})
    CHECK(csv.find(cell) != std::string::npos);
}

TEST_CASE("collapsed cells are recorded and the grid continues") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("train.epochs", "1");
  cfg.set("data.samples_per_class", "8");
  cfg.set("train.lr", "1e18");
  cfg.set("ablate.seeds", "0");
  cfg.set("ablate.targets", "0_identity");
  fs::path dir = fresh_dir("grid_collapse");
  auto results = run_ablation_grid(cfg, "table6", dir.string());
  REQUIRE(results.size() == 3);
  for (const CellResult& r : results) {
    CHECK(r.collapsed == 1);
    CHECK(r.accuracies.empty());
    CHECK(!r.note.empty());
  }
  const std::string csv = slurp(dir / "table6.csv");
  CHECK(csv.find("non-finite") != std::string::npos);
}

TEST_CASE("table5 grid honors the configured variant subset") {
  Config cfg = micro_cfg("0_identity");
  cfg.set("train.epochs", "1");
  cfg.set("data.samples_per_class", "8");
  cfg.set("ablate.seeds", "3");
  cfg.set("ablate.targets", "0_identity,1_colormap");
  cfg.set("ablate.variants", "baseline_erm,full_phama");
  fs::path dir = fresh_dir("grid_table5");
  auto results = run_ablation_grid(cfg, "table5", dir.string());
  REQUIRE(results.size() == 4);  // 2 variants x 2 targets
  CHECK(results[0].cell == "baseline_erm");
  CHECK(results[2].cell == "full_phama");
  for (const CellResult& r : results) CHECK(r.accuracies.size() == 1);

  CHECK_THROWS_AS(run_ablation_grid(cfg, "table9", dir.string()),
                  ConfigError);
}
