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

#include "phama/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phama/checkpoint.hpp"
#include "phama/config.hpp"
#include "phama/errors.hpp"
#include "phama/eval.hpp"
#include "phama/fourier.hpp"
#include "phama/png_io.hpp"
#include "phama/spectral.hpp"
#include "phama/trainer.hpp"

namespace fs = std::filesystem;

namespace phama {
namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  long long seed = -1;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "key=value config file; defaults apply for missing keys");
  cmd->add_option("--set", opts.sets,
                  "override one config key, e.g. --set train.eta=0.2; "
                  "repeatable, applied after the file");
  cmd->add_option("--out", opts.out,
                  "output directory (default $PHAMA_OUT_ROOT/<command> or "
                  "runs/<command>)");
  auto* seed = cmd->add_option("--seed", opts.seed, "override run.seed");
  cmd->callback([&opts, seed] { opts.seed_given = seed->count() > 0; });
}

Config resolve_config(const CommonOpts& opts) {
  Config cfg = opts.config_path.empty() ? Config()
                                        : Config::from_file(opts.config_path);
  for (const std::string& kv : opts.sets) cfg.apply_override(kv);
  if (opts.seed_given) cfg.set("run.seed", std::to_string(opts.seed));
  return cfg;
}

std::string out_dir_for(const CommonOpts& opts, const std::string& command) {
  if (!opts.out.empty()) return opts.out;
  const char* root = std::getenv("PHAMA_OUT_ROOT");
  return (fs::path(root ? root : "runs") / command).string();
}

void write_run_records(const Config& cfg, const std::string& out_dir,
                       int argc, const char* const* argv) {
  fs::create_directories(out_dir);
  cfg.write_resolved((fs::path(out_dir) / "config_resolved.json").string());
  nlohmann::ordered_json inv;
  inv["argv"] = nlohmann::ordered_json::array();
  for (int i = 0; i < argc; ++i) inv["argv"].push_back(argv[i]);
  std::ofstream out(fs::path(out_dir) / "invocation.json", std::ios::binary);
  out << inv.dump(2) << "\n";
}

int cmd_train(const CommonOpts& opts, const std::string& target, int argc,
              const char* const* argv) {
  Config cfg = resolve_config(opts);
  if (!target.empty()) cfg.set("run.target_domain", target);
  const std::string out = out_dir_for(opts, "train");
  MultiDomainDataset ds = build_dataset(cfg);
  write_run_records(cfg, out, argc, argv);
  TrainResult r = train(cfg, ds, out);
  std::cout << "trained " << r.steps << " steps over " << r.val_history.size()
            << " epochs\n";
  std::cout << "selected epoch " << r.best_epoch + 1 << " (source val "
            << r.val_history[size_t(r.best_epoch)] << "%)\n";
  std::cout << "checkpoints: " << r.best_path << ", " << r.last_path << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt_path,
             const std::string& data_dir, const std::string& target,
             bool corruptions, bool embeddings, int argc,
             const char* const* argv) {
  Config cfg = resolve_config(opts);
  if (!data_dir.empty()) {
    cfg.set("data.source", "folder");
    cfg.set("data.root", data_dir);
  }
  if (!target.empty()) cfg.set("run.target_domain", target);
  const std::string want = cfg.get_string("run.target_domain");
  if (want.empty())
    throw ConfigError("run.target_domain", "eval needs a target domain");

  const std::string out = out_dir_for(opts, "eval");
  MultiDomainDataset ds = build_dataset(cfg);
  const int domain_id = ds.find_domain(want);
  if (domain_id < 0)
    throw ConfigError("run.target_domain", "no domain named '" + want + "'");
  write_run_records(cfg, out, argc, argv);

  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
  const int batch = cfg.get_int("eval.batch_size");

  EvalReport report;
  report.config_hash = cfg.hash();
  report.domain_accuracy[want] = evaluate_domain(*ckpt.encoder, ds, domain_id,
                                                 batch);
  report.sample_counts[want] = int(ds.domain(domain_id).samples.size());
  if (corruptions) {
    report.corruption = evaluate_corruptions(
        *ckpt.encoder, ds, domain_id,
        cfg.get_string_list("eval.corruption_kinds"),
        cfg.get_int_list("eval.severities"), batch,
        uint64_t(cfg.get_int("run.seed")));
  }
  emit_report(report, out);
  if (embeddings)
    export_embeddings(*ckpt.encoder, ds, domain_id,
                      (fs::path(out) / "embeddings").string(), batch);

  std::cout << "accuracy[" << want << "] = "
            << report.domain_accuracy.at(want) << "%\n";
  if (report.corruption)
    std::cout << "clean error " << report.corruption->clean_error
              << "%, mean corruption error " << report.corruption->mean_error
              << "%\n";
  std::cout << "report: " << (fs::path(out) / "report.json").string() << "\n";
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& grid, int argc,
               const char* const* argv) {
  Config cfg = resolve_config(opts);
  const std::string out = out_dir_for(opts, "ablate");
  write_run_records(cfg, out, argc, argv);
  std::vector<std::string> grids;
  if (grid == "all")
    grids = {"table5", "table6", "beta", "fusion"};
  else
    grids = {grid};
  for (const std::string& g : grids) {
    auto results = run_ablation_grid(cfg, g, out);
    int collapsed = 0;
    for (const CellResult& r : results) collapsed += r.collapsed;
    std::cout << g << ": " << results.size() << " cells, " << collapsed
              << " collapsed runs -> "
              << (fs::path(out) / (g + ".csv")).string() << "\n";
  }
  return 0;
}

int cmd_analyze_spectra(const CommonOpts& opts, int argc,
                        const char* const* argv) {
  Config cfg = resolve_config(opts);
  const std::string out = out_dir_for(opts, "analyze-spectra");
  MultiDomainDataset ds = build_dataset(cfg);
  write_run_records(cfg, out, argc, argv);
  AuditResult audit = audit_dataset(ds, cfg.get_int("spectra.per_domain"),
                                    cfg.get_double("spectra.keep_fraction"),
                                    uint64_t(cfg.get_int("run.seed")));
  write_audit(audit, out);
  write_spectral_boxplot_csv(audit,
                             (fs::path(out) / "plot_spectral_box.csv").string());
  std::cout << "audited " << audit.rows.size() << " samples across "
            << ds.domains.size() << " domains -> " << out << "\n";
  return 0;
}

int cmd_reconstruct(const CommonOpts& opts, const std::string& image_path,
                    const std::string& mode, int argc,
                    const char* const* argv) {
  Config cfg = resolve_config(opts);
  const std::string out = out_dir_for(opts, "reconstruct");
  write_run_records(cfg, out, argc, argv);
  Image im = read_png(image_path);
  Image result;
  if (mode == "phase-only")
    result = phase_only(im);
  else if (mode == "amplitude-only")
    result = amplitude_only(im);
  else
    throw ConfigError("--mode", "expected 'phase-only' or 'amplitude-only', "
                                "got '" + mode + "'");
  std::string suffix = mode;
  std::replace(suffix.begin(), suffix.end(), '-', '_');
  const fs::path dest =
      fs::path(out) / (fs::path(image_path).stem().string() + "." + suffix +
                       ".png");
  write_png(dest.string(), result);
  std::cout << "wrote " << dest.string() << "\n";
  return 0;
}

int cmd_data(const CommonOpts& opts, int argc, const char* const* argv) {
  Config cfg = resolve_config(opts);
  const std::string out = out_dir_for(opts, "data");
  MultiDomainDataset ds = build_dataset(cfg);
  write_run_records(cfg, out, argc, argv);

  nlohmann::ordered_json j;
  j["num_classes"] = ds.num_classes;
  j["class_names"] = ds.class_names;
  nlohmann::ordered_json doms = nlohmann::ordered_json::array();
  for (const Domain& d : ds.domains)
    doms.push_back({{"name", d.name},
                    {"samples", d.samples.size()},
                    {"train", d.train_idx.size()},
                    {"val", d.val_idx.size()}});
  j["domains"] = std::move(doms);
  j["warnings"] = ds.warnings;
  std::ofstream f(fs::path(out) / "dataset_summary.json", std::ios::binary);
  f << j.dump(2) << "\n";

  std::cout << ds.domains.size() << " domains, " << ds.num_classes
            << " classes, " << ds.total_samples() << " samples\n";
  for (const Domain& d : ds.domains)
    std::cout << "  " << d.name << ": " << d.samples.size() << " samples ("
              << d.train_idx.size() << " train / " << d.val_idx.size()
              << " val)\n";
  for (const std::string& w : ds.warnings) std::cout << "  warning: " << w << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"phama: frequency-domain domain generalization laboratory"};
  app.footer(config_help_text());
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, ablate_opts, spectra_opts, recon_opts,
      data_opts;
  std::string train_target;
  std::string eval_ckpt, eval_data, eval_target;
  bool eval_corruptions = false, eval_embeddings = false;
  std::string ablate_grid = "table5";
  std::string recon_image, recon_mode = "phase-only";

  CLI::App* train_cmd =
      app.add_subcommand("train", "train one model on the source domains");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--target", train_target,
                        "held-out domain (run.target_domain)");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint on a domain");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")
      ->required();
  eval_cmd->add_option("--data", eval_data,
                       "folder dataset root (otherwise the config's dataset)");
  eval_cmd->add_option("--target", eval_target, "domain to evaluate");
  eval_cmd->add_flag("--corruptions", eval_corruptions,
                     "also run the corruption-error suite");
  eval_cmd->add_flag("--export-embeddings", eval_embeddings,
                     "dump pooled deepest-level features");

  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "run an ablation grid over targets and seeds");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--grid", ablate_grid,
                         "table5 | table6 | beta | fusion | all");

  CLI::App* spectra_cmd = app.add_subcommand(
      "analyze-spectra", "amplitude statistics audit of a dataset");
  add_common(spectra_cmd, spectra_opts);

  CLI::App* recon_cmd = app.add_subcommand(
      "reconstruct", "rebuild an image from one spectral component");
  add_common(recon_cmd, recon_opts);
  recon_cmd->add_option("--image", recon_image, "input PNG")->required();
  recon_cmd->add_option("--mode", recon_mode,
                        "phase-only | amplitude-only");

  CLI::App* data_cmd =
      app.add_subcommand("data", "describe the configured dataset");
  add_common(data_cmd, data_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error category=config " << e.get_name() << ": " << e.what()
              << "\n";
    return 2;
  }

  try {
    if (train_cmd->parsed())
      return cmd_train(train_opts, train_target, argc, argv);
    if (eval_cmd->parsed())
      return cmd_eval(eval_opts, eval_ckpt, eval_data, eval_target,
                      eval_corruptions, eval_embeddings, argc, argv);
    if (ablate_cmd->parsed())
      return cmd_ablate(ablate_opts, ablate_grid, argc, argv);
    if (spectra_cmd->parsed()) return cmd_analyze_spectra(spectra_opts, argc, argv);
    if (recon_cmd->parsed())
      return cmd_reconstruct(recon_opts, recon_image, recon_mode, argc, argv);
    if (data_cmd->parsed()) return cmd_data(data_opts, argc, argv);
    std::cerr << "error category=config cli: no command given\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error category=" << e.category() << ": " << e.what() << "\n";
    return e.category() == "config" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error category=internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace phama
