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

#include "phama/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "phama/augment.hpp"
#include "phama/checkpoint.hpp"
#include "phama/errors.hpp"
#include "phama/eval.hpp"
#include "phama/synth.hpp"

namespace fs = std::filesystem;

namespace phama {
namespace {

const std::vector<std::string> kVariantNames = {
    "baseline_erm", "A_apda_only", "B_no_momentum",
    "C_o2a_only",   "D_a2o_only",  "full_phama"};

nn::Mat<float> take_rows(const nn::Mat<float>& m, int start, int count) {
  nn::Mat<float> out(count, m.cols);
  std::copy(m.v.begin() + size_t(start) * m.cols,
            m.v.begin() + size_t(start + count) * m.cols, out.v.begin());
  return out;
}

void add_rows(nn::Mat<float>& dst, int start, const nn::Mat<float>& src) {
  if (src.rows == 0) return;
  for (size_t i = 0; i < src.v.size(); ++i)
    dst.v[size_t(start) * dst.cols + i] += src.v[i];
}

void validate_train_config(const Config& cfg) {
  if (cfg.get_int("train.epochs") < 1)
    throw ConfigError("train.epochs", "need at least one epoch");
  if (cfg.get_int("train.batch_size") < 1)
    throw ConfigError("train.batch_size", "batch size must be positive");
  if (cfg.get_double("train.lr") <= 0)
    throw ConfigError("train.lr", "step size must be positive");
  if (cfg.get_double("train.lr_decay") <= 0)
    throw ConfigError("train.lr_decay", "decay factor must be positive");
  if (cfg.get_int("train.lr_decay_every") < 1)
    throw ConfigError("train.lr_decay_every", "decay period must be positive");
  const double eta = cfg.get_double("train.eta");
  if (eta < 0 || eta > 1)
    throw ConfigError("train.eta", "amplitude mix bound must lie in [0,1]");
  if (cfg.get_double("train.beta") < 0)
    throw ConfigError("train.beta", "contrast weight must be nonnegative");
  if (cfg.get_double("train.tau") <= 0)
    throw ConfigError("train.tau", "temperature must be positive");
  const double m = cfg.get_double("train.momentum_coef");
  if (m < 0 || m >= 1)
    throw ConfigError("train.momentum_coef", "coefficient must lie in [0,1)");
  const double mu = cfg.get_double("train.sgd_momentum");
  if (mu < 0 || mu >= 1)
    throw ConfigError("train.sgd_momentum", "momentum must lie in [0,1)");
  if (cfg.get_double("train.weight_decay") < 0)
    throw ConfigError("train.weight_decay", "weight decay must be nonnegative");
  if (cfg.get_int("train.ramp_epochs") < 0)
    throw ConfigError("train.ramp_epochs", "ramp length must be nonnegative");
  const std::string sel = cfg.get_string("train.selection");
  if (sel != "val" && sel != "last")
    throw ConfigError("train.selection", "expected 'val' or 'last', got '" +
                                             sel + "'");
}

std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  for (size_t i = 0; i < kVariantNames.size(); ++i)
    if (name == kVariantNames[i]) return Variant(i);
  throw ConfigError("train.variant", "unknown variant '" + name + "'");
}

const std::string& variant_name(Variant v) {
  return kVariantNames.at(size_t(v));
}

const std::vector<std::string>& all_variant_names() { return kVariantNames; }

VariantTraits variant_traits(Variant v) {
  VariantTraits t;
  switch (v) {
    case Variant::BaselineErm:
      break;
    case Variant::ApdaOnly:
      t.apda = true;
      break;
    case Variant::NoMomentum:
      t.apda = t.contrast = t.dir_o2a = t.dir_a2o = t.target_grads = true;
      break;
    case Variant::O2aOnly:
      t.apda = t.contrast = t.momentum = t.dir_o2a = true;
      break;
    case Variant::A2oOnly:
      t.apda = t.contrast = t.momentum = t.dir_a2o = true;
      break;
    case Variant::Full:
      t.apda = t.contrast = t.momentum = t.dir_o2a = t.dir_a2o = true;
      break;
  }
  return t;
}

MultiDomainDataset build_dataset(const Config& cfg) {
  const std::string source = cfg.get_string("data.source");
  const uint64_t seed = uint64_t(cfg.get_int("run.seed"));
  if (source == "synthetic") {
    SynthSpec spec;
    spec.num_classes = cfg.get_int("data.classes");
    spec.samples_per_class = cfg.get_int("data.samples_per_class");
    spec.image_size = cfg.get_int("data.image_size");
    spec.domain_transforms = cfg.get_string_list("data.domains");
    return synth_domains(spec, seed);
  }
  if (source == "folder") {
    const std::string root = cfg.get_string("data.root");
    if (root.empty())
      throw ConfigError("data.root", "folder datasets need a root directory");
    return load_folder_dataset(root, seed, cfg.get_int("data.resize"));
  }
  throw ConfigError("data.source", "expected 'synthetic' or 'folder', got '" +
                                       source + "'");
}

nn::EncoderSpec make_encoder_spec(const Config& cfg, int num_classes) {
  nn::EncoderSpec spec;
  spec.arch = cfg.get_string("model.arch");
  spec.depth = cfg.get_int("model.depth");
  spec.conv_blocks = cfg.get_int("model.conv_blocks");
  spec.width = cfg.get_int("model.width");
  spec.num_classes = num_classes;
  spec.proj_dim = cfg.get_int("model.proj_dim");
  const auto levels = cfg.get_int_list("model.fusion_levels");
  if (levels.size() != 2)
    throw ConfigError("model.fusion_levels",
                      "expected two comma-separated levels, got '" +
                          cfg.get_string("model.fusion_levels") + "'");
  spec.fusion_levels = {levels[0], levels[1]};
  spec.validate();
  return spec;
}

int select_model(const std::vector<double>& val_history,
                 const std::string& rule) {
  if (val_history.empty())
    throw DataError("model selection: empty validation history");
  if (rule == "last") return int(val_history.size()) - 1;
  if (rule != "val")
    throw ConfigError("train.selection", "expected 'val' or 'last', got '" +
                                             rule + "'");
  int best = 0;
  for (int i = 1; i < int(val_history.size()); ++i)
    if (val_history[size_t(i)] > val_history[size_t(best)]) best = i;
  return best;
}

Trainer::Trainer(const Config& cfg, const MultiDomainDataset& ds,
                 const std::string& out_dir)
    : cfg_(cfg),
      ds_(ds),
      out_dir_(out_dir),
      master_(uint64_t(cfg.get_int("run.seed"))) {
  validate_train_config(cfg);
  variant_ = parse_variant(cfg.get_string("train.variant"));
  traits_ = variant_traits(variant_);
  kind_ = nn::parse_match_kind(cfg.get_string("train.matching"));
  epochs_ = cfg.get_int("train.epochs");
  batch_ = cfg.get_int("train.batch_size");

  const std::string target = cfg.get_string("run.target_domain");
  if (target.empty())
    throw ConfigError("run.target_domain",
                      "training requires a held-out target domain");
  target_id_ = ds.find_domain(target);
  if (target_id_ < 0) {
    std::string names;
    for (const Domain& d : ds.domains) names += (names.empty() ? "" : ", ") + d.name;
    throw ConfigError("run.target_domain",
                      "no domain named '" + target + "' (have: " + names + ")");
  }
  if (ds.domains.size() < 2)
    throw DataError("training needs at least one source domain besides the "
                    "target");

  for (int d = 0; d < int(ds.domains.size()); ++d) {
    if (d == target_id_) continue;
    for (int idx : ds.domains[size_t(d)].train_idx)
      train_index_.push_back({d, idx});
    for (int idx : ds.domains[size_t(d)].val_idx)
      val_index_.push_back({d, idx});
  }
  if (int(train_index_.size()) < batch_)
    throw DataError("training split (" + std::to_string(train_index_.size()) +
                    " samples) is smaller than one batch of " +
                    std::to_string(batch_));

  nn::EncoderSpec spec = make_encoder_spec(cfg, ds.num_classes);
  online_ = std::make_unique<nn::Encoder<float>>(spec, master_.child("init"));
  if (traits_.momentum) {
    momentum_ = std::make_unique<nn::Encoder<float>>(spec, Rng(0));
    nn::copy_params(online_->params(), momentum_->params());
  }
  for (nn::Param<float>* p : online_->params())
    velocity_.emplace_back(p->size(), 0.0f);

  fs::create_directories(out_dir_);
  cfg.write_resolved((fs::path(out_dir_) / "config_resolved.json").string());
  const std::string log_path = (fs::path(out_dir_) / "train_log.jsonl").string();
  log_.open(log_path, std::ios::binary);
  if (!log_) throw IoError("cannot write '" + log_path + "'");
}

Trainer::~Trainer() = default;

double Trainer::epoch_lr(int epoch) const {
  const double lr0 = cfg_.get_double("train.lr");
  const double decay = cfg_.get_double("train.lr_decay");
  const int period = cfg_.get_int("train.lr_decay_every");
  return lr0 * std::pow(decay, double(epoch / period));
}

void Trainer::run_epoch(int epoch) {
  cur_lr_ = epoch_lr(epoch);
  std::vector<int> order(train_index_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  Rng order_rng = master_.child("order", uint64_t(epoch));
  order_rng.shuffle(order.begin(), order.end());

  const int steps = int(train_index_.size()) / batch_;
  for (int b = 0; b < steps; ++b) {
    std::vector<const DomainSample*> batch;
    batch.reserve(size_t(batch_));
    for (int i = 0; i < batch_; ++i) {
      const auto [d, idx] = train_index_[size_t(order[size_t(b) * batch_ + i])];
      const DomainSample& s = ds_.domains[size_t(d)].samples[size_t(idx)];
      batch.push_back(&s);
      seen_ids_.insert(s.id);
    }
    step_batch(epoch, batch);
  }

  val_history_.push_back(source_val_accuracy());
  save("last.ckpt", epoch);
  if (cfg_.get_string("train.selection") == "val" &&
      val_history_.back() > best_val_) {
    best_val_ = val_history_.back();
    best_epoch_ = epoch;
    save("best.ckpt", epoch);
  }
}

void Trainer::step_batch(int epoch,
                         const std::vector<const DomainSample*>& batch) {
  const int B = int(batch.size());
  const bool augment = cfg_.get_bool("train.augment");

  std::vector<Image> staged;
  staged.reserve(size_t(B));
  for (int i = 0; i < B; ++i) {
    if (augment) {
      Rng aug_rng = master_.child("augment", uint64_t(epoch),
                                  uint64_t(step_) * uint64_t(batch_) + i);
      staged.push_back(standard_augment(batch[size_t(i)]->image, aug_rng));
    } else {
      staged.push_back(batch[size_t(i)]->image);
    }
  }
  std::vector<int> labels(static_cast<size_t>(B));
  for (int i = 0; i < B; ++i) labels[size_t(i)] = batch[size_t(i)]->label;

  nn::LossBreakdown bd;
  online_->zero_grad();

  if (!traits_.apda) {
    std::vector<const Image*> ptrs;
    for (const Image& im : staged) ptrs.push_back(&im);
    auto res = online_->forward(nn::to_tensor<float>(ptrs), nn::Mode::Train,
                                false);
    nn::Mat<float> d_logits;
    const double ce = nn::cross_entropy(res.logits, labels, &d_logits);
    bd = nn::make_breakdown(ce, ce, 0.0, 0.0);
    online_->backward(d_logits, nn::Mat<float>());
  } else {
    std::vector<DomainSample> views(static_cast<size_t>(B));
    for (int i = 0; i < B; ++i) {
      views[size_t(i)].image = std::move(staged[size_t(i)]);
      views[size_t(i)].label = batch[size_t(i)]->label;
      views[size_t(i)].domain_id = batch[size_t(i)]->domain_id;
      views[size_t(i)].id = batch[size_t(i)]->id;
    }
    std::vector<const DomainSample*> view_ptrs;
    for (const DomainSample& v : views) view_ptrs.push_back(&v);
    Rng apda_rng = master_.child("apda", uint64_t(epoch), uint64_t(step_));
    auto pairs = make_apda_batch(view_ptrs, cfg_.get_double("train.eta"),
                                 apda_rng,
                                 cfg_.get_bool("train.cross_domain_pairs"));

    std::vector<const Image*> both;
    both.reserve(size_t(2 * B));
    for (const AugmentedPair& p : pairs) both.push_back(&p.original);
    for (const AugmentedPair& p : pairs) both.push_back(&p.augmented);
    const nn::Tensor<float> x = nn::to_tensor<float>(both);

    auto res = online_->forward(x, nn::Mode::Train, traits_.contrast);
    nn::Mat<float> logits_o = take_rows(res.logits, 0, B);
    nn::Mat<float> logits_a = take_rows(res.logits, B, B);

    const int P = res.patches;
    nn::Mat<float> emb_o, emb_a, tgt_o, tgt_a;
    const nn::Mat<float>* p_eo = nullptr;
    const nn::Mat<float>* p_ea = nullptr;
    const nn::Mat<float>* p_to = nullptr;
    const nn::Mat<float>* p_ta = nullptr;
    if (traits_.contrast) {
      emb_o = take_rows(res.embeddings, 0, B * P);
      emb_a = take_rows(res.embeddings, B * P, B * P);
      if (traits_.momentum) {
        auto mres = momentum_->forward(x, nn::Mode::Momentum, true);
        tgt_o = take_rows(mres.embeddings, 0, B * P);
        tgt_a = take_rows(mres.embeddings, B * P, B * P);
      } else {
        tgt_o = emb_o;
        tgt_a = emb_a;
      }
      p_eo = &emb_o;
      p_ea = &emb_a;
      p_to = &tgt_o;
      p_ta = &tgt_a;
    }

    const double beta_eff =
        traits_.contrast
            ? nn::beta_schedule(epoch, cfg_.get_int("train.ramp_epochs"),
                                cfg_.get_double("train.beta"),
                                cfg_.get_bool("train.ramp"))
            : 0.0;

    nn::PairLossGrads<float> g;
    bd = nn::total_loss(logits_o, logits_a, labels, p_eo, p_ea, p_to, p_ta, P,
                        kind_, cfg_.get_double("train.tau"), beta_eff,
                        traits_.dir_o2a, traits_.dir_a2o, &g,
                        traits_.target_grads);

    nn::Mat<float> d_logits(2 * B, res.logits.cols);
    add_rows(d_logits, 0, g.d_logits_o);
    add_rows(d_logits, B, g.d_logits_a);
    nn::Mat<float> d_emb;
    if (traits_.contrast) {
      d_emb = nn::Mat<float>(2 * B * P, res.embeddings.cols);
      add_rows(d_emb, 0, g.d_emb_o);
      add_rows(d_emb, B * P, g.d_emb_a);
      if (traits_.target_grads) {
        add_rows(d_emb, 0, g.d_tgt_o);
        add_rows(d_emb, B * P, g.d_tgt_a);
      }
    }
    online_->backward(d_logits, d_emb);
  }

  const double lr = cur_lr_;
  const double mu = cfg_.get_double("train.sgd_momentum");
  const double wd = cfg_.get_double("train.weight_decay");
  auto params = online_->params();
  for (size_t p = 0; p < params.size(); ++p) {
    std::vector<float>& v = velocity_[p];
    nn::Param<float>& par = *params[p];
    for (size_t j = 0; j < par.size(); ++j) {
      const float g = par.g[j] + float(wd) * par.w[j];
      v[j] = float(mu) * v[j] + g;
      par.w[j] -= float(lr) * v[j];
    }
  }
  if (traits_.momentum)
    nn::ema_update(online_->params(), momentum_->params(),
                   cfg_.get_double("train.momentum_coef"));

  last_total_ = bd.total;
  log_step(epoch, lr, bd);
  ++step_;
  if (!std::isfinite(bd.total)) {
    log_.flush();
    throw NumericError("non-finite training loss at step " +
                       std::to_string(step_ - 1) + " (epoch " +
                       std::to_string(epoch) + ")");
  }
}

void Trainer::log_step(int epoch, double lr, const nn::LossBreakdown& bd) {
  log_ << "{\"step\":" << step_ << ",\"epoch\":" << epoch
       << ",\"cls_o\":" << json_number(bd.cls_original)
       << ",\"cls_a\":" << json_number(bd.cls_augmented)
       << ",\"contr\":" << json_number(bd.contrast)
       << ",\"beta\":" << json_number(bd.beta_effective)
       << ",\"total\":" << json_number(bd.total)
       << ",\"lr\":" << json_number(lr) << "}\n";
}

double Trainer::source_val_accuracy() {
  if (val_index_.empty()) return 0.0;
  size_t correct = 0;
  const int eval_batch = std::max(batch_, 1);
  for (size_t start = 0; start < val_index_.size();
       start += size_t(eval_batch)) {
    const size_t stop =
        std::min(val_index_.size(), start + size_t(eval_batch));
    std::vector<const Image*> imgs;
    std::vector<int> labels;
    for (size_t i = start; i < stop; ++i) {
      const auto [d, idx] = val_index_[i];
      const DomainSample& s = ds_.domains[size_t(d)].samples[size_t(idx)];
      imgs.push_back(&s.image);
      labels.push_back(s.label);
    }
    auto res = online_->forward(nn::to_tensor<float>(imgs), nn::Mode::Eval,
                                false);
    correct += correct_predictions(res.logits, labels);
  }
  return 100.0 * double(correct) / double(val_index_.size());
}

void Trainer::save(const std::string& name, int epoch) {
  save_checkpoint((fs::path(out_dir_) / name).string(), *online_, epoch,
                  val_history_, cfg_.hash());
}

TrainResult Trainer::finish() {
  const std::string rule = cfg_.get_string("train.selection");
  TrainResult r;
  r.val_history = val_history_;
  r.best_epoch = select_model(val_history_, rule);
  r.last_path = (fs::path(out_dir_) / "last.ckpt").string();
  r.best_path = (fs::path(out_dir_) / "best.ckpt").string();
  if (rule == "last") {
    save("best.ckpt", int(val_history_.size()) - 1);
  } else if (best_epoch_ != r.best_epoch) {
    throw NumericError("checkpoint bookkeeping mismatch: tracked best epoch " +
                       std::to_string(best_epoch_) + " vs selected " +
                       std::to_string(r.best_epoch));
  }
  r.steps = step_;
  r.final_total = last_total_;
  log_.flush();
  return r;
}

TrainResult train(const Config& cfg, const MultiDomainDataset& ds,
                  const std::string& out_dir) {
  Trainer t(cfg, ds, out_dir);
  for (int e = 0; e < t.epochs(); ++e) t.run_epoch(e);
  return t.finish();
}

double CellResult::mean() const {
  if (accuracies.empty()) return 0.0;
  double s = 0;
  for (double a : accuracies) s += a;
  return s / double(accuracies.size());
}

double CellResult::stddev() const {
  if (accuracies.size() < 2) return 0.0;
  const double m = mean();
  double s = 0;
  for (double a : accuracies) s += (a - m) * (a - m);
  return std::sqrt(s / double(accuracies.size() - 1));
}

namespace {

struct GridCell {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

std::vector<GridCell> enumerate_cells(const Config& base,
                                      const std::string& grid) {
  std::vector<GridCell> cells;
  if (grid == "table5") {
    for (const std::string& v : base.get_string_list("ablate.variants")) {
      parse_variant(v);  // reject unknown rows up front
      cells.push_back({v, {{"train.variant", v}}});
    }
  } else if (grid == "table6") {
    for (const std::string& k : {"smooth_l1", "mse", "patchnce"})
      cells.push_back(
          {k, {{"train.matching", k}, {"train.variant", "full_phama"}}});
  } else if (grid == "beta") {
    for (const std::string& b : {"0.1", "0.5", "1.0", "2.0", "5.0"})
      cells.push_back({"beta_" + b,
                       {{"train.beta", b}, {"train.variant", "full_phama"}}});
  } else if (grid == "fusion") {
    for (const std::string& f : {"1,2", "2,3", "3,4"}) {
      std::string name = "fusion_" + f;
      std::replace(name.begin(), name.end(), ',', '_');
      cells.push_back({name,
                       {{"model.fusion_levels", f},
                        {"train.variant", "full_phama"}}});
    }
  } else {
    throw ConfigError("--grid", "unknown grid '" + grid +
                                    "' (table5, table6, beta, fusion)");
  }
  return cells;
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return s;
}

}  // namespace

std::vector<CellResult> run_ablation_grid(const Config& base,
                                          const std::string& grid,
                                          const std::string& out_dir) {
  const auto cells = enumerate_cells(base, grid);
  std::vector<uint64_t> seeds;
  for (int s : base.get_int_list("ablate.seeds")) seeds.push_back(uint64_t(s));
  if (seeds.empty())
    throw ConfigError("ablate.seeds", "need at least one seed");

  std::vector<std::string> targets = base.get_string_list("ablate.targets");
  std::map<uint64_t, MultiDomainDataset> ds_by_seed;
  auto dataset_for = [&](const Config& c, uint64_t seed) -> MultiDomainDataset& {
    auto it = ds_by_seed.find(seed);
    if (it == ds_by_seed.end())
      it = ds_by_seed.emplace(seed, build_dataset(c)).first;
    return it->second;
  };
  if (targets.empty()) {
    Config probe = base;
    probe.set("run.seed", std::to_string(seeds.front()));
    for (const Domain& d : dataset_for(probe, seeds.front()).domains)
      targets.push_back(d.name);
  }

  std::vector<CellResult> results;
  for (const GridCell& cell : cells) {
    for (const std::string& target : targets) {
      CellResult r;
      r.grid = grid;
      r.cell = cell.name;
      r.target = target;
      for (uint64_t seed : seeds) {
        Config c = base;
        for (const auto& [k, v] : cell.overrides) c.set(k, v);
        c.set("run.seed", std::to_string(seed));
        c.set("run.target_domain", target);
        const std::string run_dir =
            (fs::path(out_dir) / grid / cell.name / target /
             ("seed_" + std::to_string(seed)))
                .string();
        try {
          MultiDomainDataset& ds = dataset_for(c, seed);
          TrainResult tr = train(c, ds, run_dir);
          LoadedCheckpoint ckpt = load_checkpoint(tr.best_path);
          const double acc = evaluate_domain(*ckpt.encoder, ds,
                                             ds.find_domain(target),
                                             c.get_int("eval.batch_size"));
          r.seeds.push_back(seed);
          r.accuracies.push_back(acc);
        } catch (const Error& e) {
          ++r.collapsed;
          if (r.note.empty()) r.note = e.what();
        }
      }
      results.push_back(std::move(r));
    }
  }

  fs::create_directories(out_dir);
  write_grid_csv(results, (fs::path(out_dir) / (grid + ".csv")).string());
  if (grid == "beta")
    write_beta_sweep_csv(results,
                         (fs::path(out_dir) / "plot_beta_sweep.csv").string());
  return results;
}

void write_grid_csv(const std::vector<CellResult>& results,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "grid,cell,target,seeds,completed,collapsed,mean,std,note\n";
  char buf[64];
  for (const CellResult& r : results) {
    std::string seed_list;
    for (size_t i = 0; i < r.seeds.size(); ++i)
      seed_list += (i ? ";" : "") + std::to_string(r.seeds[i]);
    out << r.grid << ',' << r.cell << ',' << r.target << ',' << seed_list
        << ',' << r.accuracies.size() << ',' << r.collapsed << ',';
    if (!r.accuracies.empty()) {
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f", r.mean(), r.stddev());
      out << buf;
    } else {
      out << ',';
    }
    out << ',' << csv_safe(r.note) << '\n';
  }
}

void write_beta_sweep_csv(const std::vector<CellResult>& results,
                          const std::string& path) {
  // Pools every (target, seed) accuracy per beta cell into one curve point.
  std::map<std::string, std::vector<double>> by_cell;
  for (const CellResult& r : results)
    by_cell[r.cell].insert(by_cell[r.cell].end(), r.accuracies.begin(),
                           r.accuracies.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "beta,runs,mean,std\n";
  char buf[64];
  for (const auto& [cell, accs] : by_cell) {
    const std::string beta = cell.substr(cell.find('_') + 1);
    out << beta << ',' << accs.size() << ',';
    if (!accs.empty()) {
      double m = 0;
      for (double a : accs) m += a;
      m /= double(accs.size());
      double s = 0;
      for (double a : accs) s += (a - m) * (a - m);
      s = accs.size() > 1 ? std::sqrt(s / double(accs.size() - 1)) : 0.0;
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f", m, s);
      out << buf;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace phama
