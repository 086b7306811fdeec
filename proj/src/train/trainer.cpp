// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
#include "mptp/train/trainer.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "mptp/data/dataset.hpp"
#include "mptp/data/image_io.hpp"
#include "mptp/kernels/kernels.hpp"
#include "mptp/losses/losses.hpp"
#include "mptp/metrics/metrics.hpp"
#include "mptp/pretrain/augment.hpp"
#include "mptp/pretrain/pretrain.hpp"
#include "mptp/text/embedder.hpp"
#include "mptp/train/checkpoint.hpp"
#include "mptp/train/optimizer.hpp"

namespace fs = std::filesystem;

namespace mptp::train {

SegModel::SegModel(const RunConfig& cfg)
    : text_encoder_(768, cfg.model.embed_dims[0]),
      ppe_(cfg.model),
      msff_(cfg.model.base_channels, cfg.use_msff),
      up_(cfg.model.base_channels, cfg.use_upattention) {
  reg_child("text_encoder", &text_encoder_);
  reg_child("ppe", &ppe_);
  reg_child("msff", &msff_);
  reg_child("upattention", &up_);
}

Variable SegModel::forward(const Variable& img, const Variable& text_embed) {
  auto levels = text_encoder_.forward(text_embed);
  auto y = ppe_.forward(img, levels[0]);
  auto t = msff_.forward(y[0], y[1], y[2]);
  return up_.forward(t[0], t[1], t[2]);
}

namespace {

constexpr size_t kMomentumPrefixLen = 15;  // strlen("optim.momentum.")

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Concatenates (1,...) tensors along the leading axis.
Tensor stack_rows(const std::vector<Tensor>& items) {
  Shape shape = items.front().shape();
  shape[0] = static_cast<int64_t>(items.size());
  Tensor out = Tensor::zeros(shape);
  const int64_t row = items.front().numel();
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != items.front().shape()) throw std::runtime_error("batch: mixed sample shapes");
    std::memcpy(out.data() + static_cast<int64_t>(i) * row, items[i].data(),
                static_cast<size_t>(row) * sizeof(double));
  }
  return out;
}

Tensor embed_captions(const text::Embedder& embedder, const std::vector<std::string>& captions, int64_t text_len) {
  std::vector<Tensor> rows;
  rows.reserve(captions.size());
  for (const auto& c : captions) rows.push_back(embedder.embed(c, text_len));
  return stack_rows(rows);
}

[[noreturn]] void dump_norms_and_abort(nn::Module& model, double loss, int64_t step) {
  std::cerr << "non-finite loss " << loss << " at step " << step << "; parameter l2 norms:\n";
  for (auto& [name, p] : model.named_parameters()) {
    const Tensor& t = p->value();
    std::cerr << "  " << name << " " << std::sqrt(kernels::dot_det(t.data(), t.data(), t.numel())) << "\n";
  }
  throw std::runtime_error("training aborted on non-finite loss at step " + std::to_string(step));
}

void save_bundle(const RunConfig& cfg, nn::Module& model, const SgdMomentum& opt, int64_t stage, int64_t step,
                 const std::string& path) {
  Checkpoint ck;
  ck.stage = stage;
  ck.step = step;
  ck.config_json = config_to_json(cfg);
  ck.rng_seed = nn::dropout_stream().seed();
  ck.rng_counter = nn::dropout_stream().counter();
  collect_module(model, ck.tensors);
  for (const auto& [name, v] : opt.state()) ck.tensors["optim.momentum." + name] = v;
  save_checkpoint(ck, path);
  std::cout << "saved " << path << "\n";
}

// Splits a bundle's tensor map into model tensors and optimizer velocities.
void split_bundle(const std::map<std::string, Tensor>& all, std::map<std::string, Tensor>& model_part,
                  std::map<std::string, Tensor>& momentum_part) {
  for (const auto& [name, t] : all) {
    if (name.rfind("optim.momentum.", 0) == 0)
      momentum_part[name.substr(kMomentumPrefixLen)] = t;
    else
      model_part[name] = t;
  }
}

void resume_full(nn::Module& model, SgdMomentum& opt, const Checkpoint& ck) {
  std::map<std::string, Tensor> params, momenta;
  split_bundle(ck.tensors, params, momenta);
  apply_to_module(model, params);
  opt.load_state(momenta);
  nn::reset_dropout_stream(ck.rng_seed, ck.rng_counter);
}

// Crude loss-curve raster: white background, black axes and polyline, written
// as a binary PGM so there is no plotting dependency.
void plot_curve(const std::vector<double>& losses, const std::string& path) {
  if (losses.empty()) return;
  const int w = 640, h = 320, margin = 24;
  std::vector<uint8_t> img(static_cast<size_t>(w) * h, 255);
  for (int x = margin; x < w - margin; ++x) img[static_cast<size_t>(h - margin) * w + x] = 0;
  for (int y = margin; y <= h - margin; ++y) img[static_cast<size_t>(y) * w + margin] = 0;
  double lo = losses[0], hi = losses[0];
  for (double v : losses) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-12) hi = lo + 1e-12;
  auto px = [&](size_t i) {
    return margin + static_cast<int>((static_cast<double>(i) / std::max<size_t>(losses.size() - 1, 1)) *
                                     (w - 2 * margin - 1));
  };
  auto py = [&](double v) {
    return (h - margin) - static_cast<int>((v - lo) / (hi - lo) * (h - 2 * margin - 1));
  };
  for (size_t i = 0; i + 1 < losses.size() || i == 0; ++i) {
    const int x0 = px(i), y0 = py(losses[i]);
    const int x1 = (i + 1 < losses.size()) ? px(i + 1) : x0;
    const int y1 = (i + 1 < losses.size()) ? py(losses[i + 1]) : y0;
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      const int x = x0 + (x1 - x0) * s / steps;
      const int y = y0 + (y1 - y0) * s / steps;
      if (x >= 0 && x < w && y >= 0 && y < h) img[static_cast<size_t>(y) * w + x] = 0;
    }
    if (i + 1 >= losses.size()) break;
  }
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

// Shared epoch/step driver. batch_loss builds the graph for one batch; the
// driver owns zero_grad, the backward pass, the update, logging and bundles.
void drive(const RunConfig& cfg, nn::Module& model, SgdMomentum& opt, int64_t stage, int64_t start_step,
           size_t n_rows, const std::function<Variable(const std::vector<size_t>&, int64_t)>& batch_loss) {
  const int64_t bs = cfg.optim.batch_size;
  const int64_t spe = static_cast<int64_t>(n_rows) / bs;
  if (spe == 0)
    throw std::runtime_error("training: batch_size " + std::to_string(bs) + " exceeds the dataset (" +
                             std::to_string(n_rows) + " rows)");
  int64_t total = spe * cfg.optim.epochs;
  if (cfg.optim.max_steps > 0 && cfg.optim.max_steps < total) total = cfg.optim.max_steps;
  if (start_step > total) throw std::runtime_error("training: bundle step is past this run's schedule");

  fs::create_directories(cfg.output_dir);
  const std::string tag = "stage" + std::to_string(stage);
  const std::string csv_path = (fs::path(cfg.output_dir) / (tag + "_loss.csv")).string();
  std::ofstream log;
  if (start_step > 0 && fs::exists(csv_path)) {
    log.open(csv_path, std::ios::app);
  } else {
    log.open(csv_path);
    log << "step,loss\n";
  }
  if (!log) throw std::runtime_error("training: cannot write " + csv_path);

  const double base_lr = cfg.optim.base_lr();
  std::vector<double> curve;
  int64_t step = start_step;
  for (int64_t epoch = step / spe; epoch < cfg.optim.epochs && step < total; ++epoch) {
    const auto batches = data::batch_indices(n_rows, static_cast<size_t>(bs), cfg.seed, epoch, true);
    for (int64_t bi = (epoch == step / spe) ? step % spe : 0;
         bi < static_cast<int64_t>(batches.size()) && step < total; ++bi) {
      const double lr = cfg.optim.cosine_decay ? cosine_lr(base_lr, step, total) : base_lr;
      model.zero_grad();
      Variable loss = batch_loss(batches[static_cast<size_t>(bi)], epoch);
      const double lv = loss.value().data()[0];
      if (!std::isfinite(lv)) dump_norms_and_abort(model, lv, step + 1);
      backward(loss);
      opt.step(lr);
      ++step;
      log << step << "," << fmt(lv) << "\n";
      curve.push_back(lv);
      if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step < total) {
        const std::string p =
            (fs::path(cfg.output_dir) / (tag + "_step" + std::to_string(step) + ".mptp")).string();
        save_bundle(cfg, model, opt, stage, step, p);
      }
    }
  }
  log.flush();
  save_bundle(cfg, model, opt, stage, step, (fs::path(cfg.output_dir) / (tag + "_final.mptp")).string());
  if (cfg.plot_loss) plot_curve(curve, (fs::path(cfg.output_dir) / (tag + "_loss.pgm")).string());
  std::cout << tag << " done: " << (step - start_step) << " steps this run, " << step << " total\n";
}

// Loads a stage-2 bundle into a fresh model for eval/predict.
void load_into_model(SegModel& model, const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.stage != 2)
    throw std::runtime_error("bundle " + path + " is stage " + std::to_string(ck.stage) +
                             "; eval and predict need a stage-2 bundle");
  std::map<std::string, Tensor> params, momenta;
  split_bundle(ck.tensors, params, momenta);
  apply_to_module(model, params);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void run_pretrain(const RunConfig& cfg, const RunOptions& opts) {
  if (cfg.train_manifest.empty()) throw std::runtime_error("pretrain: config needs data.train_manifest");
  const data::Manifest manifest = data::load_manifest(cfg.train_manifest, /*require_mask=*/false);
  const auto embedder = text::make_embedder(cfg.embedder_kind, cfg.embedder_assets);

  pretrain::PretrainModel model(cfg.model, cfg.proj_dim);
  model.initialize(cfg.seed);
  nn::reset_dropout_stream(cfg.seed);
  SgdMomentum opt(model, cfg.optim.momentum);

  int64_t start_step = 0;
  if (!opts.init_from.empty()) {
    Checkpoint ck = load_checkpoint(opts.init_from);
    if (ck.stage != 1) throw std::runtime_error("pretrain: " + opts.init_from + " is not a stage-1 bundle");
    resume_full(model, opt, ck);
    start_step = ck.step;
    std::cout << "resumed stage 1 at step " << start_step << "\n";
  }

  const int64_t h = cfg.model.image_h, w = cfg.model.image_w;
  auto batch_loss = [&](const std::vector<size_t>& batch, int64_t epoch) {
    std::vector<Tensor> v1, v2;
    std::vector<std::string> captions;
    for (size_t idx : batch) {
      const data::Sample s = data::load_sample(manifest.rows[idx], h, w);
      auto views = pretrain::augment_pair(s.image, cfg.augment, epoch, static_cast<int64_t>(idx));
      v1.push_back(std::move(views.first));
      v2.push_back(std::move(views.second));
      captions.push_back(s.caption);  // both views keep the sample's caption
    }
    Variable img1(stack_rows(v1)), img2(stack_rows(v2));
    Variable text(embed_captions(*embedder, captions, cfg.model.text_len));
    auto o1 = model.forward_view(img1, text);
    auto o2 = model.forward_view(img2, text);
    return model.symmetric_loss(o1, o2);
  };
  drive(cfg, model, opt, /*stage=*/1, start_step, manifest.rows.size(), batch_loss);
}

void run_train(const RunConfig& cfg, const RunOptions& opts) {
  if (cfg.train_manifest.empty()) throw std::runtime_error("train: config needs data.train_manifest");
  const data::Manifest manifest = data::load_manifest(cfg.train_manifest, /*require_mask=*/true);
  const auto embedder = text::make_embedder(cfg.embedder_kind, cfg.embedder_assets);

  SegModel model(cfg);
  model.initialize(cfg.seed);
  nn::reset_dropout_stream(cfg.seed);
  if (cfg.freeze_ppe) {
    model.ppe().freeze();
    model.text_encoder().freeze();
    std::cout << "encoder frozen: only fusion, decoder and mask head will train\n";
  }
  SgdMomentum opt(model, cfg.optim.momentum);

  int64_t start_step = 0;
  if (!opts.init_from.empty()) {
    Checkpoint ck = load_checkpoint(opts.init_from);
    if (ck.stage == 1) {
      const InheritReport rep = inherit_encoder(model, ck.tensors);
      std::cout << "inherited " << rep.restored.size() << " encoder tensors from " << opts.init_from << "; "
                << rep.initialized.size() << " tensors freshly initialized\n";
    } else {
      resume_full(model, opt, ck);
      start_step = ck.step;
      std::cout << "resumed stage 2 at step " << start_step << "\n";
    }
  } else if (!opts.from_scratch) {
    throw std::runtime_error("train: pass --init-from <bundle> or opt out with --from-scratch");
  }

  const int64_t h = cfg.model.image_h, w = cfg.model.image_w;
  auto batch_loss = [&](const std::vector<size_t>& batch, int64_t) {
    std::vector<Tensor> imgs, masks;
    std::vector<std::string> captions;
    for (size_t idx : batch) {
      data::Sample s = data::load_sample(manifest.rows[idx], h, w);
      imgs.push_back(std::move(s.image));
      masks.push_back(std::move(s.mask));
      captions.push_back(std::move(s.caption));
    }
    Variable img(stack_rows(imgs));
    Variable mask(stack_rows(masks));
    Variable text(embed_captions(*embedder, captions, cfg.model.text_len));
    Variable pred = model.forward(img, text);
    return losses::total_loss(pred, mask, cfg.loss);
  };
  drive(cfg, model, opt, /*stage=*/2, start_step, manifest.rows.size(), batch_loss);
}

void run_eval(const RunConfig& cfg, const RunOptions& opts) {
  if (opts.init_from.empty()) throw std::runtime_error("eval: --init-from <stage-2 bundle> is required");
  if (cfg.eval_manifest.empty()) throw std::runtime_error("eval: config needs data.eval_manifest");
  const data::Manifest manifest = data::load_manifest(cfg.eval_manifest, /*require_mask=*/true);
  const auto embedder = text::make_embedder(cfg.embedder_kind, cfg.embedder_assets);

  SegModel model(cfg);
  model.initialize(cfg.seed);
  load_into_model(model, opts.init_from);
  model.set_training(false);
  NoGradGuard no_grad;

  fs::create_directories(cfg.output_dir);
  const std::string csv_path = (fs::path(cfg.output_dir) / "eval_metrics.csv").string();
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("eval: cannot write " + csv_path);
  csv << "image,dice,miou,acc,precision,recall\n";

  const int64_t h = cfg.model.image_h, w = cfg.model.image_w;
  double sums[5] = {0, 0, 0, 0, 0};
  for (const auto& row : manifest.rows) {
    const data::Sample s = data::load_sample(row, h, w);
    Variable text(embed_captions(*embedder, {s.caption}, cfg.model.text_len));
    Variable pred = model.forward(Variable(s.image), text);
    const Tensor bin = metrics::binarize(pred.value());
    const metrics::ConfusionCounts c = metrics::confusion(bin, s.mask);
    const double vals[5] = {metrics::dice_score(bin, s.mask), metrics::miou(c), metrics::accuracy(c),
                            metrics::precision(c), metrics::recall(c)};
    csv << csv_quote(row.image_path);
    for (int i = 0; i < 5; ++i) {
      csv << "," << fmt(vals[i]);
      sums[i] += vals[i];
    }
    csv << "\n";
  }
  const double n = static_cast<double>(manifest.rows.size());
  csv << "macro";
  for (double s : sums) csv << "," << fmt(s / n);
  csv << "\n";
  csv.flush();

  const char* names[5] = {"dice", "miou", "acc", "precision", "recall"};
  const std::string summary_path = (fs::path(cfg.output_dir) / "summary.txt").string();
  std::ofstream summary(summary_path);
  for (int i = 0; i < 5; ++i) {
    summary << names[i] << " " << fmt(sums[i] / n) << "\n";
    std::cout << "macro " << names[i] << " " << fmt(sums[i] / n) << "\n";
  }
  std::cout << "wrote " << csv_path << " and " << summary_path << "\n";
}

void run_predict(const RunConfig& cfg, const RunOptions& opts, const PredictArgs& args) {
  if (opts.init_from.empty()) throw std::runtime_error("predict: --init-from <stage-2 bundle> is required");
  if (args.image.empty() || args.caption.empty() || args.out.empty())
    throw std::runtime_error("predict: --image, --caption and --out are all required");
  const auto embedder = text::make_embedder(cfg.embedder_kind, cfg.embedder_assets);

  SegModel model(cfg);
  model.initialize(cfg.seed);
  load_into_model(model, opts.init_from);
  model.set_training(false);
  NoGradGuard no_grad;

  const int64_t h = cfg.model.image_h, w = cfg.model.image_w;
  const Tensor img = data::image_to_tensor(data::read_image(args.image), h, w);
  Variable text(embed_captions(*embedder, {args.caption}, cfg.model.text_len));
  const Variable pred = model.forward(Variable(img), text);

  data::write_image(args.out, data::mask_tensor_to_image(pred.value()));
  std::cout << "wrote " << args.out << "\n";
  if (args.npy) {
    Tensor probs = Tensor::zeros({h, w});
    std::memcpy(probs.data(), pred.value().data(), static_cast<size_t>(h * w) * sizeof(double));
    data::write_npy(args.out + ".npy", probs);
    std::cout << "wrote " << args.out << ".npy\n";
  }
}

}  // namespace mptp::train
