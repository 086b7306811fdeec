// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: pretrain | train | eval | predict, each driven by
// one JSON config plus a handful of overrides.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mptp/train/trainer.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string init_from;
  int64_t seed = -1;
  bool freeze_ppe = false;
  bool no_downvit = false;
  bool no_upvit = false;
  bool no_msff = false;
  bool no_upattention = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "JSON run configuration")->required();
  sub->add_option("--init-from", a.init_from, "checkpoint bundle to start from");
  sub->add_option("--seed", a.seed, "override the config seed");
  sub->add_flag("--freeze-ppe", a.freeze_ppe, "freeze encoder weights (train only)");
  sub->add_flag("--no-downvit", a.no_downvit, "ablation: skip the down-path transformer blocks");
  sub->add_flag("--no-upvit", a.no_upvit, "ablation: skip the up path entirely");
  sub->add_flag("--no-msff", a.no_msff, "ablation: plain projections instead of multiscale fusion");
  sub->add_flag("--no-upattention", a.no_upattention, "ablation: plain decoder without attention gates");
}

mptp::train::RunConfig make_config(const CommonArgs& a) {
  mptp::train::RunConfig cfg = mptp::train::load_config(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<uint64_t>(a.seed);
  if (a.freeze_ppe) cfg.freeze_ppe = true;
  if (a.no_downvit) cfg.model.use_downvit = false;
  if (a.no_upvit) cfg.model.use_upvit = false;
  if (a.no_msff) cfg.use_msff = false;
  if (a.no_upattention) cfg.use_upattention = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-prompted binary segmentation"};
  app.require_subcommand(1);

  CommonArgs pre_args, train_args, eval_args, pred_args;
  bool from_scratch = false;
  mptp::train::PredictArgs predict;

  CLI::App* pre = app.add_subcommand("pretrain", "stage 1: contrastive encoder pretraining");
  add_common(pre, pre_args);

  CLI::App* train = app.add_subcommand("train", "stage 2: supervised mask training");
  add_common(train, train_args);
  train->add_flag("--from-scratch", from_scratch, "train stage 2 without any bundle");

  CLI::App* eval = app.add_subcommand("eval", "metrics over the eval manifest");
  add_common(eval, eval_args);

  CLI::App* pred = app.add_subcommand("predict", "segment one image");
  add_common(pred, pred_args);
  pred->add_option("--image", predict.image, "input image (PNM or PNG)")->required();
  pred->add_option("--caption", predict.caption, "text prompt")->required();
  pred->add_option("--out", predict.out, "output mask image path")->required();
  pred->add_flag("--npy", predict.npy, "also write probabilities to <out>.npy");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      mptp::train::run_pretrain(make_config(pre_args), {pre_args.init_from, false});
    } else if (train->parsed()) {
      mptp::train::run_train(make_config(train_args), {train_args.init_from, from_scratch});
    } else if (eval->parsed()) {
      mptp::train::run_eval(make_config(eval_args), {eval_args.init_from, false});
    } else if (pred->parsed()) {
      mptp::train::run_predict(make_config(pred_args), {pred_args.init_from, false}, predict);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
