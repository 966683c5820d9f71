#pragma once

#include "segc/perturb.hpp"
#include "segc/segmodel.hpp"
#include "segc/synthgen.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace segc {

enum class Regime { none, vanilla, consistency };

std::string to_string(Regime r);
/// Throws std::invalid_argument for unknown names.
Regime parse_regime(const std::string& name);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Array> m;
  std::vector<Array> v;
  long step = 0;
};

/// One bias-corrected Adam update. Throws std::domain_error naming the
/// parameter whose gradient is not finite; nothing is updated in that case.
void adam_step(std::vector<Parameter>& params, std::span<const Tensor> grads, AdamState& state, double lr,
               const AdamOptions& options = {});

/// lr_min + (lr_max - lr_min) (1 + cos(pi t / T_i)) / 2 with T_i = T0 * T_mult^i.
double cosine_warm_restart_lr(int epoch, int t0, int t_mult, double lr_max, double lr_min);

struct TrainConfig {
  Regime regime = Regime::consistency;
  int batch_size = 8;
  double learning_rate = 1e-3;
  AdamOptions adam;
  int scheduler_t0 = 10;
  int scheduler_t_mult = 2;
  double lr_min = 0.0;
  int max_epochs = 60;
  int patience = 20;
  /// Clean Jaccard-only epochs (constant lr, own Adam state) run before the
  /// regime starts. Every regime gets the same warm start for a given seed.
  int pretrain_epochs = 5;
  std::uint64_t seed = 0;
  /// apply_probability applies to the vanilla regime; the perturbed stream of
  /// consistency training is always perturbed.
  PerturbationSpec perturbation;
  bool dynamic_weighting = true;
  double threshold = 0.5;
  int border_margin = 2;

  void validate() const;

  /// Desk-scale defaults: lr 1e-3, T0 10, 60 epochs.
  static TrainConfig desk();
  /// Appendix values: batch 8, lr 1e-5, T0 50, T_mult 2, 300 epochs.
  static TrainConfig paper();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double seg_loss = 0.0;
  double sil_loss = 0.0;
  double iou_weight = 0.0;
  double val_loss = 0.0;
  double val_iou = 0.0;
  double learning_rate = 0.0;
  double border_artifact_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  bool stopped_early = false;
  long forward_passes = 0;   // batch-level model passes
  long backward_passes = 0;  // batch-level backward passes
  long batches = 0;
  std::vector<double> pretrain_loss;  // one entry per warm-start epoch
};

struct TrainResult {
  TinySegNet model;
  TrainHistory history;
};

TrainResult train(const TrainConfig& config, const Suite& suite);

/// Per-image IoU of thresholded predictions, plus the environment mean.
struct EnvironmentEval {
  std::string environment;
  std::vector<double> per_image;
  double mean_iou = 0.0;
};

EnvironmentEval evaluate(const TinySegNet& model, const EnvironmentData& env, double threshold = 0.5);

/// Mean over a batch of the IoU between thresholded predictions and labels.
double batch_iou(std::span<const Tensor> predictions, std::span<const BinaryMask> labels, double threshold);

/// Fixed column order: epoch,train_loss,seg_loss,sil_loss,iou_weight,val_loss,val_iou,learning_rate,border_artifact_rate
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

}  // namespace segc
