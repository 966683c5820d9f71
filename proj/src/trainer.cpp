#include "segc/trainer.hpp"

#include "segc/loss.hpp"
#include "segc/metrics.hpp"
#include "segc/random.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace segc {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::none: return "none";
    case Regime::vanilla: return "vanilla";
    case Regime::consistency: return "consistency";
  }
  return "unknown";
}

Regime parse_regime(const std::string& name) {
  if (name == "none") return Regime::none;
  if (name == "vanilla") return Regime::vanilla;
  if (name == "consistency") return Regime::consistency;
  throw std::invalid_argument("unknown regime '" + name + "' (expected none, vanilla or consistency)");
}

// ---------------------------------------------------------------------------
// Optimiser and schedule

void adam_step(std::vector<Parameter>& params, std::span<const Tensor> grads, AdamState& state, double lr,
               const AdamOptions& options) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[i].name);
    }
    if (!grads[i].data().allFinite()) throw std::domain_error("adam_step: non-finite gradient for " + params[i].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Array::Zero(static_cast<Eigen::Index>(p.value.size())));
      state.v.push_back(Array::Zero(static_cast<Eigen::Index>(p.value.size())));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Array& g = grads[i].data();
    state.m[i] = options.beta1 * state.m[i] + (1.0 - options.beta1) * g;
    state.v[i] = options.beta2 * state.v[i] + (1.0 - options.beta2) * g.square();
    Array next = params[i].value.data() - lr * (state.m[i] / c1) / ((state.v[i] / c2).sqrt() + options.epsilon);
    params[i].value = Tensor(params[i].value.shape(), std::move(next));
  }
}

double cosine_warm_restart_lr(int epoch, int t0, int t_mult, double lr_max, double lr_min) {
  if (epoch < 0) throw std::invalid_argument("cosine_warm_restart_lr: epoch must be >= 0");
  if (t0 < 1 || t_mult < 1) throw std::invalid_argument("cosine_warm_restart_lr: T0 and T_mult must be >= 1");
  long t = epoch;
  long period = t0;
  while (t >= period) {
    t -= period;
    period *= t_mult;
  }
  const double phase = std::numbers::pi * static_cast<double>(t) / static_cast<double>(period);
  return lr_min + (lr_max - lr_min) * (1.0 + std::cos(phase)) / 2.0;
}

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  const auto fail = [](const char* why) { throw std::invalid_argument(std::string("TrainConfig: ") + why); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (scheduler_t0 < 1) fail("scheduler T0 must be >= 1");
  if (scheduler_t_mult < 1) fail("scheduler T_mult must be >= 1");
  if (!(learning_rate > 0.0) || lr_min < 0.0 || lr_min > learning_rate) fail("learning rates invalid");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (pretrain_epochs < 0) fail("pretrain_epochs must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0,1)");
  if (border_margin < 1) fail("border_margin must be >= 1");
  perturbation.validate();
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.batch_size = 8;
  c.learning_rate = 1e-5;
  c.scheduler_t0 = 50;
  c.scheduler_t_mult = 2;
  c.max_epochs = 300;
  return c;
}

// ---------------------------------------------------------------------------
// Training

double batch_iou(std::span<const Tensor> predictions, std::span<const BinaryMask> labels, double threshold_value) {
  if (predictions.size() != labels.size() || predictions.empty()) throw std::invalid_argument("batch_iou: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) acc += iou(labels[i], threshold(predictions[i], threshold_value));
  return acc / static_cast<double>(predictions.size());
}

namespace {

struct BatchLoss {
  Tensor total;
  double seg = 0.0;
  double sil = 0.0;
  double weight = 0.0;
};

// Clean and (optionally) perturbed views of one mini-batch.
struct BatchInputs {
  std::vector<Tensor> images;
  std::vector<BinaryMask> labels;
  std::vector<Tensor> perturbed_images;
  std::vector<BinaryMask> perturbed_labels;
};

std::vector<Tensor> mask_tensors(std::span<const BinaryMask> masks) {
  std::vector<Tensor> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(m.to_tensor());
  return out;
}

class Trainer {
 public:
  Trainer(const TrainConfig& config, const Suite& suite) : cfg_(config), suite_(suite) {
    consistency_spec_ = cfg_.perturbation;
    consistency_spec_.apply_probability = 1.0;
  }

  TrainResult run() {
    TinySegNet model = TinySegNet::init(cfg_.seed);
    std::vector<Parameter> params = model.parameters();
    TrainHistory history;
    if (suite_.train.samples.empty()) throw std::invalid_argument("train: empty training set");

    // Shared clean warm start: identical for every regime under one seed.
    {
      AdamState adam;
      for (int epoch = 0; epoch < cfg_.pretrain_epochs; ++epoch) {
        EpochRecord rec;
        run_epoch(params, adam, Regime::none, cfg_.learning_rate, derive_seed(cfg_.seed, hash_name("pretrain"), epoch),
                  epoch, rec, history);
        history.pretrain_loss.push_back(rec.train_loss);
      }
      history.forward_passes = history.backward_passes = history.batches = 0;
    }

    std::vector<Tensor> best;
    for (const auto& p : params) best.push_back(p.value);
    double best_loss = INFINITY;
    AdamState adam;
    for (int epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
      const double lr = cosine_warm_restart_lr(epoch, cfg_.scheduler_t0, cfg_.scheduler_t_mult, cfg_.learning_rate,
                                               cfg_.lr_min);
      EpochRecord rec;
      rec.epoch = epoch;
      rec.learning_rate = lr;
      run_epoch(params, adam, cfg_.regime, lr, derive_seed(cfg_.seed, hash_name("shuffle"), epoch), epoch, rec,
                history);

      std::vector<Tensor> current;
      for (const auto& p : params) current.push_back(p.value);
      validate_epoch(current, rec);
      history.epochs.push_back(rec);

      if (rec.val_loss < best_loss) {
        best_loss = rec.val_loss;
        best = current;
        history.best_epoch = epoch;
      } else if (epoch - history.best_epoch >= cfg_.patience) {
        history.stopped_early = true;
        break;
      }
    }

    model.set_values(best);
    return {std::move(model), std::move(history)};
  }

 private:
  void run_epoch(std::vector<Parameter>& params, AdamState& adam, Regime regime, double lr,
                 std::uint64_t shuffle_seed, int epoch, EpochRecord& rec, TrainHistory& history) const {
    const std::size_t n = suite_.train.samples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(shuffle_seed);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(shuffle, 0, static_cast<long>(i) - 1))]);
    }

    long batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg_.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg_.batch_size));
      BatchInputs in = training_batch(regime, std::span(order).subspan(start, stop - start), epoch);

      Graph graph;
      std::vector<Tensor> leaves;
      leaves.reserve(params.size());
      for (const auto& p : params) leaves.push_back(graph.leaf(p.value));
      BatchLoss loss = batch_loss(regime, leaves, in, history);
      const double value = loss.total.item();
      if (!std::isfinite(value)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches));
      }
      const GradientMap grads = graph.backward(loss.total);
      ++history.backward_passes;
      std::vector<Tensor> g;
      g.reserve(leaves.size());
      for (const auto& leaf : leaves) g.push_back(grads.at(leaf));
      adam_step(params, g, adam, lr, cfg_.adam);

      rec.train_loss += value;
      rec.seg_loss += loss.seg;
      rec.sil_loss += loss.sil;
      rec.iou_weight += loss.weight;
      ++batches;
    }
    history.batches += batches;
    rec.train_loss /= static_cast<double>(batches);
    rec.seg_loss /= static_cast<double>(batches);
    rec.sil_loss /= static_cast<double>(batches);
    rec.iou_weight /= static_cast<double>(batches);
  }

  BatchInputs training_batch(Regime regime, std::span<const std::size_t> indices, int epoch) const {
    BatchInputs in;
    for (std::size_t idx : indices) {
      const SampleRecord& s = suite_.train.samples[idx];
      const std::uint64_t pseed = derive_seed(cfg_.seed, hash_name("perturb"), epoch, idx);
      switch (regime) {
        case Regime::none:
          in.images.push_back(s.image);
          in.labels.push_back(s.mask);
          break;
        case Regime::vanilla: {
          const AppliedPerturbation p = sample(cfg_.perturbation, pseed);
          in.images.push_back(apply_to_image(p, s.image));
          in.labels.push_back(apply_to_mask(p, s.mask));
          break;
        }
        case Regime::consistency: {
          const AppliedPerturbation p = sample(consistency_spec_, pseed);
          in.images.push_back(s.image);
          in.labels.push_back(s.mask);
          in.perturbed_images.push_back(apply_to_image(p, s.image));
          in.perturbed_labels.push_back(apply_to_mask(p, s.mask));
          break;
        }
      }
    }
    return in;
  }

  BatchLoss batch_loss(Regime regime, std::span<const Tensor> params, const BatchInputs& in, TrainHistory& history) const {
    std::vector<Tensor> preds;
    preds.reserve(in.images.size());
    for (const auto& x : in.images) preds.push_back(forward(params, x));
    ++history.forward_passes;
    const Tensor labels = stack(mask_tensors(in.labels));
    const Tensor predicted = stack(preds);

    BatchLoss out;
    const Tensor seg = jaccard_loss(labels, predicted);
    out.seg = seg.item();
    if (regime != Regime::consistency) {
      out.total = seg;
      return out;
    }

    std::vector<Tensor> perturbed_preds;
    perturbed_preds.reserve(in.perturbed_images.size());
    for (const auto& x : in.perturbed_images) perturbed_preds.push_back(forward(params, x));
    ++history.forward_passes;
    const MaskQuartet q{labels, predicted, stack(mask_tensors(in.perturbed_labels)), stack(perturbed_preds)};
    const Tensor sil = sil_loss(q);
    out.sil = sil.item();
    if (cfg_.dynamic_weighting) {
      out.weight = batch_iou(preds, in.labels, cfg_.threshold);
      out.total = combined_loss(seg, sil, out.weight);
    } else {
      out.weight = 0.5;
      out.total = (seg + sil) * 0.5;
    }
    return out;
  }

  // Validation uses clean images plus, for consistency training, one fixed
  // perturbation per validation image.
  void validate_epoch(std::span<const Tensor> params, EpochRecord& rec) const {
    const auto& samples = suite_.val.samples;
    if (samples.empty()) throw std::invalid_argument("train: empty validation set");
    double loss_acc = 0.0, iou_acc = 0.0, border_acc = 0.0;
    long batches = 0;
    const auto bs = static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t start = 0; start < samples.size(); start += bs) {
      const std::size_t stop = std::min(samples.size(), start + bs);
      std::vector<Tensor> preds, perturbed_preds;
      std::vector<BinaryMask> labels, perturbed_labels;
      for (std::size_t i = start; i < stop; ++i) {
        const SampleRecord& s = samples[i];
        preds.push_back(forward(params, s.image));
        labels.push_back(s.mask);
        const BinaryMask predicted = threshold(preds.back(), cfg_.threshold);
        iou_acc += iou(s.mask, predicted);
        border_acc += border_artifact_rate(predicted, cfg_.border_margin);
        if (cfg_.regime == Regime::consistency) {
          const AppliedPerturbation p = sample(consistency_spec_, derive_seed(cfg_.seed, hash_name("val"), i));
          perturbed_preds.push_back(forward(params, apply_to_image(p, s.image)));
          perturbed_labels.push_back(apply_to_mask(p, s.mask));
        }
      }
      const Tensor y = stack(mask_tensors(labels));
      const Tensor yhat = stack(preds);
      const Tensor seg = jaccard_loss(y, yhat);
      if (cfg_.regime == Regime::consistency) {
        const Tensor sil = sil_loss({y, yhat, stack(mask_tensors(perturbed_labels)), stack(perturbed_preds)});
        loss_acc += cfg_.dynamic_weighting ? combined_loss(seg, sil, batch_iou(preds, labels, cfg_.threshold)).item()
                                           : 0.5 * (seg.item() + sil.item());
      } else {
        loss_acc += seg.item();
      }
      ++batches;
    }
    rec.val_loss = loss_acc / static_cast<double>(batches);
    rec.val_iou = iou_acc / static_cast<double>(samples.size());
    rec.border_artifact_rate = border_acc / static_cast<double>(samples.size());
  }

  const TrainConfig& cfg_;
  const Suite& suite_;
  PerturbationSpec consistency_spec_;
};

}  // namespace

TrainResult train(const TrainConfig& config, const Suite& suite) {
  config.validate();
  return Trainer(config, suite).run();
}

EnvironmentEval evaluate(const TinySegNet& model, const EnvironmentData& env, double threshold_value) {
  EnvironmentEval out;
  out.environment = env.name;
  const std::vector<Tensor> params = model.values();
  for (const auto& s : env.samples) {
    out.per_image.push_back(iou(s.mask, threshold(forward(params, s.image), threshold_value)));
  }
  if (!out.per_image.empty()) {
    double acc = 0.0;
    for (double v : out.per_image) acc += v;
    out.mean_iou = acc / static_cast<double>(out.per_image.size());
  }
  return out;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "epoch,train_loss,seg_loss,sil_loss,iou_weight,val_loss,val_iou,learning_rate,border_artifact_rate\n";
  char line[512];
  for (const auto& e : history.epochs) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                  e.seg_loss, e.sil_loss, e.iou_weight, e.val_loss, e.val_iou, e.learning_rate,
                  e.border_artifact_rate);
    os << line;
  }
}

}  // namespace segc
