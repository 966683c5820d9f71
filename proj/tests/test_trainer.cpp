#include "segc/trainer.hpp"
#include "segc/loss.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace segc {
namespace {

// Small suite so that a few epochs run in seconds.
Suite small_suite(std::uint64_t seed = 0) {
  SuiteConfig c = SuiteConfig::defaults();
  const auto shrink = [](EnvironmentSpec& e, int n) {
    e.image_size = 32;
    e.n_images = n;
    e.radius_min = 3.0;
    e.radius_max = 7.0;
  };
  shrink(c.in_distribution, 40);
  for (auto& e : c.ood) shrink(e, 8);
  return standard_suite(seed, c);
}

TrainConfig quick(Regime regime, int epochs = 3) {
  TrainConfig c = TrainConfig::desk();
  c.regime = regime;
  c.max_epochs = epochs;
  c.pretrain_epochs = 1;
  return c;
}

std::vector<Parameter> scalar_param(double w) { return {{"w", Tensor::scalar(w)}}; }

TEST(Adam, ZeroGradientLeavesEverythingAtRest) {
  auto params = scalar_param(0.7);
  AdamState state;
  const std::vector<Tensor> g{Tensor::scalar(0.0)};
  for (int i = 0; i < 5; ++i) adam_step(params, g, state, 0.1);
  EXPECT_EQ(params[0].value.item(), 0.7);
  EXPECT_EQ(state.m[0](0), 0.0);
  EXPECT_EQ(state.v[0](0), 0.0);
}

TEST(Adam, FirstStepHasMagnitudeLr) {
  for (double grad : {-3.0, -0.01, 0.5, 40.0}) {
    auto params = scalar_param(1.0);
    AdamState state;
    adam_step(params, std::vector<Tensor>{Tensor::scalar(grad)}, state, 0.01);
    EXPECT_NEAR(params[0].value.item(), 1.0 - 0.01 * std::copysign(1.0, grad), 1e-8) << grad;
  }
}

TEST(Adam, MinimisesSquareInTwoHundredSteps) {
  auto params = scalar_param(1.0);
  AdamState state;
  for (int i = 0; i < 200; ++i) {
    const double w = params[0].value.item();
    adam_step(params, std::vector<Tensor>{Tensor::scalar(2.0 * w)}, state, 0.1);
  }
  EXPECT_LT(std::abs(params[0].value.item()), 0.05);
}

TEST(Adam, NonFiniteGradientNamesParameterAndUpdatesNothing) {
  std::vector<Parameter> params{{"conv1.weight", Tensor::scalar(1.0)}, {"conv1.bias", Tensor::scalar(2.0)}};
  AdamState state;
  const std::vector<Tensor> g{Tensor::scalar(1.0), Tensor::scalar(std::nan(""))};
  try {
    adam_step(params, g, state, 0.1);
    FAIL() << "expected an exception";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("conv1.bias"), std::string::npos);
  }
  EXPECT_EQ(params[0].value.item(), 1.0);
  EXPECT_EQ(state.step, 0);
}

TEST(Cosine, Examples) {
  EXPECT_EQ(cosine_warm_restart_lr(0, 50, 2, 1e-3, 0.0), 1e-3);
  EXPECT_NEAR(cosine_warm_restart_lr(25, 50, 2, 1e-3, 1e-4), 0.5 * (1e-3 + 1e-4), 1e-15);
  EXPECT_EQ(cosine_warm_restart_lr(50, 50, 2, 1e-3, 0.0), 1e-3);
  EXPECT_EQ(cosine_warm_restart_lr(150, 50, 2, 1e-3, 0.0), 1e-3);
  EXPECT_NEAR(cosine_warm_restart_lr(100, 50, 2, 1e-3, 0.0), 0.5e-3, 1e-15);  // middle of the 100-epoch cycle
  EXPECT_THROW(cosine_warm_restart_lr(-1, 50, 2, 1e-3, 0.0), std::invalid_argument);
  EXPECT_THROW(cosine_warm_restart_lr(0, 0, 2, 1e-3, 0.0), std::invalid_argument);
}

TEST(Cosine, MonotoneWithinCycleAndBounded) {
  for (int t_mult : {1, 2, 3}) {
    double prev = INFINITY;
    int cycle_start = 0, period = 7;
    for (int e = 0; e < 200; ++e) {
      if (e == cycle_start + period) {
        cycle_start = e;
        period *= t_mult;
        prev = INFINITY;
      }
      const double lr = cosine_warm_restart_lr(e, 7, t_mult, 1.0, 0.1);
      ASSERT_LT(lr, prev + 1e-15);
      ASSERT_GE(lr, 0.1);
      ASSERT_LE(lr, 1.0);
      if (e == cycle_start) {
        ASSERT_EQ(lr, 1.0);
      }
      prev = lr;
    }
  }
}

TEST(Regime, NamesRoundTrip) {
  for (Regime r : {Regime::none, Regime::vanilla, Regime::consistency}) EXPECT_EQ(parse_regime(to_string(r)), r);
  EXPECT_THROW(parse_regime("mixup"), std::invalid_argument);
}

TEST(TrainConfigTest, Presets) {
  const TrainConfig desk = TrainConfig::desk();
  EXPECT_EQ(desk.learning_rate, 1e-3);
  EXPECT_EQ(desk.max_epochs, 60);
  EXPECT_EQ(desk.scheduler_t0, 10);
  EXPECT_EQ(desk.batch_size, 8);
  EXPECT_EQ(desk.patience, 20);
  EXPECT_TRUE(desk.dynamic_weighting);
  const TrainConfig paper = TrainConfig::paper();
  EXPECT_EQ(paper.learning_rate, 1e-5);
  EXPECT_EQ(paper.scheduler_t0, 50);
  EXPECT_EQ(paper.scheduler_t_mult, 2);
  EXPECT_EQ(paper.batch_size, 8);
  EXPECT_EQ(paper.max_epochs, 300);
}

TEST(TrainConfigTest, Validation) {
  const auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](auto& c) { c.batch_size = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.scheduler_t0 = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.scheduler_t_mult = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.pretrain_epochs = -1; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](auto& c) { c.perturbation.hue = 0.9; }).validate(), std::invalid_argument);
}

TEST(Train, NoneRegimeHasNoSilComponent) {
  const Suite s = small_suite();
  const TrainResult r = train(quick(Regime::none), s);
  ASSERT_EQ(r.history.epochs.size(), 3u);
  for (const EpochRecord& e : r.history.epochs) {
    EXPECT_EQ(e.sil_loss, 0.0);
    EXPECT_EQ(e.iou_weight, 0.0);
    EXPECT_EQ(e.train_loss, e.seg_loss);
  }
  EXPECT_EQ(r.history.pretrain_loss.size(), 1u);
}

// With an identity perturbation the two streams coincide, so a = y and
// ahat = yhat. The fold then reduces to sum 2p(1-p) / sum union, which is 0
// only for saturated predictions; check that value directly.
TEST(Train, IdentityPerturbationDegeneratesQuartet) {
  Rng rng(1);
  const Tensor y = testing::random_binary_tensor(rng, 6, 6);
  const Tensor p = testing::random_tensor(rng, {1, 6, 6}, 0.05, 0.95);
  const Tensor degenerate = sil_loss({y, p, y, p}, 0.0);
  const Tensor num = sum(2.0 * p * (1.0 - p));
  const double yu = (1.0 - (1.0 - y.data()).square() * (1.0 - p.data()).square()).sum();
  EXPECT_NEAR(degenerate.item(), num.item() / yu, 1e-12);
  EXPECT_EQ(sil_loss({y, y, y, y}, 0.0).item(), 0.0);

  const Suite s = small_suite();
  TrainConfig c = quick(Regime::consistency, 3);
  c.perturbation = PerturbationSpec::none();
  const TrainResult r = train(c, s);
  // Nonzero while predictions are soft; training sharpens them, so it falls.
  for (const EpochRecord& e : r.history.epochs) {
    EXPECT_GT(e.sil_loss, 0.0);
    EXPECT_LE(e.sil_loss, 1.0);
  }
  EXPECT_LT(r.history.epochs.back().sil_loss, r.history.epochs.front().sil_loss);
}

TEST(Train, ConsistencyUsesTwoForwardsAndOneBackwardPerBatch) {
  const Suite s = small_suite();
  const TrainResult r = train(quick(Regime::consistency, 2), s);
  EXPECT_EQ(r.history.batches, 2 * 4);  // 32 training images, batch 8
  EXPECT_EQ(r.history.forward_passes, 2 * r.history.batches);
  EXPECT_EQ(r.history.backward_passes, r.history.batches);
  const TrainResult none = train(quick(Regime::none, 2), s);
  EXPECT_EQ(none.history.forward_passes, none.history.batches);
}

TEST(Train, NoneRegimeIsBitDeterministic) {
  const Suite s = small_suite();
  TrainConfig c = quick(Regime::none);
  c.perturbation = PerturbationSpec::none();
  const TrainResult a = train(c, s), b = train(c, s);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.history.epochs.size(), b.history.epochs.size());
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
    EXPECT_EQ(a.history.epochs[i].train_loss, b.history.epochs[i].train_loss);
    EXPECT_EQ(a.history.epochs[i].val_loss, b.history.epochs[i].val_loss);
  }
}

TEST(Train, EveryRegimeIsDeterministic) {
  const Suite s = small_suite();
  for (Regime regime : {Regime::vanilla, Regime::consistency}) {
    const TrainConfig c = quick(regime, 2);
    EXPECT_EQ(train(c, s).model, train(c, s).model) << to_string(regime);
  }
}

TEST(Train, UnweightedRunRecordsBorderArtifacts) {
  const Suite s = small_suite();
  TrainConfig c = quick(Regime::consistency, 2);
  c.dynamic_weighting = false;
  const TrainResult r = train(c, s);
  ASSERT_EQ(r.history.epochs.size(), 2u);
  for (const EpochRecord& e : r.history.epochs) {
    EXPECT_EQ(e.iou_weight, 0.5);
    EXPECT_NEAR(e.train_loss, 0.5 * (e.seg_loss + e.sil_loss), 1e-12);
    EXPECT_GE(e.border_artifact_rate, 0.0);
    EXPECT_LE(e.border_artifact_rate, 1.0);
  }
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  const Suite s = small_suite();
  TrainConfig c = quick(Regime::none, 12);
  c.patience = 1;
  c.learning_rate = 5e-2;  // noisy enough that validation loss goes up at some point
  const TrainResult r = train(c, s);
  ASSERT_GE(r.history.best_epoch, 0);
  const auto& best = r.history.epochs[static_cast<std::size_t>(r.history.best_epoch)];
  for (const EpochRecord& e : r.history.epochs) EXPECT_GE(e.val_loss, best.val_loss);
  if (r.history.stopped_early) {
    EXPECT_EQ(r.history.epochs.size(), static_cast<std::size_t>(r.history.best_epoch) + 2);
  }
  // The returned model is the best epoch's: its validation IoU matches the record.
  EXPECT_NEAR(evaluate(r.model, s.val).mean_iou, best.val_iou, 1e-12);
}

TEST(Train, LearningRateFollowsSchedule) {
  const Suite s = small_suite();
  TrainConfig c = quick(Regime::none, 4);
  c.scheduler_t0 = 2;
  c.scheduler_t_mult = 1;
  const TrainResult r = train(c, s);
  for (const EpochRecord& e : r.history.epochs)
    EXPECT_EQ(e.learning_rate, cosine_warm_restart_lr(e.epoch, 2, 1, c.learning_rate, c.lr_min));
}

TEST(Train, EmptyTrainingSetThrows) {
  Suite s = small_suite();
  s.train.samples.clear();
  EXPECT_THROW(train(quick(Regime::none), s), std::invalid_argument);
}

TEST(Evaluate, OracleAndEmptyPredictions) {
  const Suite s = small_suite();
  // A model whose output bias is hugely negative predicts background everywhere.
  TinySegNet m = TinySegNet::init(0);
  std::vector<Tensor> v = m.values();
  v.back() = Tensor::from({1}, {-1e3});
  m.set_values(v);
  const EnvironmentEval e = evaluate(m, s.test_id);
  ASSERT_EQ(e.per_image.size(), s.test_id.samples.size());
  EXPECT_EQ(e.mean_iou, 0.0);

  double acc = 0.0;
  for (const SampleRecord& r : s.test_id.samples) acc += iou(r.mask, r.mask);
  EXPECT_EQ(acc / static_cast<double>(s.test_id.samples.size()), 1.0);
}

TEST(Evaluate, TrainingImprovesOverInit) {
  const Suite s = small_suite();
  TrainConfig c = quick(Regime::none, 15);
  c.pretrain_epochs = 5;
  const TrainResult r = train(c, s);
  EXPECT_GT(evaluate(r.model, s.test_id).mean_iou, 0.5);
  EXPECT_GT(evaluate(r.model, s.test_id).mean_iou, evaluate(TinySegNet::init(0), s.test_id).mean_iou);
}

TEST(History, CsvHasFixedColumns) {
  const auto dir = testing::scratch_dir("history");
  TrainHistory h;
  h.epochs.push_back({0, 0.5, 0.4, 0.1, 0.2, 0.6, 0.7, 1e-3, 0.05});
  write_history_csv(dir / "h.csv", h);
  const std::string text = testing::slurp(dir / "h.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "epoch,train_loss,seg_loss,sil_loss,iou_weight,val_loss,val_iou,learning_rate,border_artifact_rate");
  EXPECT_NE(text.find("\n0,0.5,"), std::string::npos);
}

}  // namespace
}  // namespace segc
