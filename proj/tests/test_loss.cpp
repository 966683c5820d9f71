#include "segc/loss.hpp"
#include "segc/metrics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace segc {
namespace {

using testing::random_binary_tensor;
using testing::random_tensor;

Tensor t2(std::initializer_list<double> v) { return Tensor::from({1, 2, 2}, v); }

TEST(Jaccard, Examples) {
  const Tensor y = t2({1, 0, 1, 1});
  EXPECT_NEAR(jaccard_loss(y, y).item(), 0.0, 1e-6);
  EXPECT_NEAR(jaccard_loss(y, 1.0 - y).item(), 1.0, 1e-6);
  const Tensor y2 = t2({1, 1, 0, 0});
  const double s = kLossSmoothing;
  EXPECT_NEAR(jaccard_loss(y2, Tensor::full({1, 2, 2}, 0.5)).item(), 1.0 - (1.0 + s) / (3.0 + s), 1e-15);
}

TEST(Jaccard, Errors) {
  EXPECT_THROW(jaccard_loss(t2({1, 0, 0, 0}), Tensor::zeros({1, 2, 3})), std::invalid_argument);
  EXPECT_THROW(jaccard_loss(t2({1, 0.5, 0, 0}), t2({1, 0, 0, 0})), std::domain_error);
  EXPECT_THROW(jaccard_loss(t2({1, 0, 0, 0}), t2({1.5, 0, 0, 0})), std::domain_error);
}

TEST(Sil, Examples) {
  const Tensor y = t2({1, 0, 0, 0});
  EXPECT_EQ(sil_loss({y, y, y, y}).item(), 0.0);
  EXPECT_EQ(sil_loss({y, y, y, t2({1, 1, 0, 0})}, 0.0).item(), 0.5);
  EXPECT_NEAR(sil_loss({y, y, y, t2({1, 1, 0, 0})}).item(), 0.5, 1e-6);
  const Tensor z = Tensor::zeros({1, 2, 2});
  EXPECT_EQ(sil_loss({z, z, z, z}).item(), 0.0);
  EXPECT_EQ(sil_loss({z, z, z, z}, 0.0).item(), 0.0);
}

TEST(Sil, Errors) {
  const Tensor y = t2({1, 0, 0, 0});
  EXPECT_THROW(sil_loss({y, y, Tensor::zeros({1, 2, 3}), y}), std::invalid_argument);
  EXPECT_THROW(sil_loss({t2({0.5, 0, 0, 0}), y, y, y}), std::domain_error);
  EXPECT_THROW(sil_loss({y, t2({1.5, 0, 0, 0}), y, y}), std::domain_error);
}

TEST(Sil, LabelsGetNoGradient) {
  Rng rng(1);
  Graph g;
  const Tensor y = g.leaf(random_binary_tensor(rng, 3, 3));
  const Tensor a = g.leaf(random_binary_tensor(rng, 3, 3));
  const Tensor yhat = g.leaf(random_tensor(rng, {1, 3, 3}, 0.1, 0.9));
  const Tensor ahat = g.leaf(random_tensor(rng, {1, 3, 3}, 0.1, 0.9));
  const GradientMap grads = g.backward(sil_loss({y, yhat, a, ahat}));
  EXPECT_TRUE((grads.at(y).data() == 0.0).all());
  EXPECT_TRUE((grads.at(a).data() == 0.0).all());
  EXPECT_FALSE((grads.at(yhat).data() == 0.0).all());
}

TEST(LabelFreeSil, Examples) {
  const Tensor yhat = t2({1, 1, 0, 0});
  // Odd-arity fold: Theta(x, x, x) = x, so the ratio is 1 for binary non-empty x.
  EXPECT_NEAR(label_free_sil(yhat, yhat, yhat).item(), 1.0, 1e-6);
  const Tensor z = Tensor::zeros({1, 2, 2});
  EXPECT_EQ(label_free_sil(z, z, z).item(), 0.0);
  EXPECT_THROW(label_free_sil(z, z, Tensor::zeros({1, 2, 3})), std::invalid_argument);
}

TEST(LabelFreeSil, ReplayIsDetached) {
  Rng rng(2);
  Graph g;
  const Tensor yhat = g.leaf(random_tensor(rng, {1, 3, 3}, 0.1, 0.9));
  const Tensor ahat = g.leaf(random_tensor(rng, {1, 3, 3}, 0.1, 0.9));
  const Tensor replay = g.leaf(random_tensor(rng, {1, 3, 3}, 0.1, 0.9));
  const GradientMap grads = g.backward(label_free_sil(yhat, ahat, replay));
  EXPECT_TRUE((grads.at(replay).data() == 0.0).all());
  EXPECT_FALSE((grads.at(ahat).data() == 0.0).all());
}

TEST(Combined, Endpoints) {
  const Tensor seg = Tensor::scalar(0.4), sil = Tensor::scalar(0.2);
  EXPECT_EQ(combined_loss(seg, sil, 0.0).item(), 0.4);
  EXPECT_EQ(combined_loss(seg, sil, 1.0).item(), 0.2);
  EXPECT_NEAR(combined_loss(seg, sil, 0.5).item(), 0.3, 1e-15);
  EXPECT_THROW(combined_loss(seg, sil, -0.01), std::invalid_argument);
  EXPECT_THROW(combined_loss(seg, sil, 1.01), std::invalid_argument);
}

TEST(Combined, EndpointsExactOnRandomLosses) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Tensor seg = Tensor::scalar(uniform01(rng)), sil = Tensor::scalar(uniform01(rng));
    ASSERT_EQ(combined_loss(seg, sil, 0.0).item(), seg.item());
    ASSERT_EQ(combined_loss(seg, sil, 1.0).item(), sil.item());
  }
}

TEST(Combined, MonotoneInEachLoss) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double w = uniform01(rng), a = uniform01(rng), b = uniform01(rng), d = uniform(rng, 0.0, 0.5);
    const double base = combined_loss(Tensor::scalar(a), Tensor::scalar(b), w).item();
    ASSERT_GE(combined_loss(Tensor::scalar(a + d), Tensor::scalar(b), w).item(), base);
    ASSERT_GE(combined_loss(Tensor::scalar(a), Tensor::scalar(b + d), w).item(), base);
  }
}

TEST(Combined, WeightCarriesNoGradientButLossesDo) {
  Graph g;
  const Tensor seg = g.leaf(Tensor::scalar(0.4));
  const Tensor sil = g.leaf(Tensor::scalar(0.2));
  const GradientMap grads = g.backward(combined_loss(seg, sil, 0.25));
  EXPECT_EQ(grads.at(seg).item(), 0.75);
  EXPECT_EQ(grads.at(sil).item(), 0.25);
}

// All 2^16 binary 2x2 quartets: SIL without smoothing equals the binary inconsistency count exactly.
TEST(LossProperty, SilMatchesBinaryInconsistencyExhaustively) {
  const auto decode = [](unsigned bits) {
    BinaryMask m(2, 2);
    for (int i = 0; i < 4; ++i) m.set(i / 2, i % 2, (bits >> i) & 1u);
    return m;
  };
  for (unsigned code = 0; code < 65536; ++code) {
    const BinaryMask y = decode(code & 15u), yh = decode((code >> 4) & 15u);
    const BinaryMask a = decode((code >> 8) & 15u), ah = decode((code >> 12) & 15u);
    const double soft = sil_loss({y.to_tensor(), yh.to_tensor(), a.to_tensor(), ah.to_tensor()}, 0.0).item();
    ASSERT_EQ(soft, binary_inconsistency(y, a, yh, ah)) << "code " << code;
  }
}

TEST(LossProperty, RangeOnRandomInputs) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Tensor y = random_binary_tensor(rng, 4, 4, uniform01(rng));
    const Tensor a = random_binary_tensor(rng, 4, 4, uniform01(rng));
    const Tensor p = random_tensor(rng, {1, 4, 4}), q = random_tensor(rng, {1, 4, 4});
    for (double v : {jaccard_loss(y, p).item(), sil_loss({y, p, a, q}).item(), label_free_sil(p, q, a).item()}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(LossProperty, SilZeroWhenPredictionsMatchLabels) {
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    const Tensor y = random_binary_tensor(rng, 3, 5, uniform01(rng));
    const Tensor a = random_binary_tensor(rng, 3, 5, uniform01(rng));
    ASSERT_EQ(sil_loss({y, y, a, a}).item(), 0.0);
  }
}

// 50 random quartets per loss, predictions in [0.05, 0.95].
TEST(LossProperty, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Tensor y = random_binary_tensor(rng, 4, 4);
    const Tensor a = random_binary_tensor(rng, 4, 4);
    const Tensor yhat = random_tensor(rng, {1, 4, 4}, 0.05, 0.95);
    const Tensor ahat = random_tensor(rng, {1, 4, 4}, 0.05, 0.95);
    const Tensor replay = random_tensor(rng, {1, 4, 4}, 0.05, 0.95);
    ASSERT_LT(grad_check([&](const Tensor& p) { return jaccard_loss(y, p); }, yhat), 1e-4) << seed;
    ASSERT_LT(grad_check([&](const Tensor& p) { return sil_loss({y, p, a, ahat}); }, yhat), 1e-4) << seed;
    ASSERT_LT(grad_check([&](const Tensor& p) { return sil_loss({y, yhat, a, p}); }, ahat), 1e-4) << seed;
    ASSERT_LT(grad_check([&](const Tensor& p) { return label_free_sil(p, ahat, replay); }, yhat), 1e-4) << seed;
    ASSERT_LT(grad_check([&](const Tensor& p) { return label_free_sil(yhat, p, replay); }, ahat), 1e-4) << seed;
  }
}

}  // namespace
}  // namespace segc
