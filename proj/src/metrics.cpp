#include "segc/metrics.hpp"

#include "segc/softset.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace segc {

BinaryMask::BinaryMask(Eigen::Index height, Eigen::Index width) : values_(Storage::Zero(height, width)) {}

BinaryMask::BinaryMask(Storage values) : values_(std::move(values)) {
  if ((values_ > 1).any()) throw std::invalid_argument("BinaryMask: values must be 0 or 1");
}

BinaryMask BinaryMask::from_tensor(const Tensor& t) {
  if (!(t.rank() == 2 || (t.rank() == 3 && t.dim(0) == 1))) {
    throw std::invalid_argument("BinaryMask: expected [H,W] or [1,H,W], got " + shape_string(t.shape()));
  }
  const auto h = static_cast<Eigen::Index>(t.dim(t.rank() - 2));
  const auto w = static_cast<Eigen::Index>(t.dim(t.rank() - 1));
  BinaryMask m(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double v = t[static_cast<std::size_t>(y * w + x)];
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("BinaryMask: tensor is not binary");
      m.values_(y, x) = v == 1.0 ? 1 : 0;
    }
  }
  return m;
}

long BinaryMask::count() const { return values_.cast<long>().sum(); }

Tensor BinaryMask::to_tensor() const {
  Array data(values_.size());
  for (Eigen::Index y = 0; y < height(); ++y)
    for (Eigen::Index x = 0; x < width(); ++x) data(y * width() + x) = values_(y, x);
  return Tensor({1, static_cast<std::size_t>(height()), static_cast<std::size_t>(width())}, std::move(data));
}

BinaryMask threshold(const Tensor& p, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("threshold: t must lie in (0,1)");
  if (!(p.rank() == 2 || (p.rank() == 3 && p.dim(0) == 1))) {
    throw std::invalid_argument("threshold: expected [H,W] or [1,H,W], got " + shape_string(p.shape()));
  }
  require_unit_range(p, "threshold");
  const auto h = static_cast<Eigen::Index>(p.dim(p.rank() - 2));
  const auto w = static_cast<Eigen::Index>(p.dim(p.rank() - 1));
  BinaryMask::Storage s(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) s(y, x) = p[static_cast<std::size_t>(y * w + x)] > t ? 1 : 0;
  return BinaryMask(std::move(s));
}

namespace {

void require_same(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": mask shape mismatch");
}

}  // namespace

double iou(const BinaryMask& y, const BinaryMask& p) {
  require_same(y, p, "iou");
  const long inter = y.values().binaryExpr(p.values(), std::bit_and<>()).cast<long>().sum();
  const long uni = y.values().binaryExpr(p.values(), std::bit_or<>()).cast<long>().sum();
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double binary_inconsistency(const BinaryMask& y, const BinaryMask& a, const BinaryMask& yhat,
                            const BinaryMask& ahat) {
  require_same(y, a, "binary_inconsistency");
  require_same(y, yhat, "binary_inconsistency");
  require_same(y, ahat, "binary_inconsistency");
  long changed = 0, uni = 0;
  for (Eigen::Index r = 0; r < y.height(); ++r) {
    for (Eigen::Index c = 0; c < y.width(); ++c) {
      changed += y(r, c) ^ yhat(r, c) ^ a(r, c) ^ ahat(r, c);
      uni += y(r, c) | yhat(r, c) | a(r, c) | ahat(r, c);
    }
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(changed) / static_cast<double>(uni);
}

double binary_consistency(const BinaryMask& y, const BinaryMask& a, const BinaryMask& yhat,
                          const BinaryMask& ahat) {
  return 1.0 - binary_inconsistency(y, a, yhat, ahat);
}

double border_artifact_rate(const BinaryMask& p, int margin) {
  const Eigen::Index h = p.height(), w = p.width();
  if (margin < 1 || 2.0 * margin >= static_cast<double>(std::min(h, w))) {
    throw std::invalid_argument("border_artifact_rate: margin must satisfy 1 <= margin < min(H,W)/2");
  }
  long border = 0, positive = 0;
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index d = std::min({y, x, h - 1 - y, w - 1 - x});
      if (d >= margin) continue;
      ++border;
      positive += p(y, x);
    }
  }
  return static_cast<double>(positive) / static_cast<double>(border);
}

}  // namespace segc
