#pragma once

#include "segc/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace segc {

/// Strictly {0,1}-valued H x W mask.
class BinaryMask {
 public:
  using Storage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  BinaryMask() = default;
  BinaryMask(Eigen::Index height, Eigen::Index width);
  explicit BinaryMask(Storage values);

  /// Accepts [H,W] or [1,H,W] tensors holding exact 0/1 values.
  static BinaryMask from_tensor(const Tensor& t);

  Eigen::Index height() const { return values_.rows(); }
  Eigen::Index width() const { return values_.cols(); }
  bool same_shape(const BinaryMask& other) const {
    return height() == other.height() && width() == other.width();
  }

  std::uint8_t operator()(Eigen::Index y, Eigen::Index x) const { return values_(y, x); }
  void set(Eigen::Index y, Eigen::Index x, bool on) { values_(y, x) = on ? 1 : 0; }
  const Storage& values() const { return values_; }
  long count() const;

  /// [1,H,W] float tensor of the mask.
  Tensor to_tensor() const;

  bool operator==(const BinaryMask& other) const {
    return same_shape(other) && (values_ == other.values_).all();
  }

 private:
  Storage values_;
};

/// 1 where p > t, else 0. p is [H,W] or [1,H,W] in [0,1].
BinaryMask threshold(const Tensor& p, double t = 0.5);

/// Jaccard index TP / (TP + FP + FN); 1 when both masks are empty.
double iou(const BinaryMask& y, const BinaryMask& p);

/// sum(y ^ yhat ^ a ^ ahat) / sum(y | a | yhat | ahat); 0 when nothing is set.
double binary_inconsistency(const BinaryMask& y, const BinaryMask& a, const BinaryMask& yhat,
                            const BinaryMask& ahat);
double binary_consistency(const BinaryMask& y, const BinaryMask& a, const BinaryMask& yhat,
                          const BinaryMask& ahat);

/// Fraction of pixels within `margin` of the image border that are positive.
double border_artifact_rate(const BinaryMask& p, int margin);

}  // namespace segc
