#include "segc/loss.hpp"

#include "segc/softset.hpp"

#include <stdexcept>

namespace segc {

namespace {

void require_binary(const Tensor& t, const char* what) {
  if (((t.data() != 0.0) && (t.data() != 1.0)).any()) {
    throw std::domain_error(std::string(what) + ": labels must be binary");
  }
}

// num / (den + s), defined as 0 when the smoothed denominator vanishes.
Tensor region_ratio(const Tensor& num, const Tensor& den, double smoothing) {
  const Tensor smoothed = den + smoothing;
  if (smoothed.item() == 0.0) return num * 0.0;
  return num / smoothed;
}

}  // namespace

Tensor jaccard_loss(const Tensor& y, const Tensor& p, double smoothing) {
  if (y.shape() != p.shape()) {
    throw std::invalid_argument("jaccard_loss: shape mismatch " + shape_string(y.shape()) + " vs " +
                                shape_string(p.shape()));
  }
  require_binary(y, "jaccard_loss");
  require_unit_range(p, "jaccard_loss");
  const Tensor label = y.detach();
  const Tensor inter = label * p;
  const Tensor intersection = sum(inter);
  const Tensor uni = sum(label + p - inter);
  return 1.0 - (intersection + smoothing) / (uni + smoothing);
}

Tensor sil_loss(const MaskQuartet& q, double smoothing) {
  const Shape& s = q.y.shape();
  if (q.yhat.shape() != s || q.a.shape() != s || q.ahat.shape() != s) {
    throw std::invalid_argument("sil_loss: quartet shapes differ");
  }
  require_binary(q.y, "sil_loss");
  require_binary(q.a, "sil_loss");
  const Tensor maps[] = {q.y.detach(), q.yhat, q.a.detach(), q.ahat};
  return region_ratio(sum(soft_symmetric_difference(maps)), sum(soft_union(maps)), smoothing);
}

Tensor label_free_sil(const Tensor& yhat, const Tensor& ahat, const Tensor& eps_of_yhat, double smoothing) {
  if (ahat.shape() != yhat.shape() || eps_of_yhat.shape() != yhat.shape()) {
    throw std::invalid_argument("label_free_sil: shape mismatch");
  }
  const Tensor maps[] = {yhat, ahat, eps_of_yhat.detach()};
  return region_ratio(sum(soft_symmetric_difference(maps)), sum(soft_union(maps)), smoothing);
}

Tensor combined_loss(const Tensor& l_seg, const Tensor& l_sil, double iou_weight) {
  if (!(iou_weight >= 0.0 && iou_weight <= 1.0)) throw std::invalid_argument("combined_loss: weight outside [0,1]");
  return l_seg * (1.0 - iou_weight) + l_sil * iou_weight;
}

}  // namespace segc
