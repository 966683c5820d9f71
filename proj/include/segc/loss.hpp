#pragma once

#include "segc/tensor.hpp"

namespace segc {

inline constexpr double kLossSmoothing = 1e-6;

/// The four aligned maps compared by the inconsistency loss.
struct MaskQuartet {
  Tensor y;     // label, binary
  Tensor yhat;  // prediction on the clean input, [0,1]
  Tensor a;     // perturbed label, binary
  Tensor ahat;  // prediction on the perturbed input, [0,1]
};

/// 1 - (sum(y p) + s) / (sum(y + p - y p) + s). Gradient flows into p only.
Tensor jaccard_loss(const Tensor& y, const Tensor& p, double smoothing = kLossSmoothing);

/// Segmentation inconsistency loss:
///   sum(Theta(y, yhat, a, ahat)) / (sum(Union(y, yhat, a, ahat)) + s)
/// Labels are treated as constants. With s = 0 an empty union gives 0.
Tensor sil_loss(const MaskQuartet& q, double smoothing = kLossSmoothing);

/// Label-free variant: sum(Theta(yhat, ahat, eps(yhat))) / (sum(Union(...)) + s).
/// eps_of_yhat is the geometric replay of the perturbation on yhat and is detached.
Tensor label_free_sil(const Tensor& yhat, const Tensor& ahat, const Tensor& eps_of_yhat,
                      double smoothing = kLossSmoothing);

/// (1 - w) * l_seg + w * l_sil with a constant weight w in [0,1].
Tensor combined_loss(const Tensor& l_seg, const Tensor& l_sil, double iou_weight);

}  // namespace segc
