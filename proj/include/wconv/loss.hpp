#pragma once

#include <span>

#include "wconv/tensor.hpp"

namespace wconv {

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d value / d prediction, same shape as the prediction
};

/// Row-wise softmax of [B, n] logits.
Tensor softmax(const Tensor& logits);

/**
 * Mean over the batch of cross-entropy between softmax(logits) and the
 * smoothed target q = (1 - eps) * onehot + eps / n.
 *
 * Throws std::invalid_argument for n < 2, eps outside [0, 1), or a class id
 * outside [0, n).
 */
LossResult cross_entropy_label_smoothing(const Tensor& logits, std::span<const int> targets,
                                         double epsilon);

/// Mean of squared differences over every element.
LossResult mse_loss(const Tensor& prediction, const Tensor& target);

}  // namespace wconv
