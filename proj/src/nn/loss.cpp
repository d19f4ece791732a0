#include "wconv/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wconv {

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [B, n], got " + to_string(logits.shape()));
  const std::size_t b = logits.extent(0), n = logits.extent(1);
  Tensor p(logits.shape());
  for (std::size_t s = 0; s < b; ++s) {
    const double* z = logits.data().data() + s * n;
    double* out = p.data().data() + s * n;
    const double m = *std::max_element(z, z + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += (out[j] = std::exp(z[j] - m));
    for (std::size_t j = 0; j < n; ++j) out[j] /= total;
  }
  return p;
}

LossResult cross_entropy_label_smoothing(const Tensor& logits, std::span<const int> targets,
                                         double epsilon) {
  if (logits.rank() != 2) throw ShapeError("cross entropy expects [B, n] logits");
  const std::size_t b = logits.extent(0), n = logits.extent(1);
  if (n < 2) throw std::invalid_argument("cross entropy needs at least two classes");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("label smoothing must be in [0, 1)");
  if (targets.size() != b) throw ShapeError("one target per batch row required");

  const double off = epsilon / static_cast<double>(n);
  const double on = 1.0 - epsilon + off;
  LossResult r{0.0, Tensor(logits.shape())};
  for (std::size_t s = 0; s < b; ++s) {
    const int t = targets[s];
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw std::invalid_argument("class id " + std::to_string(t) + " outside [0, " + std::to_string(n) + ")");
    }
    const double* z = logits.data().data() + s * n;
    const double m = *std::max_element(z, z + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(z[j] - m);
    const double log_total = std::log(total);
    double loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double q = static_cast<std::size_t>(t) == j ? on : off;
      const double log_p = z[j] - m - log_total;
      loss -= q * log_p;
      r.grad[s * n + j] = (std::exp(log_p) - q) / static_cast<double>(b);
    }
    r.value += loss;
  }
  r.value /= static_cast<double>(b);
  return r;
}

LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse_loss");
  const double count = static_cast<double>(prediction.size());
  LossResult r{0.0, Tensor(prediction.shape())};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    r.value += d * d;
    r.grad[i] = 2.0 * d / count;
  }
  r.value /= count;
  return r;
}

}  // namespace wconv
