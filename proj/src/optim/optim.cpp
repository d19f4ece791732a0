#include "wconv/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wconv {

void Optimizer::bind(std::span<const ParamRef> params, std::vector<std::vector<Tensor>*> slot_sets) {
  for (auto* slots : slot_sets) {
    if (slots->empty()) {
      slots->reserve(params.size());
      for (const auto& p : params) slots->emplace_back(p.value->shape());
    }
    if (slots->size() != params.size()) {
      throw ShapeError("optimizer was bound to " + std::to_string(slots->size()) + " parameters, got " +
                       std::to_string(params.size()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i].value, *params[i].grad, "optimizer gradient");
    require_same_shape(*params[i].value, (*slot_sets.front())[i], "optimizer state");
  }
}

void Sgd::step(std::span<const ParamRef> params) {
  bind(params, {&velocity_});
  const double mu = config_.momentum, lambda = config_.weight_decay, lr = config_.lr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value->data();
    auto g = params[i].grad->data();
    auto v = velocity_[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = mu * v[j] + (g[j] + lambda * theta[j]);
      theta[j] -= lr * v[j];
    }
  }
  ++steps_;
}

void Adam::step(std::span<const ParamRef> params) {
  bind(params, {&m_, &v_});
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].value->data();
    auto grad = params[i].grad->data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j] + config_.weight_decay * theta[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      theta[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

double cosine_lr(std::size_t epoch, const CosineSchedule& s) {
  if (s.total_epochs == 0) throw std::invalid_argument("cosine schedule needs total_epochs > 0");
  if (epoch > s.total_epochs) throw std::out_of_range("epoch beyond the cosine schedule");
  const double t = static_cast<double>(epoch) / static_cast<double>(s.total_epochs);
  return s.min_lr + 0.5 * (s.base_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * t));
}

bool EarlyStopping::update(double validation_loss) {
  const std::size_t epoch = epochs_++;
  if (validation_loss < best_) {
    best_ = validation_loss;
    best_epoch_ = epoch;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

}  // namespace wconv
