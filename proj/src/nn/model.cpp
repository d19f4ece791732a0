#include "wconv/model.hpp"

#include <stdexcept>

namespace wconv {

std::string to_string(TaskKind t) {
  return t == TaskKind::classification ? "classification" : "denoising";
}

TaskKind parse_task_kind(const std::string& s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "denoising") return TaskKind::denoising;
  throw std::invalid_argument("unknown task '" + s + "'");
}

Model::Model(const Model& other) : task_(other.task_), residual_(other.residual_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Layer& Model::add(std::unique_ptr<Layer> layer) {
  if (!layer) throw std::invalid_argument("null layer");
  layers_.push_back(std::move(layer));
  return *layers_.back();
}

Tensor Model::forward(const Tensor& batch, Mode mode) {
  Tensor x = batch;
  for (auto& l : layers_) x = l->forward(x, mode);
  has_forward_ = true;
  if (residual_) {
    require_same_shape(batch, x, "residual model output");
    return subtract(batch, x);
  }
  return x;
}

Tensor Model::backward(const Tensor& upstream) {
  if (!has_forward_) throw std::logic_error("model backward called before forward");
  Tensor g = residual_ ? scale(upstream, -1.0) : upstream;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  if (residual_) g = wconv::add(upstream, g);
  return g;
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto p : layers_[i]->parameters()) {
      p.name = std::to_string(i) + "." + p.name;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<BufferRef> Model::buffers() {
  std::vector<BufferRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto b : layers_[i]->buffers()) {
      b.name = std::to_string(i) + "." + b.name;
      out.push_back(b);
    }
  }
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->parameter_count();
  return n;
}

}  // namespace wconv
