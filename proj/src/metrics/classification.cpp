#include <numeric>
#include <stdexcept>
#include <string>

#include "wconv/metrics.hpp"

namespace wconv {

ConfusionMatrix::ConfusionMatrix(std::size_t n) : n_(n), counts_(n * n, 0) {
  if (n == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t n, std::vector<std::uint64_t> counts)
    : n_(n), counts_(std::move(counts)) {
  if (n == 0) throw std::invalid_argument("confusion matrix needs at least one class");
  if (counts_.size() != n * n) throw std::invalid_argument("confusion matrix needs n*n counts");
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::size_t n, std::span<const int> truth,
                                                  std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("truth and prediction lengths differ");
  ConfusionMatrix cm(n);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t count) {
  const auto n = static_cast<int>(n_);
  if (truth < 0 || truth >= n || predicted < 0 || predicted >= n) {
    throw std::out_of_range("class id outside [0, " + std::to_string(n_) + ")");
  }
  counts_[static_cast<std::size_t>(truth) * n_ + static_cast<std::size_t>(predicted)] += count;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < n_; ++i) t += counts_[i * n_ + i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += counts_[truth * n_ + j];
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += counts_[i * n_ + predicted];
  return s;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw std::invalid_argument("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
  std::vector<double> f1(cm.classes(), 0.0);
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double tp = static_cast<double>(cm(c, c));
    const double fp = static_cast<double>(cm.column_sum(c)) - tp;
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    const double denom = tp + 0.5 * (fp + fn);
    f1[c] = denom > 0.0 ? tp / denom : 0.0;
  }
  return f1;
}

double f1_score(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("F1 of an empty confusion matrix");
  const auto f1 = per_class_f1(cm);
  double s = 0.0;
  for (double v : f1) s += v;
  return s / static_cast<double>(f1.size());
}

}  // namespace wconv
