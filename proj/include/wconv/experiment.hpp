#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wconv/config.hpp"
#include "wconv/data.hpp"
#include "wconv/metrics.hpp"
#include "wconv/model.hpp"
#include "wconv/report.hpp"

namespace wconv {

/// Training aborted by a non-finite loss or missing data.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs and targets for the three splits. Classification keeps labels;
/// denoising keeps clean targets with inputs already corrupted.
struct Dataset {
  TaskKind task = TaskKind::classification;
  std::size_t classes = 0;
  std::size_t channels = 3;
  Tensor train_x, val_x, test_x;
  Tensor train_y, val_y, test_y;
  std::vector<int> train_labels, val_labels, test_labels;
};

/// Builds the dataset described by cfg.data and cfg.noise. Deterministic in
/// the configured seeds; throws TrainingError when files are missing.
Dataset prepare_dataset(const ExperimentConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainingResult {
  Model model;
  std::vector<EpochRecord> history;
  ReportRow row;
  std::optional<ConfusionMatrix> confusion;
  /// Denoising only: metrics of the untouched noisy test inputs.
  std::optional<ImageMetrics> noisy_metrics;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trains one model: cosine learning rate, early stopping on validation loss
/// with best-weight restore, test metrics on the restored model.
TrainingResult run_training(const ExperimentConfig& cfg, const Dataset& data,
                            const std::optional<DensityFunction>& density,
                            const ProgressFn& progress = {});
TrainingResult run_training(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Builds the untrained model; initialization depends only on cfg.seed.
Model build_model(const ExperimentConfig& cfg, std::size_t classes, std::size_t channels,
                  const std::optional<DensityFunction>& density);

/// Mean loss of `model` over a split in eval mode.
double evaluate_loss(Model& model, const ExperimentConfig& cfg, const Tensor& x, const Tensor& y,
                     std::span<const int> labels);

/// Trains every grid point from the same seed and data. The row with the
/// lowest validation loss is marked selected (earliest wins ties).
MetricReport sweep_alpha(const ExperimentConfig& cfg, const ProgressFn& progress = {});

void write_history(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast invariant checks over every module.
std::vector<SelftestCase> run_selftest(std::uint64_t seed = 0);

}  // namespace wconv
