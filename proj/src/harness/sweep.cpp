#include <fmt/format.h>

#include "wconv/experiment.hpp"

namespace wconv {

MetricReport sweep_alpha(const ExperimentConfig& cfg, const ProgressFn& progress) {
  if (!cfg.sweep) throw ConfigError("sweep_alpha needs a [sweep] section");
  const SweepSpec& spec = *cfg.sweep;
  const auto points = spec.points();
  if (points.empty()) throw ConfigError("empty sweep grid");

  const Dataset data = prepare_dataset(cfg);
  MetricReport report;

  if (spec.include_standard) {
    ExperimentConfig standard = cfg;
    standard.model.variant = ConvVariant::standard;
    standard.sweep.reset();
    if (progress) progress("standard convolution baseline");
    report.push_back(run_training(standard, data, std::nullopt, progress).row);
  }

  const std::size_t first = report.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const DensityFunction density = build_density(spec.k, spec.central, points[i]);
    if (progress) progress(fmt::format("grid point {}/{}: alpha = {}", i + 1, points.size(), format_alpha(points[i])));
    report.push_back(run_training(cfg, data, density, progress).row);
  }
  std::size_t best = first;
  for (std::size_t j = first + 1; j < report.size(); ++j) {
    if (report[j].val_loss < report[best].val_loss) best = j;
  }
  report[best].selected = true;
  return report;
}

}  // namespace wconv
