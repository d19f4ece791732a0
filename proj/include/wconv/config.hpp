#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wconv/density.hpp"
#include "wconv/model.hpp"
#include "wconv/nn.hpp"

namespace wconv {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelSpec {
  std::string recipe;  // "mini_vgg" or "mini_dncnn"
  ConvVariant variant = ConvVariant::standard;
  std::size_t kernel = 3;
  std::size_t depth = 6;   // mini_dncnn
  std::size_t width = 16;  // mini_dncnn
  std::vector<std::size_t> widths{16, 32, 64};  // mini_vgg
};

struct DensitySpec {
  std::size_t k = 3;
  double central = 1.0;
  std::vector<double> coeffs;

  DensityFunction build() const { return build_density(k, central, coeffs); }
};

/// One axis per free coefficient, outermost coefficient first. Every axis
/// contains 1.0.
struct SweepSpec {
  std::size_t k = 3;
  double central = 1.0;
  std::vector<std::vector<double>> axes;
  bool include_standard = false;

  /// Cartesian product of the axes, first axis varying slowest.
  std::vector<std::vector<double>> points() const;
};

struct OptimizerSpec {
  std::string kind = "sgd";  // "sgd" or "adam"
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ScheduleSpec {
  std::size_t epochs = 30;
  bool cosine = true;
  double min_lr = 0.0;
  std::size_t patience = 10;
  std::size_t batch_size = 64;
};

struct LossSpec {
  std::string kind = "cross_entropy";  // "cross_entropy" or "mse"
  double label_smoothing = 0.1;
};

struct DataSpec {
  std::string source = "synthetic";  // "synthetic", "cifar100" or "ppm"
  std::filesystem::path train_file;  // cifar100
  std::filesystem::path test_file;   // cifar100
  std::filesystem::path image_dir;   // ppm
  std::vector<int> class_ids;        // cifar100 subset; empty means 0..classes-1
  std::size_t classes = 10;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 100;
  double val_fraction = 0.1;
  bool hflip = true;
  std::size_t images = 24;           // synthetic scenes
  std::size_t image_size = 96;       // synthetic scenes
  std::size_t patch_size = 32;
  std::size_t patches_per_image = 16;
  std::vector<double> split{0.8, 0.1, 0.1};
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

struct NoiseSpec {
  double mu = 0.0;
  double sigma = 0.01;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

struct ExperimentConfig {
  TaskKind task = TaskKind::classification;
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  ModelSpec model;
  std::optional<DensitySpec> density;
  std::optional<SweepSpec> sweep;
  OptimizerSpec optimizer;
  ScheduleSpec schedule;
  LossSpec loss;
  DataSpec data;
  NoiseSpec noise;

  /// Density for a single (non-sweep) run: the configured one for weighted
  /// models, nothing for standard ones.
  std::optional<DensityFunction> fixed_density() const;
};

/// Parses `key = value` text with [sections]. Relative data paths are
/// resolved against `base_dir`. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError on any inconsistency; called by the parsers.
void validate_config(const ExperimentConfig& cfg);

/// "0.5:1.5:0.25" (inclusive lattice) or "0.5, 0.75, 1". A lattice that
/// brackets 1 but misses it gets 1 inserted. Values are sorted and unique.
std::vector<double> parse_grid(const std::string& text);

}  // namespace wconv
