#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "wconv/rng.hpp"
#include "wconv/tensor.hpp"

namespace wconv {

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecord = 2 + kCifarPixels;
inline constexpr int kCifarFineClasses = 100;
inline constexpr int kCifarCoarseClasses = 20;

/// Images [N, 3, 32, 32] in [0, 1] with fine and coarse labels.
struct LabeledImageSet {
  Tensor images;
  std::vector<int> fine_labels;
  std::vector<int> coarse_labels;

  std::size_t size() const { return fine_labels.size(); }
  /// Throws std::invalid_argument when labels or shapes are inconsistent.
  void validate() const;
};

/// Parses the CIFAR-100 binary format: per record one coarse label byte,
/// one fine label byte and 3072 channel-planar RGB bytes.
LabeledImageSet load_cifar100(const std::filesystem::path& path);
LabeledImageSet parse_cifar100(std::span<const std::uint8_t> bytes);

/// Writes the same layout; pixel values are rounded to the nearest byte.
void save_cifar100(const std::filesystem::path& path, const LabeledImageSet& set);
std::vector<std::uint8_t> encode_cifar100(const LabeledImageSet& set);

/// Items whose fine label is listed, relabelled to their position in `classes`.
LabeledImageSet select_classes(const LabeledImageSet& set, std::span<const int> classes);

/// Items at the given positions, in that order.
LabeledImageSet subset(const LabeledImageSet& set, std::span<const std::size_t> indices);

struct NoiseConfig {
  double mu = 0.0;
  double sigma = 0.01;
  std::uint64_t seed = 0;
};

/// x + n with n ~ N(mu, sigma^2), no clipping. Item i of the leading axis draws
/// from Rng(seed).split(i), so noise depends only on the seed and the item
/// position.
Tensor add_gaussian_noise(const Tensor& images, const NoiseConfig& cfg);

/// Mirrors each [C, H, W] image of a [N, C, H, W] batch along the width with
/// probability p; one uniform draw per image.
Tensor random_hflip(const Tensor& batch, double p, Rng& rng);

/// Mirrors a single image ([H, W] or [C, H, W]) along the width.
Tensor hflip(const Tensor& image);

/// Binary P5 (returns [1, H, W]) or P6 (returns [3, H, W]) with maxval 255.
Tensor load_ppm(const std::filesystem::path& path);
/// Writes P5 for [H, W] or [1, H, W], P6 for [3, H, W]. Values are clamped to
/// [0, 1] and rounded to 8 bits.
void save_ppm(const std::filesystem::path& path, const Tensor& image);

/// Row-major tiling of a [C, H, W] image into [P, C, size, size].
Tensor extract_patches(const Tensor& image, std::size_t size, std::size_t stride);
/// `count` patches at uniformly random positions.
Tensor extract_random_patches(const Tensor& image, std::size_t size, std::size_t count, Rng& rng);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) cut into consecutive train/val/test blocks.
/// Fractions must be non-negative and sum to 1 (within 1e-9); sizes are
/// floor(n f) for train and val, the remainder goes to test.
SplitIndices split(std::size_t n, const std::array<double, 3>& fractions, std::uint64_t seed);

// Procedural stand-ins for the real corpora.

/// `per_class` images for each of `classes` (2..100) classes of oriented,
/// tinted sinusoidal gratings with additive noise. Class c uses orientation
/// c * pi / classes with a small jitter; frequency, phase, tint and noise vary
/// per image. Items are interleaved by class. Coarse label is fine / 5.
LabeledImageSet make_synthetic_classification(std::size_t per_class, std::size_t classes,
                                              std::uint64_t seed);

/// A [3, h, w] piecewise-smooth scene in [0, 1]: a colour gradient with soft
/// edged ellipses and a faint low-frequency texture.
Tensor make_synthetic_scene(std::size_t h, std::size_t w, Rng& rng);

}  // namespace wconv
