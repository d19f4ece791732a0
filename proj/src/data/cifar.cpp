#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <fmt/format.h>

#include "wconv/data.hpp"
#include "wconv/tensor_io.hpp"

namespace wconv {

void LabeledImageSet::validate() const {
  const std::size_t n = fine_labels.size();
  if (n == 0) throw std::invalid_argument("labeled image set is empty");
  if (coarse_labels.size() != n) throw std::invalid_argument("fine and coarse label counts differ");
  const Shape expected{n, 3, kCifarSide, kCifarSide};
  if (images.shape() != expected) {
    throw ShapeError("labeled images must be " + to_string(expected) + ", got " + to_string(images.shape()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (fine_labels[i] < 0 || fine_labels[i] >= kCifarFineClasses) {
      throw std::invalid_argument(fmt::format("fine label {} of item {} outside [0, 100)", fine_labels[i], i));
    }
    if (coarse_labels[i] < 0 || coarse_labels[i] >= kCifarCoarseClasses) {
      throw std::invalid_argument(fmt::format("coarse label {} of item {} outside [0, 20)", coarse_labels[i], i));
    }
  }
}

LabeledImageSet parse_cifar100(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw FormatError("CIFAR-100 file is empty");
  if (bytes.size() % kCifarRecord != 0) {
    throw FormatError(fmt::format(
        "CIFAR-100 file has {} bytes, not a multiple of the {}-byte record "
        "(1 coarse label byte, 1 fine label byte, 3072 pixel bytes as R, G, B planes of 32x32)",
        bytes.size(), kCifarRecord));
  }
  const std::size_t n = bytes.size() / kCifarRecord;
  LabeledImageSet set;
  set.images = Tensor({n, 3, kCifarSide, kCifarSide});
  set.fine_labels.resize(n);
  set.coarse_labels.resize(n);
  auto px = set.images.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecord;
    if (rec[0] >= kCifarCoarseClasses) {
      throw FormatError(fmt::format("record {}: coarse label {} outside [0, 20)", i, rec[0]));
    }
    if (rec[1] >= kCifarFineClasses) {
      throw FormatError(fmt::format("record {}: fine label {} outside [0, 100)", i, rec[1]));
    }
    set.coarse_labels[i] = rec[0];
    set.fine_labels[i] = rec[1];
    for (std::size_t j = 0; j < kCifarPixels; ++j) px[i * kCifarPixels + j] = rec[2 + j] / 255.0;
  }
  return set;
}

LabeledImageSet load_cifar100(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_cifar100(bytes);
}

std::vector<std::uint8_t> encode_cifar100(const LabeledImageSet& set) {
  set.validate();
  const std::size_t n = set.size();
  std::vector<std::uint8_t> out(n * kCifarRecord);
  auto px = set.images.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t* rec = out.data() + i * kCifarRecord;
    rec[0] = static_cast<std::uint8_t>(set.coarse_labels[i]);
    rec[1] = static_cast<std::uint8_t>(set.fine_labels[i]);
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      const double v = std::clamp(px[i * kCifarPixels + j], 0.0, 1.0);
      rec[2 + j] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return out;
}

void save_cifar100(const std::filesystem::path& path, const LabeledImageSet& set) {
  const auto bytes = encode_cifar100(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

LabeledImageSet subset(const LabeledImageSet& set, std::span<const std::size_t> indices) {
  LabeledImageSet out;
  out.images = gather(set.images, indices);
  for (std::size_t i : indices) {
    out.fine_labels.push_back(set.fine_labels.at(i));
    out.coarse_labels.push_back(set.coarse_labels.at(i));
  }
  return out;
}

LabeledImageSet select_classes(const LabeledImageSet& set, std::span<const int> classes) {
  if (classes.empty()) throw std::invalid_argument("class selection is empty");
  std::vector<std::size_t> keep;
  std::vector<int> relabel;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto it = std::find(classes.begin(), classes.end(), set.fine_labels[i]);
    if (it != classes.end()) {
      keep.push_back(i);
      relabel.push_back(static_cast<int>(it - classes.begin()));
    }
  }
  if (keep.empty()) throw std::invalid_argument("no items belong to the selected classes");
  LabeledImageSet out = subset(set, keep);
  out.fine_labels = std::move(relabel);
  return out;
}

}  // namespace wconv
