#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <fmt/format.h>

#include "wconv/data.hpp"
#include "wconv/tensor_io.hpp"

namespace wconv {

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::vector<char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  // Netpbm header tokens are separated by whitespace; '#' starts a comment
  // that runs to the end of the line.
  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
           bytes_[pos_] != '#') {
      t.push_back(bytes_[pos_++]);
    }
    if (t.empty()) fail("truncated header");
    return t;
  }

  std::size_t number(const char* what) {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        t.size() > 9) {
      fail(fmt::format("invalid {} '{}'", what, t));
    }
    return std::stoul(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail("missing whitespace before raster");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(path_.string() + ": " + msg);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  HeaderReader hdr(bytes, path);
  const std::string magic = hdr.token();
  std::size_t channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    hdr.fail("unsupported magic '" + magic + "', expected P5 or P6");
  }
  const std::size_t w = hdr.number("width");
  const std::size_t h = hdr.number("height");
  const std::size_t maxval = hdr.number("maxval");
  if (w == 0 || h == 0) hdr.fail("zero image extent");
  if (maxval != 255) hdr.fail(fmt::format("maxval {} is not supported, only 255", maxval));
  const std::size_t start = hdr.raster_start();
  const std::size_t need = w * h * channels;
  if (bytes.size() - start < need) {
    hdr.fail(fmt::format("raster has {} bytes, expected {}", bytes.size() - start, need));
  }

  Tensor img({channels, h, w});
  auto dst = img.data();
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      dst[c * plane + i] = static_cast<unsigned char>(bytes[start + i * channels + c]) / 255.0;
    }
  }
  return img;
}

void save_ppm(const std::filesystem::path& path, const Tensor& image) {
  const auto& s = image.shape();
  std::size_t channels = 0, h = 0, w = 0;
  if (s.size() == 2) {
    channels = 1, h = s[0], w = s[1];
  } else if (s.size() == 3 && (s[0] == 1 || s[0] == 3)) {
    channels = s[0], h = s[1], w = s[2];
  } else {
    throw ShapeError("save_ppm expects [H,W], [1,H,W] or [3,H,W], got " + to_string(s));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (channels == 3 ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
  const std::size_t plane = h * w;
  auto src = image.data();
  std::vector<char> raster(plane * channels);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = std::clamp(src[c * plane + i], 0.0, 1.0);
      raster[i * channels + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace wconv
