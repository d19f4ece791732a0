#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "wconv/tensor.hpp"

namespace wconv {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw tensor file:
//   8 bytes   magic "WCTENSOR"
//   u32       rank (little-endian)
//   rank x u64 extents (little-endian)
//   f64       payload, row-major, little-endian IEEE-754
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace wconv
