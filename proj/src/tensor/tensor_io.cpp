#include "wconv/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <type_traits>

namespace wconv {

namespace {

constexpr std::array<char, 8> kMagic{'W', 'C', 'T', 'E', 'N', 'S', 'O', 'R'};
constexpr std::uint32_t kMaxRank = 16;

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw FormatError(std::string("tensor file truncated while reading ") + what);
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape()) put_le<std::uint64_t>(out, e);
  for (double v : t.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("failed to write tensor");
}

Tensor read_tensor(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a tensor file: missing WCTENSOR magic");
  }
  const auto rank = get_le<std::uint32_t>(in, "rank");
  if (rank == 0 || rank > kMaxRank) {
    throw FormatError("tensor file has unsupported rank " + std::to_string(rank));
  }
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& e : shape) {
    const auto extent = get_le<std::uint64_t>(in, "extents");
    if (extent == 0 || extent > (std::uint64_t{1} << 40) || count > (std::uint64_t{1} << 40) / extent) {
      throw FormatError("tensor file has invalid extent");
    }
    count *= extent;
    e = static_cast<std::size_t>(extent);
  }
  std::vector<double> data(count);
  for (auto& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(in, "payload"));
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace wconv
