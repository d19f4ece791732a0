#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <vector>

#include "wconv/conv.hpp"
#include "wconv/rng.hpp"

namespace wconv {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
double time_once(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

OverheadTiming overhead_benchmark(std::size_t n, std::size_t c, std::size_t f, std::size_t k,
                                  std::size_t reps, std::uint64_t seed) {
  if (reps < 10) throw std::invalid_argument("overhead_benchmark needs at least 10 repetitions");
  Rng rng(seed);
  const Tensor input = fill_uniform({c, n, n}, 0.0, 1.0, rng);
  const KernelTensor kernels(fill_normal({f, c, k, k}, 0.0, 0.1, rng), fill_normal({f}, 0.0, 0.1, rng));
  std::vector<double> coeffs((k - 1) / 2, 0.8);
  const DensityFunction density = build_density(k, 1.0, coeffs);
  const ConvGeometry geom = ConvGeometry::same(k);

  double sink = 0.0;
  auto standard = [&] { sink += conv2d_forward(input, kernels, geom)[0]; };
  auto weighted = [&] { sink += wconv2d_forward(input, kernels, density, geom)[0]; };

  standard();
  weighted();

  std::vector<double> ts, tw, pairs;
  ts.reserve(reps);
  tw.reserve(reps);
  pairs.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    // Alternate which variant goes first so drift affects both equally.
    if (r % 2 == 0) {
      ts.push_back(time_once(standard));
      tw.push_back(time_once(weighted));
    } else {
      tw.push_back(time_once(weighted));
      ts.push_back(time_once(standard));
    }
    pairs.push_back(tw.back() / ts.back());
  }

  // The density step is microseconds long, so batch it to stay well above
  // the clock resolution.
  constexpr std::size_t kDensityBatch = 64;
  std::vector<double> td;
  td.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    td.push_back(time_once([&] {
                   for (std::size_t i = 0; i < kDensityBatch; ++i) sink += apply_density(kernels, density).weights[0];
                 }) /
                 static_cast<double>(kDensityBatch));
  }
  volatile double keep = sink;
  (void)keep;
  return {median(ts), median(tw), median(td), median(pairs)};
}

}  // namespace wconv
