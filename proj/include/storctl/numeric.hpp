#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace storctl::numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_pdf(double z) noexcept {
  if (std::isinf(z))
    return 0.0;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Pairwise summation; the result depends only on the order of `xs`.
inline double pairwise_sum(std::span<const double> xs) noexcept {
  constexpr std::size_t kLeaf = 16;
  if (xs.size() <= kLeaf) {
    double s = 0.0;
    for (double x : xs)
      s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty())
    throw std::invalid_argument("mean of an empty range");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Population variance (divides by n).
inline double population_variance(std::span<const double> xs) {
  const double m = mean(xs);
  std::vector<double> sq(xs.size());
  std::transform(xs.begin(), xs.end(), sq.begin(), [m](double x) { return (x - m) * (x - m); });
  return pairwise_sum(sq) / static_cast<double>(xs.size());
}

/// Sample standard error of the mean (n-1 denominator).
inline double standard_error(std::span<const double> xs) {
  if (xs.size() < 2)
    return 0.0;
  const double n = static_cast<double>(xs.size());
  return std::sqrt(population_variance(xs) * n / (n - 1.0) / n);
}

/// Linear-interpolation quantile (the "type 7" rule) of an unsorted range.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty())
    throw std::invalid_argument("quantile of an empty range");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

/// SplitMix64 finaliser; used to derive independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

} // namespace storctl::numeric
