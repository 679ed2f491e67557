#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pdasgd {

/// SplitMix64 (Steele, Lea & Flood 2014). Counter-based: the state advances
/// by the golden-ratio increment and each output is a fixed bijective mix of
/// the counter, so a stream is fully described by its 64-bit state.
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() takes the top 53 bits; index(n) is floor(uniform() * n).
/// split() seeds a child stream from the next output.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1}.
  std::size_t index(std::size_t n) {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
  }

  SplitMix64 split() { return SplitMix64(next()); }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Inverse-CDF sampler over a fixed discrete distribution: cumulative
/// weights plus binary search.
class CategoricalSampler {
 public:
  CategoricalSampler() = default;

  template <typename Range>
  explicit CategoricalSampler(const Range& weights) {
    double total = 0.0;
    cumulative_.reserve(static_cast<std::size_t>(weights.size()));
    for (auto w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("categorical sampler: negative weight");
      total += static_cast<double>(w);
      cumulative_.push_back(total);
    }
    if (!(total > 0.0)) throw std::invalid_argument("categorical sampler: zero total weight");
  }

  std::size_t size() const { return cumulative_.size(); }

  std::size_t draw(SplitMix64& rng) const {
    const double target = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it != cumulative_.end()) return static_cast<std::size_t>(it - cumulative_.begin());
    // target hit the total through rounding; return the last positive category.
    std::size_t k = cumulative_.size() - 1;
    while (k > 0 && cumulative_[k] == cumulative_[k - 1]) --k;
    return k;
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace pdasgd
