#pragma once

#include "critwalk/rng.hpp"

namespace critwalk {

template <class Statistic>
Interval bootstrap_ci(std::span<const double> data, Statistic&& stat, std::uint64_t seed,
                      std::size_t resamples, double level) {
  const double point = stat(data);
  if (data.size() < 2) return {point, point};
  std::vector<double> draws;
  draws.reserve(resamples);
  std::vector<double> sample(data.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    CounterRng rng(derive_seed(seed, b));
    for (auto& s : sample) s = data[rng.below(data.size())];
    draws.push_back(stat(std::span<const double>(sample)));
  }
  const double alpha = (1.0 - level) / 2.0;
  return {quantile(draws, alpha), quantile(draws, 1.0 - alpha)};
}

}  // namespace critwalk
