#pragma once

#include <vector>

#include "repseg/skeleton.hpp"

namespace repseg::testing {

// Mask formulation: keep frames of long-enough 0-runs, fill short 1-gaps that sit
// between kept frames, and read off maximal kept runs.
inline Segments binary_oracle(const std::vector<int>& bits, int min_segment, int min_gap) {
  const int T = static_cast<int>(bits.size());
  std::vector<int> keep(static_cast<std::size_t>(T), 0);
  for (int t = 0; t < T; ++t) {
    if (bits[static_cast<std::size_t>(t)]) continue;
    int a = t, b = t;
    while (a > 0 && !bits[static_cast<std::size_t>(a - 1)]) --a;
    while (b + 1 < T && !bits[static_cast<std::size_t>(b + 1)]) ++b;
    keep[static_cast<std::size_t>(t)] = (b - a + 1) >= min_segment;
  }
  std::vector<int> filled = keep;
  for (int t = 0; t < T; ++t) {
    if (keep[static_cast<std::size_t>(t)]) continue;
    int a = t, b = t;
    while (a > 0 && !keep[static_cast<std::size_t>(a - 1)]) --a;
    while (b + 1 < T && !keep[static_cast<std::size_t>(b + 1)]) ++b;
    const bool interior = a > 0 && b + 1 < T;
    if (interior && (b - a + 1) < min_gap) filled[static_cast<std::size_t>(t)] = 1;
  }
  Segments out;
  for (int t = 0; t < T; ++t) {
    if (!filled[static_cast<std::size_t>(t)]) continue;
    if (!out.empty() && out.back().end == t)
      ++out.back().end;
    else
      out.push_back({t, t + 1});
  }
  return out;
}

}  // namespace repseg::testing
