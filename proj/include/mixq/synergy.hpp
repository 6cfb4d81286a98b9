#pragma once

#include <utility>
#include <vector>

namespace mixq
{

inline constexpr double kDefaultSynergyEpsilon = 1e-6;

/// Stabilized synergy for each pair of consecutive quantizable layers.
struct SynergyProfile
{
  /// (l, l+1) positions in the quantizable-layer ordering.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> s_hat;
  double epsilon = kDefaultSynergyEpsilon;
  std::size_t images = 0;
};

/// 1 / (|I_l - I_m| + epsilon).
double pair_synergy_per_image(double score_l, double score_m, double epsilon);

/**
 * Averages the per-image synergy over rows of `raw_cmi` (T x L, unnormalized)
 * and applies log(1 + mean).
 */
SynergyProfile synergy_profile(const std::vector<std::vector<double>> &raw_cmi,
                               double epsilon = kDefaultSynergyEpsilon);

} // namespace mixq
