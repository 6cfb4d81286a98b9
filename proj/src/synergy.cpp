#include "mixq/synergy.hpp"

#include <cmath>
#include <stdexcept>

namespace mixq
{

double pair_synergy_per_image(double score_l, double score_m, double epsilon)
{
  if (!(epsilon > 0.0))
    throw std::invalid_argument("pair_synergy_per_image: epsilon must be positive");
  if (!(score_l >= 0.0) || !(score_m >= 0.0))
    throw std::invalid_argument("pair_synergy_per_image: scores must be non-negative");
  return 1.0 / (std::abs(score_l - score_m) + epsilon);
}

SynergyProfile synergy_profile(const std::vector<std::vector<double>> &raw_cmi, double epsilon)
{
  if (raw_cmi.empty())
    throw std::invalid_argument("synergy_profile: need at least one image");
  const std::size_t L = raw_cmi.front().size();
  for (const auto &row : raw_cmi)
    if (row.size() != L)
      throw std::invalid_argument("synergy_profile: ragged score matrix");

  SynergyProfile profile;
  profile.epsilon = epsilon;
  profile.images = raw_cmi.size();
  for (std::size_t l = 0; l + 1 < L; ++l)
  {
    double sum = 0.0;
    for (const auto &row : raw_cmi)
      sum += pair_synergy_per_image(row[l], row[l + 1], epsilon);
    const double mean = sum / static_cast<double>(raw_cmi.size());
    profile.pairs.emplace_back(l, l + 1);
    profile.s_hat.push_back(std::log1p(mean));
  }
  return profile;
}

} // namespace mixq
