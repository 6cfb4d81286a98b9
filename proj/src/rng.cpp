#include "mixq/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mixq
{

double Rng::normal()
{
  if (_has_spare)
  {
    _has_spare = false;
    return _spare;
  }
  double u1 = uniform();
  while (u1 <= 0.0)
    u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  _spare = r * std::sin(theta);
  _has_spare = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n)
{
  if (n == 0)
    throw std::invalid_argument("Rng::below: n must be positive");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do
    v = _engine();
  while (v >= limit);
  return v % n;
}

std::vector<Tensor> generate_synthetic(std::uint64_t seed, std::size_t count,
                                       const std::vector<std::size_t> &shape)
{
  if (count == 0)
    throw std::invalid_argument("generate_synthetic: count must be >= 1");
  Rng rng(seed);
  std::vector<Tensor> batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
  {
    Tensor t(shape);
    for (auto &v : t.values())
      v = static_cast<double>(static_cast<float>(rng.normal()));
    batch.push_back(std::move(t));
  }
  return batch;
}

} // namespace mixq
