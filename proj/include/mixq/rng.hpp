#pragma once

#include "mixq/tensor.hpp"

#include <cstdint>
#include <random>

namespace mixq
{

/**
 * Platform-independent generator: std::mt19937_64 (bit-exact by the standard)
 * for the raw stream, uniforms from the top 53 bits, normals by Box-Muller.
 * Streams are identical across standard library implementations.
 */
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : _engine(seed) {}

  std::uint64_t next() { return _engine(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(_engine() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

private:
  std::mt19937_64 _engine;
  bool _has_spare = false;
  double _spare = 0.0;
};

/// `count` standard-normal tensors of `shape`; same seed gives identical batches.
std::vector<Tensor> generate_synthetic(std::uint64_t seed, std::size_t count,
                                       const std::vector<std::size_t> &shape);

} // namespace mixq
