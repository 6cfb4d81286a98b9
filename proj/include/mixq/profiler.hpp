#pragma once

#include "mixq/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mixq
{

/// Bit-width assumed for layers kept in floating point.
inline constexpr std::int64_t kUnquantizedBits = 32;

struct LayerStats
{
  std::vector<int> layer_ids;          ///< quantizable layers, network order
  std::vector<std::int64_t> w_count;   ///< parameters (weights + bias)
  std::vector<std::int64_t> macs;      ///< MACs for one forward pass
  std::int64_t fixed_params = 0;       ///< parameters of unquantized layers (incl. LayerNorm)
  std::int64_t fixed_macs = 0;         ///< MACs of unquantized layers

  std::size_t size() const { return layer_ids.size(); }
};

/// Parameter count of every layer in `spec.layers` (0 for weightless layers).
std::vector<std::int64_t> count_params(const NetworkSpec &spec);

/// MAC count of every layer for `tokens` input tokens. The head sees one pooled token.
std::vector<std::int64_t> count_macs(const NetworkSpec &spec, std::size_t tokens);

LayerStats layer_stats(const NetworkSpec &spec);

/// Sum of w_count * bits over the quantizable layers.
std::int64_t model_size_bits(const LayerStats &stats, std::span<const int> bits);

/// Unquantized layers stored at 32 bits.
std::int64_t unquantized_overhead_bits(const LayerStats &stats);

/// Sum of macs * bits^2.
std::int64_t bitops(const LayerStats &stats, std::span<const int> bits);

} // namespace mixq
