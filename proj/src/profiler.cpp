#include "mixq/profiler.hpp"

#include <stdexcept>

namespace mixq
{

std::vector<std::int64_t> count_params(const NetworkSpec &spec)
{
  std::vector<std::int64_t> out;
  out.reserve(spec.layers.size());
  for (const auto &l : spec.layers)
  {
    const auto in = static_cast<std::int64_t>(l.d_in), o = static_cast<std::int64_t>(l.d_out);
    switch (l.kind)
    {
      case LayerKind::PatchEmbed:
      case LayerKind::QKV:
      case LayerKind::Proj:
      case LayerKind::FC1:
      case LayerKind::FC2:
      case LayerKind::Head:
        out.push_back(in * o + o);
        break;
      case LayerKind::LayerNorm:
        out.push_back(2 * o);
        break;
      default:
        out.push_back(0);
    }
  }
  return out;
}

std::vector<std::int64_t> count_macs(const NetworkSpec &spec, std::size_t tokens)
{
  const auto N = static_cast<std::int64_t>(tokens);
  const auto h = static_cast<std::int64_t>(spec.heads);
  const auto dh = static_cast<std::int64_t>(spec.head_dim());
  std::vector<std::int64_t> out;
  out.reserve(spec.layers.size());
  for (const auto &l : spec.layers)
  {
    const auto in = static_cast<std::int64_t>(l.d_in), o = static_cast<std::int64_t>(l.d_out);
    switch (l.kind)
    {
      case LayerKind::PatchEmbed:
      case LayerKind::QKV:
      case LayerKind::Proj:
      case LayerKind::FC1:
      case LayerKind::FC2:
        out.push_back(N * in * o);
        break;
      case LayerKind::Head:
        out.push_back(in * o);
        break;
      case LayerKind::MatMul1:
      case LayerKind::MatMul2:
        out.push_back(h * N * N * dh);
        break;
      default:
        out.push_back(0);
    }
  }
  return out;
}

LayerStats layer_stats(const NetworkSpec &spec)
{
  spec.validate();
  const auto params = count_params(spec);
  const auto macs = count_macs(spec, spec.tokens);
  LayerStats stats;
  for (const auto &l : spec.layers)
  {
    const auto i = static_cast<std::size_t>(l.id);
    if (l.quantizable)
    {
      stats.layer_ids.push_back(l.id);
      stats.w_count.push_back(params[i]);
      stats.macs.push_back(macs[i]);
    }
    else
    {
      stats.fixed_params += params[i];
      stats.fixed_macs += macs[i];
    }
  }
  return stats;
}

std::int64_t model_size_bits(const LayerStats &stats, std::span<const int> bits)
{
  if (bits.size() != stats.size())
    throw std::invalid_argument("model_size_bits: bits vector length mismatch");
  std::int64_t total = 0;
  for (std::size_t l = 0; l < bits.size(); ++l)
    total += stats.w_count[l] * bits[l];
  return total;
}

std::int64_t unquantized_overhead_bits(const LayerStats &stats)
{
  return stats.fixed_params * kUnquantizedBits;
}

std::int64_t bitops(const LayerStats &stats, std::span<const int> bits)
{
  if (bits.size() != stats.size())
    throw std::invalid_argument("bitops: bits vector length mismatch");
  std::int64_t total = 0;
  for (std::size_t l = 0; l < bits.size(); ++l)
    total += stats.macs[l] * bits[l] * bits[l];
  return total;
}

} // namespace mixq
