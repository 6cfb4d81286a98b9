#include "mixq/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mixq
{

namespace
{

void check_bits(int bits)
{
  if (bits < 2 || bits > 16)
    throw std::invalid_argument("bit-width must be in [2, 16], got " + std::to_string(bits));
}

// Maps a flat element index to its channel for PerChannel params.
struct ChannelLayout
{
  std::size_t inner = 1;
  std::size_t channels = 1;

  ChannelLayout(const std::vector<std::size_t> &shape, const AffineParams &p)
  {
    if (p.granularity == Granularity::PerTensor)
      return;
    if (p.axis >= shape.size())
      throw std::invalid_argument("per-channel axis out of range for shape " + shape_string(shape));
    channels = shape[p.axis];
    if (channels != p.channels())
      throw std::invalid_argument("per-channel params have " + std::to_string(p.channels()) +
                                  " channels, tensor has " + std::to_string(channels));
    for (std::size_t d = p.axis + 1; d < shape.size(); ++d)
      inner *= shape[d];
  }

  std::size_t channel(std::size_t flat) const { return channels == 1 ? 0 : (flat / inner) % channels; }
};

std::int64_t uniform_code(double x, double scale, std::int64_t zp, std::int64_t qmax)
{
  const double q = round_half_away(x / scale) + static_cast<double>(zp);
  return static_cast<std::int64_t>(std::clamp(q, 0.0, static_cast<double>(qmax)));
}

} // namespace

void AffineParams::validate() const
{
  check_bits(bits);
  if (scale.empty() || scale.size() != zero_point.size())
    throw std::invalid_argument("AffineParams: scale/zero_point size mismatch");
  if (granularity == Granularity::PerTensor && scale.size() != 1)
    throw std::invalid_argument("AffineParams: per-tensor params must hold one channel");
  for (std::size_t c = 0; c < scale.size(); ++c)
  {
    if (!(scale[c] > 0.0) || !std::isfinite(scale[c]))
      throw std::invalid_argument("AffineParams: scale must be positive and finite");
    if (zero_point[c] < 0 || zero_point[c] > qmax())
      throw std::invalid_argument("AffineParams: zero_point out of range");
  }
}

void LogParams::validate() const
{
  check_bits(bits);
  if (!(base > 1.0) || !std::isfinite(base))
    throw std::invalid_argument("LogParams: base must be > 1");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("LogParams: scale must be positive");
}

int QuantScheme::bits() const
{
  return kind() == Kind::Uniform ? affine().bits : log().bits;
}

AffineParams affine_from_range(double lo, double hi, int bits)
{
  check_bits(bits);
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw std::domain_error("calibration range is not finite");
  if (lo > hi)
    throw std::invalid_argument("calibration range has min > max");

  AffineParams p;
  p.bits = bits;
  const auto qmax = p.qmax();
  if (lo == hi)
  {
    p.scale = {1.0};
    p.zero_point = {static_cast<std::int64_t>(
      std::clamp(round_half_away(-lo), 0.0, static_cast<double>(qmax)))};
    return p;
  }
  // The range is widened to contain zero.
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  const double scale = (hi - lo) / static_cast<double>(qmax);
  p.scale = {scale};
  p.zero_point = {static_cast<std::int64_t>(
    std::clamp(round_half_away(-lo * static_cast<double>(qmax) / (hi - lo)), 0.0, static_cast<double>(qmax)))};
  return p;
}

AffineParams calibrate_uniform(const Tensor &samples, int bits, Granularity granularity,
                               std::size_t axis)
{
  if (samples.empty())
    throw std::invalid_argument("calibrate_uniform: empty input");
  require_finite(samples.data(), "calibrate_uniform");
  check_bits(bits);

  if (granularity == Granularity::PerTensor)
  {
    const auto [lo, hi] = std::minmax_element(samples.values().begin(), samples.values().end());
    return affine_from_range(*lo, *hi, bits);
  }

  if (axis >= samples.rank())
    throw std::invalid_argument("calibrate_uniform: axis out of range");
  const std::size_t channels = samples.dim(axis);
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < samples.rank(); ++d)
    inner *= samples.dim(d);

  std::vector<double> lo(channels, std::numeric_limits<double>::infinity());
  std::vector<double> hi(channels, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < samples.size(); ++i)
  {
    const std::size_t c = (i / inner) % channels;
    lo[c] = std::min(lo[c], samples[i]);
    hi[c] = std::max(hi[c], samples[i]);
  }

  AffineParams p;
  p.bits = bits;
  p.granularity = Granularity::PerChannel;
  p.axis = axis;
  p.scale.reserve(channels);
  p.zero_point.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c)
  {
    const auto one = affine_from_range(lo[c], hi[c], bits);
    p.scale.push_back(one.scale[0]);
    p.zero_point.push_back(one.zero_point[0]);
  }
  return p;
}

CodeTensor quantize_uniform(const Tensor &x, const AffineParams &p)
{
  p.validate();
  require_finite(x.data(), "quantize_uniform");
  const ChannelLayout layout(x.shape(), p);
  CodeTensor out{x.shape(), std::vector<std::int64_t>(x.size())};
  const auto qmax = p.qmax();
  for (std::size_t i = 0; i < x.size(); ++i)
  {
    const auto c = layout.channel(i);
    out.codes[i] = uniform_code(x[i], p.scale[c], p.zero_point[c], qmax);
  }
  return out;
}

Tensor dequantize_uniform(const CodeTensor &q, const AffineParams &p)
{
  p.validate();
  const ChannelLayout layout(q.shape, p);
  const auto qmax = p.qmax();
  std::vector<double> data(q.codes.size());
  for (std::size_t i = 0; i < q.codes.size(); ++i)
  {
    if (q.codes[i] < 0 || q.codes[i] > qmax)
      throw std::out_of_range("dequantize_uniform: code " + std::to_string(q.codes[i]) +
                              " outside [0, " + std::to_string(qmax) + "]");
    const auto c = layout.channel(i);
    data[i] = p.scale[c] * static_cast<double>(q.codes[i] - p.zero_point[c]);
  }
  return Tensor(q.shape, std::move(data));
}

std::int64_t log_code(double x, const LogParams &p)
{
  if (std::isnan(x) || std::isinf(x))
    throw std::domain_error("quantize_log: non-finite input");
  if (x < 0.0)
    throw std::domain_error("quantize_log: negative input");
  const auto qmax = p.qmax();
  if (x == 0.0)
    return qmax;
  const double k = round_half_away(-std::log2(x / p.scale) / std::log2(p.base));
  return static_cast<std::int64_t>(std::clamp(k, 0.0, static_cast<double>(qmax)));
}

CodeTensor quantize_log(const Tensor &x, const LogParams &p)
{
  p.validate();
  CodeTensor out{x.shape(), std::vector<std::int64_t>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i)
    out.codes[i] = log_code(x[i], p);
  return out;
}

Tensor dequantize_log(const CodeTensor &q, const LogParams &p)
{
  p.validate();
  const auto qmax = p.qmax();
  std::vector<double> data(q.codes.size());
  for (std::size_t i = 0; i < q.codes.size(); ++i)
  {
    if (q.codes[i] < 0 || q.codes[i] > qmax)
      throw std::out_of_range("dequantize_log: code out of range");
    data[i] = p.scale * std::pow(p.base, -static_cast<double>(q.codes[i]));
  }
  return Tensor(q.shape, std::move(data));
}

const std::vector<double> &default_log_bases()
{
  static const std::vector<double> bases{2.0, std::sqrt(2.0), std::pow(2.0, 0.25)};
  return bases;
}

std::vector<double> log_bases_for_bits(int bits)
{
  check_bits(bits);
  auto bases = default_log_bases();
  const double qmax = std::ldexp(1.0, bits) - 1.0;
  for (int k = 3; qmax / std::ldexp(1.0, k) >= kMinLogOctaves; ++k)
    bases.push_back(std::pow(2.0, std::ldexp(1.0, -k)));
  return bases;
}

LogParams search_log_base(std::span<const double> samples, int bits,
                          std::span<const double> candidates)
{
  if (candidates.empty())
    throw std::invalid_argument("search_log_base: empty candidate list");
  if (samples.empty())
    throw std::invalid_argument("search_log_base: empty samples");
  check_bits(bits);

  double scale = 0.0;
  for (double v : samples)
  {
    if (!std::isfinite(v))
      throw std::domain_error("search_log_base: non-finite sample");
    if (v < 0.0)
      throw std::domain_error("search_log_base: negative sample");
    scale = std::max(scale, v);
  }
  if (scale == 0.0)
    scale = 1.0;

  // Relative tolerance under which two candidates count as tied.
  const double tie = 1e-15 * scale * scale;

  LogParams best;
  double best_mse = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double base : candidates)
  {
    LogParams p{scale, base, bits};
    p.validate();
    std::vector<double> codebook(static_cast<std::size_t>(p.qmax()) + 1);
    for (std::size_t k = 0; k < codebook.size(); ++k)
      codebook[k] = scale * std::pow(base, -static_cast<double>(k));

    double sse = 0.0;
    for (double v : samples)
    {
      const double err = codebook[static_cast<std::size_t>(log_code(v, p))] - v;
      sse += err * err;
    }
    const double mse = sse / static_cast<double>(samples.size());
    const bool better = mse < best_mse - tie;
    const bool tied_smaller = std::abs(mse - best_mse) <= tie && base < best.base;
    if (!have_best || better || tied_smaller)
    {
      best = p;
      best_mse = mse;
      have_best = true;
    }
  }
  return best;
}

Tensor fake_quant(const Tensor &x, const QuantScheme &scheme)
{
  if (scheme.kind() == QuantScheme::Kind::Uniform)
    return dequantize_uniform(quantize_uniform(x, scheme.affine()), scheme.affine());
  return dequantize_log(quantize_log(x, scheme.log()), scheme.log());
}

void fake_quant_inplace(Tensor &x, const QuantScheme &scheme)
{
  if (scheme.kind() == QuantScheme::Kind::Uniform)
  {
    const auto &p = scheme.affine();
    p.validate();
    require_finite(x.data(), "fake_quant");
    const ChannelLayout layout(x.shape(), p);
    const auto qmax = p.qmax();
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      const auto c = layout.channel(i);
      x[i] = p.scale[c] * static_cast<double>(uniform_code(x[i], p.scale[c], p.zero_point[c], qmax) -
                                              p.zero_point[c]);
    }
    return;
  }

  const auto &p = scheme.log();
  p.validate();
  std::vector<double> codebook(static_cast<std::size_t>(p.qmax()) + 1);
  for (std::size_t k = 0; k < codebook.size(); ++k)
    codebook[k] = p.scale * std::pow(p.base, -static_cast<double>(k));
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = codebook[static_cast<std::size_t>(log_code(x[i], p))];
}

} // namespace mixq
