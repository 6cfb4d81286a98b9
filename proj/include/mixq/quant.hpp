#pragma once

#include "mixq/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace mixq
{

enum class Granularity
{
  PerTensor,
  PerChannel,
};

/**
 * Asymmetric uniform quantization parameters.
 *
 * PerTensor carries a single (scale, zero_point) pair. PerChannel carries one
 * pair per slice along `axis`; for weight matrices stored as [out, in] the
 * axis is 0 (output channels).
 */
struct AffineParams
{
  std::vector<double> scale;
  std::vector<std::int64_t> zero_point;
  int bits = 8;
  Granularity granularity = Granularity::PerTensor;
  std::size_t axis = 0;

  std::int64_t qmax() const { return (std::int64_t{1} << bits) - 1; }
  std::size_t channels() const { return scale.size(); }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Logarithmic quantization: codebook values are scale * base^(-k), k in [0, 2^bits - 1].
struct LogParams
{
  double scale = 1.0;
  double base = 2.0;
  int bits = 4;

  std::int64_t qmax() const { return (std::int64_t{1} << bits) - 1; }
  void validate() const;
};

class QuantScheme
{
public:
  enum class Kind
  {
    Uniform,
    Logarithmic,
  };

  QuantScheme(AffineParams p) : _params(std::move(p)) {}
  QuantScheme(LogParams p) : _params(p) {}

  Kind kind() const { return _params.index() == 0 ? Kind::Uniform : Kind::Logarithmic; }
  int bits() const;

  const AffineParams &affine() const { return std::get<AffineParams>(_params); }
  const LogParams &log() const { return std::get<LogParams>(_params); }

private:
  std::variant<AffineParams, LogParams> _params;
};

/// Integer codes with the shape of the tensor they were produced from.
struct CodeTensor
{
  std::vector<std::size_t> shape;
  std::vector<std::int64_t> codes;
};

/// Round half away from zero.
inline double round_half_away(double v) { return std::round(v); }

/// Min-max calibration for a single range.
AffineParams affine_from_range(double lo, double hi, int bits);

AffineParams calibrate_uniform(const Tensor &samples, int bits,
                               Granularity granularity = Granularity::PerTensor,
                               std::size_t axis = 0);

CodeTensor quantize_uniform(const Tensor &x, const AffineParams &p);
Tensor dequantize_uniform(const CodeTensor &q, const AffineParams &p);

CodeTensor quantize_log(const Tensor &x, const LogParams &p);
Tensor dequantize_log(const CodeTensor &q, const LogParams &p);

/// Code for a single non-negative value.
std::int64_t log_code(double x, const LogParams &p);

const std::vector<double> &default_log_bases();

/// Octaves the log codebook must span before a finer base is admitted.
inline constexpr int kMinLogOctaves = 16;

/**
 * default_log_bases() extended with 2^(1/2^k), k >= 3, while the codebook
 * still spans kMinLogOctaves octaves at `bits`. Wider codes then buy
 * resolution instead of unused dynamic range.
 */
std::vector<double> log_bases_for_bits(int bits);

/**
 * Picks the base with the lowest mean squared fake-quantization error over
 * `samples`, using scale = max(samples). Ties go to the smaller base.
 */
LogParams search_log_base(std::span<const double> samples, int bits,
                          std::span<const double> candidates = default_log_bases());

Tensor fake_quant(const Tensor &x, const QuantScheme &scheme);

/// Element-wise fake quantization in place; same result as fake_quant.
void fake_quant_inplace(Tensor &x, const QuantScheme &scheme);

} // namespace mixq
