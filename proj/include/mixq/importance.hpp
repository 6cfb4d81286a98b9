#pragma once

#include "mixq/nn.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mixq
{

/// Network, weights and (optionally) the quantization config used for scoring.
struct ModelContext
{
  const NetworkSpec &spec;
  const ModelWeights &weights;
  const QuantConfig *quant = nullptr;
  /// Incremented once per model forward, when set.
  std::uint64_t *forward_counter = nullptr;
};

struct ImportanceProfile
{
  std::vector<int> layer_ids;
  std::vector<std::vector<double>> raw;      ///< T x L unnormalized KL scores
  std::vector<std::vector<double>> per_image; ///< T x L normalized scores
  std::vector<double> omega;                  ///< column means of per_image
  std::uint64_t forwards = 0;                 ///< model forwards spent

  std::size_t images() const { return per_image.size(); }
};

/// Discrete KL(p || q) in nats. Both inputs must be normalized within 1e-6.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Output distribution of a single forward with `zero_mask` applied.
std::vector<double> model_distribution(const ModelContext &model, const Tensor &image,
                                       const std::set<int> &zero_mask = {});

/// KL(full model || model with `layer_id` zeroed).
double cmi_layer(const ModelContext &model, const Tensor &image, int layer_id);

/// Same as cmi_layer with a precomputed baseline distribution.
double cmi_layer(const ModelContext &model, const Tensor &image, int layer_id,
                 std::span<const double> baseline);

/// raw / sum(raw); uniform when the sum is zero.
std::vector<double> normalize_scores(std::span<const double> raw);

/// One baseline forward per image plus one perturbed forward per quantizable layer.
ImportanceProfile importance_profile(const ModelContext &model, std::span<const Tensor> images);

} // namespace mixq
