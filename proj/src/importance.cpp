#include "mixq/importance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mixq
{

namespace
{

void check_normalized(std::span<const double> p, const char *name)
{
  double sum = 0.0;
  for (double v : p)
  {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument(std::string("kl_divergence: ") + name + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument(std::string("kl_divergence: ") + name + " is not normalized");
}

} // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q)
{
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: length mismatch");
  check_normalized(p, "p");
  check_normalized(q, "q");

  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    if (p[i] == 0.0)
      continue;
    if (q[i] == 0.0)
      throw std::domain_error("kl_divergence: q has zero mass where p does not");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative residue for near-identical inputs.
  return kl < 0.0 ? 0.0 : kl;
}

std::vector<double> model_distribution(const ModelContext &model, const Tensor &image,
                                       const std::set<int> &zero_mask)
{
  ForwardOptions options;
  options.quant = model.quant;
  options.zero_mask = zero_mask;
  options.record_taps = false;
  const auto result = model_forward(model.spec, model.weights, image, options);
  if (model.forward_counter)
    ++*model.forward_counter;
  return output_distribution(result.logits.data());
}

double cmi_layer(const ModelContext &model, const Tensor &image, int layer_id,
                 std::span<const double> baseline)
{
  if (!model.spec.layer(layer_id).quantizable)
    throw std::invalid_argument("cmi_layer: layer " + std::to_string(layer_id) + " is not quantizable");
  const auto perturbed = model_distribution(model, image, {layer_id});
  return kl_divergence(baseline, perturbed);
}

double cmi_layer(const ModelContext &model, const Tensor &image, int layer_id)
{
  const auto baseline = model_distribution(model, image);
  return cmi_layer(model, image, layer_id, baseline);
}

std::vector<double> normalize_scores(std::span<const double> raw)
{
  if (raw.empty())
    throw std::invalid_argument("normalize_scores: empty input");
  double total = 0.0;
  for (double v : raw)
  {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("normalize_scores: entries must be non-negative and finite");
    total += v;
  }
  std::vector<double> out(raw.size());
  if (total == 0.0)
  {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(raw.size()));
    return out;
  }
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = raw[i] / total;
  return out;
}

ImportanceProfile importance_profile(const ModelContext &model, std::span<const Tensor> images)
{
  if (images.empty())
    throw std::invalid_argument("importance_profile: need at least one image");

  std::uint64_t forwards = 0;
  ModelContext counted = model;
  counted.forward_counter = &forwards;

  ImportanceProfile profile;
  profile.layer_ids = model.spec.quantizable_ids();
  const std::size_t L = profile.layer_ids.size();
  if (L == 0)
    throw std::invalid_argument("importance_profile: network has no quantizable layers");

  for (const auto &image : images)
  {
    const auto baseline = model_distribution(counted, image);
    std::vector<double> raw(L);
    for (std::size_t i = 0; i < L; ++i)
      raw[i] = cmi_layer(counted, image, profile.layer_ids[i], baseline);
    profile.per_image.push_back(normalize_scores(raw));
    profile.raw.push_back(std::move(raw));
  }

  profile.omega.assign(L, 0.0);
  for (const auto &row : profile.per_image)
    for (std::size_t i = 0; i < L; ++i)
      profile.omega[i] += row[i];
  for (auto &v : profile.omega)
    v /= static_cast<double>(images.size());

  profile.forwards = forwards;
  if (model.forward_counter)
    *model.forward_counter += forwards;
  return profile;
}

} // namespace mixq
