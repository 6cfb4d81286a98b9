#pragma once

#include "mixq/quant.hpp"
#include "mixq/tensor.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mixq
{

enum class LayerKind
{
  PatchEmbed,
  QKV,
  MatMul1,
  Softmax,
  MatMul2,
  Proj,
  FC1,
  FC2,
  Head,
  LayerNorm,
  Residual,
};

const char *to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string &name);

/// Kinds that may carry a quantization scheme.
bool is_quantizable_kind(LayerKind kind);

struct LayerSpec
{
  int id = 0;
  LayerKind kind = LayerKind::Residual;
  int block = -1; ///< -1 for layers outside the transformer blocks
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  bool quantizable = false;
};

/**
 * Toy ViT description. Input patches are [tokens, patch_dim]; the patch
 * embedding projects them to [tokens, embed]. Layer order per block is
 * LN, QKV, MatMul1, Softmax, MatMul2, Proj, residual, LN, FC1, FC2, residual.
 */
struct NetworkSpec
{
  std::size_t blocks = 4;
  std::size_t tokens = 16;
  std::size_t patch_dim = 48;
  std::size_t embed = 64;
  std::size_t heads = 4;
  std::size_t mlp_dim = 256;
  std::size_t classes = 10;
  std::vector<LayerSpec> layers;

  std::size_t head_dim() const { return embed / heads; }

  /// Ids of layers with quantizable = true, in network order.
  std::vector<int> quantizable_ids() const;
  const LayerSpec &layer(int id) const;

  void validate() const;
};

/// Fills `layers` from the hyper-parameters; first and last layers are unquantized.
NetworkSpec make_network_spec(std::size_t blocks, std::size_t tokens, std::size_t patch_dim,
                              std::size_t embed, std::size_t heads, std::size_t mlp_dim,
                              std::size_t classes);

/// 4 blocks, 16 tokens, 48-dim patches, D=64, h=4, D_f=256, 10 classes.
NetworkSpec default_network_spec();

// Weight matrices are stored [out, in]; rows are output channels.
struct AttentionWeights
{
  Tensor w_qkv; ///< [3D, D], output columns ordered Q | K | V, heads contiguous
  Tensor b_qkv;
  Tensor w_proj; ///< [D, D]
  Tensor b_proj;
};

struct MlpWeights
{
  Tensor w_fc1; ///< [D_f, D]
  Tensor b_fc1;
  Tensor w_fc2; ///< [D, D_f]
  Tensor b_fc2;
};

struct BlockWeights
{
  Tensor ln1_gamma, ln1_beta;
  AttentionWeights attn;
  Tensor ln2_gamma, ln2_beta;
  MlpWeights mlp;
};

struct ModelWeights
{
  Tensor patch_w; ///< [D, patch_dim]
  Tensor patch_b;
  std::vector<BlockWeights> blocks;
  Tensor norm_gamma, norm_beta;
  Tensor head_w; ///< [C, D]
  Tensor head_b;

  /// Every tensor in canonical serialization order.
  std::vector<const Tensor *> tensors() const;
  std::vector<Tensor *> tensors();
};

/// Shapes of every weight tensor in canonical order.
std::vector<std::vector<std::size_t>> weight_shapes(const NetworkSpec &spec);

/// Seeded initialization; weights ~ N(0, 1/fan_in), LN affine at identity. Values are float-representable.
ModelWeights init_weights(const NetworkSpec &spec, std::uint64_t seed);

/// Weight matrix of a linear layer, or nullptr for weightless layers.
const Tensor *layer_weight(const NetworkSpec &spec, const ModelWeights &w, int layer_id);
const Tensor *layer_bias(const NetworkSpec &spec, const ModelWeights &w, int layer_id);

/**
 * Quantization applied while executing one layer. Inputs are the layer's
 * activation operands: linear layers have one, MatMul1 has (Q, K) and
 * MatMul2 has (attention probabilities, V).
 */
struct LayerQuant
{
  int bits = 8;
  std::optional<QuantScheme> weight;
  std::vector<std::optional<QuantScheme>> inputs;
};

using QuantConfig = std::map<int, LayerQuant>;

/// Number of activation operands consumed by a layer kind.
std::size_t operand_count(LayerKind kind);

using ActivationObserver = std::function<void(int layer_id, std::size_t operand, const Tensor &)>;

struct ForwardOptions
{
  const QuantConfig *quant = nullptr;
  std::set<int> zero_mask;
  ActivationObserver observer;                 ///< sees every quantizable layer operand
  std::map<int, std::uint64_t> *mac_counter = nullptr; ///< runtime multiply count per layer
  bool record_taps = true;
};

struct ForwardResult
{
  Tensor logits;
  std::map<int, Tensor> taps;
};

/// Per-forward execution state shared by the block-level functions.
class ForwardContext
{
public:
  ForwardContext(const NetworkSpec &spec, const ModelWeights &weights, const ForwardOptions &options);

  /// Observes then fake-quantizes an operand of `layer_id`.
  void input(int layer_id, std::size_t operand, Tensor &x);
  /// Weight as seen by the layer (fake-quantized when configured).
  const Tensor &weight(int layer_id, const Tensor &w);
  /// Records the tap, then zeroes the output if masked.
  void output(int layer_id, Tensor &y);
  /// Linear layer using the (possibly quantized) weight; counts MACs when requested.
  Tensor linear(int layer_id, const Tensor &x, const Tensor &w, const Tensor &b);
  void count(int layer_id, std::uint64_t macs);

  std::map<int, Tensor> take_taps() { return std::move(_taps); }

private:
  const NetworkSpec &_spec;
  const ForwardOptions &_options;
  std::map<int, Tensor> _taps;
  std::map<int, Tensor> _qweights;
};

/// Layer ids of one transformer block's sublayers.
struct BlockLayerIds
{
  int qkv = -1, matmul1 = -1, softmax = -1, matmul2 = -1, proj = -1, fc1 = -1, fc2 = -1;
};

BlockLayerIds block_layer_ids(const NetworkSpec &spec, std::size_t block);

/// y = x W^T + b for x [N, in], W [out, in].
Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b);
Tensor layer_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta, double eps = 1e-6);
double gelu(double x);
/// Row-wise numerically stable softmax.
void softmax_rows(Tensor &x);

Tensor mhsa_forward(const Tensor &x, const AttentionWeights &w, std::size_t heads,
                    ForwardContext *ctx = nullptr, const BlockLayerIds *ids = nullptr);
Tensor mlp_forward(const Tensor &y, const MlpWeights &w, ForwardContext *ctx = nullptr,
                   const BlockLayerIds *ids = nullptr);
Tensor block_forward(const Tensor &x, const BlockWeights &w, std::size_t heads,
                     ForwardContext *ctx = nullptr, const BlockLayerIds *ids = nullptr);

/// Input is [tokens, patch_dim]. Output logits have length `classes`.
ForwardResult model_forward(const NetworkSpec &spec, const ModelWeights &weights, const Tensor &input,
                            const ForwardOptions &options = {});

/// Smoothing floor applied to output probabilities.
inline constexpr double kProbabilityFloor = 1e-12;

/// Softmax of logits followed by (p + eps) / (1 + C eps).
std::vector<double> output_distribution(std::span<const double> logits);

/// Unfolds an image [channels, height, width] into [patches, channels*patch*patch].
Tensor unfold_patches(const Tensor &image, std::size_t patch);

} // namespace mixq
