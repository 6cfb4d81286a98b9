#include "mixq/nn.hpp"

#include "mixq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixq
{

namespace
{

struct KindName
{
  LayerKind kind;
  const char *name;
};

constexpr KindName kKindNames[] = {
  {LayerKind::PatchEmbed, "PatchEmbed"}, {LayerKind::QKV, "QKV"},
  {LayerKind::MatMul1, "MatMul1"},       {LayerKind::Softmax, "Softmax"},
  {LayerKind::MatMul2, "MatMul2"},       {LayerKind::Proj, "Proj"},
  {LayerKind::FC1, "FC1"},               {LayerKind::FC2, "FC2"},
  {LayerKind::Head, "Head"},             {LayerKind::LayerNorm, "LayerNorm"},
  {LayerKind::Residual, "Residual"},
};

void require_shape(const Tensor &t, const std::vector<std::size_t> &shape, const char *what)
{
  if (t.shape() != shape)
    throw std::invalid_argument(std::string(what) + ": expected shape " + shape_string(shape) +
                                ", got " + shape_string(t.shape()));
}

template <bool Count>
Tensor linear_kernel(const Tensor &x, const Tensor &w, const Tensor &b, std::uint64_t *macs)
{
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1))
    throw std::invalid_argument("linear: dimension mismatch " + shape_string(x.shape()) + " x " +
                                shape_string(w.shape()));
  const std::size_t rows = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (!b.empty() && b.size() != out)
    throw std::invalid_argument("linear: bias length mismatch");

  Tensor y({rows, out});
  for (std::size_t n = 0; n < rows; ++n)
  {
    const double *xr = x.data().data() + n * in;
    for (std::size_t o = 0; o < out; ++o)
    {
      const double *wr = w.data().data() + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i)
      {
        acc += xr[i] * wr[i];
        if constexpr (Count)
          ++*macs;
      }
      y.at(n, o) = acc + (b.empty() ? 0.0 : b[o]);
    }
  }
  return y;
}

} // namespace

const char *to_string(LayerKind kind)
{
  for (const auto &kn : kKindNames)
    if (kn.kind == kind)
      return kn.name;
  return "?";
}

LayerKind layer_kind_from_string(const std::string &name)
{
  for (const auto &kn : kKindNames)
    if (name == kn.name)
      return kn.kind;
  throw std::invalid_argument("unknown layer kind '" + name + "'");
}

bool is_quantizable_kind(LayerKind kind)
{
  switch (kind)
  {
    case LayerKind::PatchEmbed:
    case LayerKind::QKV:
    case LayerKind::MatMul1:
    case LayerKind::MatMul2:
    case LayerKind::Proj:
    case LayerKind::FC1:
    case LayerKind::FC2:
    case LayerKind::Head:
      return true;
    default:
      return false;
  }
}

std::size_t operand_count(LayerKind kind)
{
  switch (kind)
  {
    case LayerKind::MatMul1:
    case LayerKind::MatMul2:
      return 2;
    case LayerKind::Softmax:
    case LayerKind::LayerNorm:
    case LayerKind::Residual:
      return 0;
    default:
      return 1;
  }
}

std::vector<int> NetworkSpec::quantizable_ids() const
{
  std::vector<int> ids;
  for (const auto &l : layers)
    if (l.quantizable)
      ids.push_back(l.id);
  return ids;
}

const LayerSpec &NetworkSpec::layer(int id) const
{
  if (id < 0 || static_cast<std::size_t>(id) >= layers.size())
    throw std::out_of_range("unknown layer id " + std::to_string(id));
  return layers[static_cast<std::size_t>(id)];
}

NetworkSpec make_network_spec(std::size_t blocks, std::size_t tokens, std::size_t patch_dim,
                              std::size_t embed, std::size_t heads, std::size_t mlp_dim,
                              std::size_t classes)
{
  if (blocks == 0 || tokens == 0 || patch_dim == 0 || embed == 0 || heads == 0 || mlp_dim == 0 || classes == 0)
    throw std::invalid_argument("network spec: every dimension must be positive");
  if (embed % heads != 0)
    throw std::invalid_argument("network spec: embed must be divisible by heads");
  NetworkSpec spec;
  spec.blocks = blocks;
  spec.tokens = tokens;
  spec.patch_dim = patch_dim;
  spec.embed = embed;
  spec.heads = heads;
  spec.mlp_dim = mlp_dim;
  spec.classes = classes;

  auto add = [&spec](LayerKind kind, int block, std::size_t in, std::size_t out) {
    LayerSpec l;
    l.id = static_cast<int>(spec.layers.size());
    l.kind = kind;
    l.block = block;
    l.d_in = in;
    l.d_out = out;
    l.quantizable = is_quantizable_kind(kind);
    spec.layers.push_back(l);
  };

  add(LayerKind::PatchEmbed, -1, patch_dim, embed);
  for (std::size_t b = 0; b < blocks; ++b)
  {
    const int bi = static_cast<int>(b);
    add(LayerKind::LayerNorm, bi, embed, embed);
    add(LayerKind::QKV, bi, embed, 3 * embed);
    add(LayerKind::MatMul1, bi, embed, tokens);
    add(LayerKind::Softmax, bi, tokens, tokens);
    add(LayerKind::MatMul2, bi, tokens, embed);
    add(LayerKind::Proj, bi, embed, embed);
    add(LayerKind::Residual, bi, embed, embed);
    add(LayerKind::LayerNorm, bi, embed, embed);
    add(LayerKind::FC1, bi, embed, mlp_dim);
    add(LayerKind::FC2, bi, mlp_dim, embed);
    add(LayerKind::Residual, bi, embed, embed);
  }
  add(LayerKind::LayerNorm, -1, embed, embed);
  add(LayerKind::Head, -1, embed, classes);

  spec.layers.front().quantizable = false;
  spec.layers.back().quantizable = false;
  return spec;
}

NetworkSpec default_network_spec() { return make_network_spec(4, 16, 48, 64, 4, 256, 10); }

void NetworkSpec::validate() const
{
  if (blocks == 0 || tokens == 0 || patch_dim == 0 || embed == 0 || heads == 0 || mlp_dim == 0 ||
      classes == 0)
    throw std::invalid_argument("network spec: every dimension must be positive");
  if (embed % heads != 0)
    throw std::invalid_argument("network spec: embed must be divisible by heads");

  const auto expected = make_network_spec(blocks, tokens, patch_dim, embed, heads, mlp_dim, classes);
  if (layers.size() != expected.layers.size())
    throw std::invalid_argument("network spec: expected " + std::to_string(expected.layers.size()) +
                                " layers, got " + std::to_string(layers.size()));
  for (std::size_t i = 0; i < layers.size(); ++i)
  {
    const auto &l = layers[i];
    const auto &e = expected.layers[i];
    if (l.id != e.id || l.kind != e.kind || l.block != e.block || l.d_in != e.d_in || l.d_out != e.d_out)
      throw std::invalid_argument("network spec: layer " + std::to_string(i) +
                                  " does not follow the block layout");
    if (l.quantizable && !is_quantizable_kind(l.kind))
      throw std::invalid_argument(std::string("network spec: layer kind ") + to_string(l.kind) +
                                  " cannot be quantized");
  }
  if (layers.front().quantizable || layers.back().quantizable)
    throw std::invalid_argument("network spec: first and last layers must stay unquantized");
}

std::vector<const Tensor *> ModelWeights::tensors() const
{
  std::vector<const Tensor *> out{&patch_w, &patch_b};
  for (const auto &b : blocks)
  {
    out.insert(out.end(), {&b.ln1_gamma, &b.ln1_beta, &b.attn.w_qkv, &b.attn.b_qkv, &b.attn.w_proj,
                           &b.attn.b_proj, &b.ln2_gamma, &b.ln2_beta, &b.mlp.w_fc1, &b.mlp.b_fc1,
                           &b.mlp.w_fc2, &b.mlp.b_fc2});
  }
  out.insert(out.end(), {&norm_gamma, &norm_beta, &head_w, &head_b});
  return out;
}

std::vector<Tensor *> ModelWeights::tensors()
{
  std::vector<Tensor *> out;
  for (const Tensor *t : std::as_const(*this).tensors())
    out.push_back(const_cast<Tensor *>(t));
  return out;
}

std::vector<std::vector<std::size_t>> weight_shapes(const NetworkSpec &spec)
{
  const auto D = spec.embed, F = spec.mlp_dim;
  std::vector<std::vector<std::size_t>> shapes{{D, spec.patch_dim}, {D}};
  for (std::size_t b = 0; b < spec.blocks; ++b)
  {
    shapes.insert(shapes.end(), {{D}, {D}, {3 * D, D}, {3 * D}, {D, D}, {D}, {D}, {D}, {F, D}, {F},
                                 {D, F}, {D}});
  }
  shapes.insert(shapes.end(), {{D}, {D}, {spec.classes, D}, {spec.classes}});
  return shapes;
}

ModelWeights init_weights(const NetworkSpec &spec, std::uint64_t seed)
{
  spec.validate();
  ModelWeights w;
  w.blocks.resize(spec.blocks);
  const auto shapes = weight_shapes(spec);
  auto slots = w.tensors();
  Rng rng(seed);
  for (std::size_t i = 0; i < slots.size(); ++i)
  {
    Tensor t(shapes[i]);
    if (shapes[i].size() == 2)
    {
      const double stddev = 1.0 / std::sqrt(static_cast<double>(shapes[i][1]));
      for (auto &v : t.values())
        v = static_cast<float>(rng.normal(0.0, stddev));
    }
    else
    {
      for (auto &v : t.values())
        v = static_cast<float>(rng.normal(0.0, 0.02));
    }
    *slots[i] = std::move(t);
  }
  // LayerNorm affine starts at identity.
  for (auto &b : w.blocks)
  {
    b.ln1_gamma.fill(1.0);
    b.ln1_beta.fill(0.0);
    b.ln2_gamma.fill(1.0);
    b.ln2_beta.fill(0.0);
  }
  w.norm_gamma.fill(1.0);
  w.norm_beta.fill(0.0);
  return w;
}

namespace
{

const Tensor *layer_tensor(const NetworkSpec &spec, const ModelWeights &w, int layer_id, bool bias)
{
  const auto &l = spec.layer(layer_id);
  const Tensor *none = nullptr;
  if (l.kind == LayerKind::PatchEmbed)
    return bias ? &w.patch_b : &w.patch_w;
  if (l.kind == LayerKind::Head)
    return bias ? &w.head_b : &w.head_w;
  if (l.block < 0 || static_cast<std::size_t>(l.block) >= w.blocks.size())
    return none;
  auto &b = w.blocks[static_cast<std::size_t>(l.block)];
  switch (l.kind)
  {
    case LayerKind::QKV:
      return bias ? &b.attn.b_qkv : &b.attn.w_qkv;
    case LayerKind::Proj:
      return bias ? &b.attn.b_proj : &b.attn.w_proj;
    case LayerKind::FC1:
      return bias ? &b.mlp.b_fc1 : &b.mlp.w_fc1;
    case LayerKind::FC2:
      return bias ? &b.mlp.b_fc2 : &b.mlp.w_fc2;
    default:
      return none;
  }
}

} // namespace

const Tensor *layer_weight(const NetworkSpec &spec, const ModelWeights &w, int layer_id)
{
  return layer_tensor(spec, w, layer_id, false);
}

const Tensor *layer_bias(const NetworkSpec &spec, const ModelWeights &w, int layer_id)
{
  return layer_tensor(spec, w, layer_id, true);
}

BlockLayerIds block_layer_ids(const NetworkSpec &spec, std::size_t block)
{
  // PatchEmbed occupies id 0; each block spans 11 ids starting with its LayerNorm.
  const int base = 1 + static_cast<int>(block) * 11;
  BlockLayerIds ids;
  ids.qkv = base + 1;
  ids.matmul1 = base + 2;
  ids.softmax = base + 3;
  ids.matmul2 = base + 4;
  ids.proj = base + 5;
  ids.fc1 = base + 8;
  ids.fc2 = base + 9;
  if (spec.layer(ids.fc2).kind != LayerKind::FC2)
    throw std::logic_error("block_layer_ids: unexpected layer layout");
  return ids;
}

ForwardContext::ForwardContext(const NetworkSpec &spec, const ModelWeights &weights,
                               const ForwardOptions &options)
  : _spec(spec), _options(options)
{
  (void)weights;
  for (int id : options.zero_mask)
  {
    if (id < 0 || static_cast<std::size_t>(id) >= spec.layers.size() || !spec.layer(id).quantizable)
      throw std::invalid_argument("zero mask names unknown or unquantizable layer " + std::to_string(id));
  }
  if (options.quant)
  {
    for (const auto &[id, lq] : *options.quant)
    {
      if (id < 0 || static_cast<std::size_t>(id) >= spec.layers.size() || !spec.layer(id).quantizable)
        throw std::invalid_argument("quant config names unknown or unquantizable layer " +
                                    std::to_string(id));
      if (lq.inputs.size() > operand_count(spec.layer(id).kind))
        throw std::invalid_argument("quant config has too many operands for layer " + std::to_string(id));
    }
  }
}

void ForwardContext::input(int layer_id, std::size_t operand, Tensor &x)
{
  if (_options.observer && _spec.layer(layer_id).quantizable)
    _options.observer(layer_id, operand, x);
  if (!_options.quant)
    return;
  const auto it = _options.quant->find(layer_id);
  if (it == _options.quant->end() || operand >= it->second.inputs.size() || !it->second.inputs[operand])
    return;
  fake_quant_inplace(x, *it->second.inputs[operand]);
}

const Tensor &ForwardContext::weight(int layer_id, const Tensor &w)
{
  if (!_options.quant)
    return w;
  const auto it = _options.quant->find(layer_id);
  if (it == _options.quant->end() || !it->second.weight)
    return w;
  auto [slot, inserted] = _qweights.try_emplace(layer_id);
  if (inserted)
  {
    slot->second = w;
    fake_quant_inplace(slot->second, *it->second.weight);
  }
  return slot->second;
}

void ForwardContext::output(int layer_id, Tensor &y)
{
  if (_options.record_taps && _spec.layer(layer_id).quantizable)
    _taps[layer_id] = y;
  if (_options.zero_mask.contains(layer_id))
    y.fill(0.0);
}

Tensor ForwardContext::linear(int layer_id, const Tensor &x, const Tensor &w, const Tensor &b)
{
  const Tensor &weight_used = weight(layer_id, w);
  if (!_options.mac_counter)
    return linear_kernel<false>(x, weight_used, b, nullptr);
  std::uint64_t macs = 0;
  Tensor y = linear_kernel<true>(x, weight_used, b, &macs);
  count(layer_id, macs);
  return y;
}

void ForwardContext::count(int layer_id, std::uint64_t macs)
{
  if (_options.mac_counter)
    (*_options.mac_counter)[layer_id] += macs;
}

Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b)
{
  return linear_kernel<false>(x, w, b, nullptr);
}

Tensor layer_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta, double eps)
{
  if (x.rank() != 2 || gamma.size() != x.dim(1) || beta.size() != x.dim(1))
    throw std::invalid_argument("layer_norm: dimension mismatch");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor y({rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
  {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr)
      mean += v;
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : xr)
      var += (v - mean) * (v - mean);
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c)
      y.at(r, c) = (xr[c] - mean) * inv * gamma[c] + beta[c];
  }
  return y;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

void softmax_rows(Tensor &x)
{
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.size() / cols;
  for (std::size_t r = 0; r < rows; ++r)
  {
    double *row = x.data().data() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
    {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c)
      row[c] /= sum;
  }
}

Tensor mhsa_forward(const Tensor &x, const AttentionWeights &w, std::size_t heads, ForwardContext *ctx,
                    const BlockLayerIds *ids)
{
  if (x.rank() != 2)
    throw std::invalid_argument("mhsa_forward: input must be [N, D]");
  const std::size_t N = x.dim(0), D = x.dim(1);
  if (heads == 0 || D % heads != 0)
    throw std::invalid_argument("mhsa_forward: D must be a multiple of heads");
  const std::size_t Dh = D / heads;
  require_shape(w.w_qkv, {3 * D, D}, "mhsa_forward W_qkv");
  require_shape(w.b_qkv, {3 * D}, "mhsa_forward b_qkv");
  require_shape(w.w_proj, {D, D}, "mhsa_forward W_o");
  require_shape(w.b_proj, {D}, "mhsa_forward b_o");

  const bool hooked = ctx && ids;
  std::uint64_t mm1_macs = 0, mm2_macs = 0;

  Tensor xin = x;
  Tensor qkv;
  if (hooked)
  {
    ctx->input(ids->qkv, 0, xin);
    qkv = ctx->linear(ids->qkv, xin, w.w_qkv, w.b_qkv);
    ctx->output(ids->qkv, qkv);
  }
  else
  {
    qkv = linear(xin, w.w_qkv, w.b_qkv);
  }

  Tensor q({N, D}), k({N, D}), v({N, D});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < D; ++c)
    {
      q.at(n, c) = qkv.at(n, c);
      k.at(n, c) = qkv.at(n, D + c);
      v.at(n, c) = qkv.at(n, 2 * D + c);
    }

  if (hooked)
  {
    ctx->input(ids->matmul1, 0, q);
    ctx->input(ids->matmul1, 1, k);
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(Dh));
  Tensor scores({heads, N, N});
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
      {
        double acc = 0.0;
        for (std::size_t c = 0; c < Dh; ++c)
        {
          acc += q.at(i, h * Dh + c) * k.at(j, h * Dh + c);
          ++mm1_macs;
        }
        scores[(h * N + i) * N + j] = acc * inv_sqrt;
      }
  if (hooked)
  {
    ctx->count(ids->matmul1, mm1_macs);
    ctx->output(ids->matmul1, scores);
  }

  softmax_rows(scores);
  Tensor &probs = scores;

  if (hooked)
  {
    ctx->input(ids->matmul2, 0, probs);
    ctx->input(ids->matmul2, 1, v);
  }
  Tensor attn({N, D});
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t c = 0; c < Dh; ++c)
      {
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j)
        {
          acc += probs[(h * N + i) * N + j] * v.at(j, h * Dh + c);
          ++mm2_macs;
        }
        attn.at(i, h * Dh + c) = acc;
      }
  if (hooked)
  {
    ctx->count(ids->matmul2, mm2_macs);
    ctx->output(ids->matmul2, attn);
    ctx->input(ids->proj, 0, attn);
    Tensor out = ctx->linear(ids->proj, attn, w.w_proj, w.b_proj);
    ctx->output(ids->proj, out);
    return out;
  }
  return linear(attn, w.w_proj, w.b_proj);
}

Tensor mlp_forward(const Tensor &y, const MlpWeights &w, ForwardContext *ctx, const BlockLayerIds *ids)
{
  if (y.rank() != 2)
    throw std::invalid_argument("mlp_forward: input must be [N, D]");
  const std::size_t D = y.dim(1), F = w.w_fc1.rank() == 2 ? w.w_fc1.dim(0) : 0;
  require_shape(w.w_fc1, {F, D}, "mlp_forward W1");
  require_shape(w.b_fc1, {F}, "mlp_forward b1");
  require_shape(w.w_fc2, {D, F}, "mlp_forward W2");
  require_shape(w.b_fc2, {D}, "mlp_forward b2");

  const bool hooked = ctx && ids;
  Tensor in = y;
  Tensor hidden;
  if (hooked)
  {
    ctx->input(ids->fc1, 0, in);
    hidden = ctx->linear(ids->fc1, in, w.w_fc1, w.b_fc1);
    ctx->output(ids->fc1, hidden);
  }
  else
  {
    hidden = linear(in, w.w_fc1, w.b_fc1);
  }

  for (auto &v : hidden.values())
    v = gelu(v);

  if (!hooked)
    return linear(hidden, w.w_fc2, w.b_fc2);

  ctx->input(ids->fc2, 0, hidden);
  Tensor out = ctx->linear(ids->fc2, hidden, w.w_fc2, w.b_fc2);
  ctx->output(ids->fc2, out);
  return out;
}

Tensor block_forward(const Tensor &x, const BlockWeights &w, std::size_t heads, ForwardContext *ctx,
                     const BlockLayerIds *ids)
{
  Tensor y = mhsa_forward(layer_norm(x, w.ln1_gamma, w.ln1_beta), w.attn, heads, ctx, ids);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] += x[i];
  Tensor out = mlp_forward(layer_norm(y, w.ln2_gamma, w.ln2_beta), w.mlp, ctx, ids);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += y[i];
  return out;
}

ForwardResult model_forward(const NetworkSpec &spec, const ModelWeights &weights, const Tensor &input,
                            const ForwardOptions &options)
{
  if (weights.blocks.size() != spec.blocks)
    throw std::invalid_argument("model_forward: weights have " + std::to_string(weights.blocks.size()) +
                                " blocks, spec has " + std::to_string(spec.blocks));
  require_shape(input, {spec.tokens, spec.patch_dim}, "model_forward input");
  require_finite(input.data(), "model_forward input");

  ForwardContext ctx(spec, weights, options);

  Tensor x = ctx.linear(0, input, weights.patch_w, weights.patch_b);

  for (std::size_t b = 0; b < spec.blocks; ++b)
  {
    const auto ids = block_layer_ids(spec, b);
    x = block_forward(x, weights.blocks[b], spec.heads, &ctx, &ids);
  }

  x = layer_norm(x, weights.norm_gamma, weights.norm_beta);
  Tensor pooled({1, spec.embed});
  for (std::size_t n = 0; n < spec.tokens; ++n)
    for (std::size_t c = 0; c < spec.embed; ++c)
      pooled.at(0, c) += x.at(n, c);
  for (auto &v : pooled.values())
    v /= static_cast<double>(spec.tokens);

  Tensor logits = ctx.linear(static_cast<int>(spec.layers.size()) - 1, pooled, weights.head_w, weights.head_b);
  require_finite(logits.data(), "model_forward logits");

  ForwardResult result;
  result.logits = Tensor({spec.classes}, std::move(logits.values()));
  result.taps = ctx.take_taps();
  return result;
}

std::vector<double> output_distribution(std::span<const double> logits)
{
  if (logits.empty())
    throw std::invalid_argument("output_distribution: empty logits");
  require_finite(logits, "output_distribution");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
  {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  const double denom = 1.0 + static_cast<double>(logits.size()) * kProbabilityFloor;
  for (auto &v : p)
    v = (v / sum + kProbabilityFloor) / denom;
  return p;
}

Tensor unfold_patches(const Tensor &image, std::size_t patch)
{
  if (image.rank() != 3 || patch == 0 || image.dim(1) % patch != 0 || image.dim(2) % patch != 0)
    throw std::invalid_argument("unfold_patches: image must be [C, H, W] with H, W divisible by patch");
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const std::size_t ph = H / patch, pw = W / patch;
  Tensor out({ph * pw, C * patch * patch});
  for (std::size_t py = 0; py < ph; ++py)
    for (std::size_t px = 0; px < pw; ++px)
    {
      const std::size_t row = py * pw + px;
      std::size_t col = 0;
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t dy = 0; dy < patch; ++dy)
          for (std::size_t dx = 0; dx < patch; ++dx)
            out.at(row, col++) = image[(c * H + py * patch + dy) * W + px * patch + dx];
    }
  return out;
}

} // namespace mixq
