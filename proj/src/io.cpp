#include "mixq/io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mixq
{

namespace
{

constexpr std::array<char, 4> kMagic{'M', 'X', 'Q', 'T'};
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ostream &os, std::uint32_t v)
{
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char *>(b), 4);
}

std::uint32_t get_u32(std::istream &is)
{
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char *>(b), 4))
    throw ParseError("tensor file truncated");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::ifstream open_in(const std::string &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw ParseError("cannot open '" + path + "'");
  return is;
}

std::ofstream open_out(const std::string &path)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot write '" + path + "'");
  return os;
}

} // namespace

void write_tensor(std::ostream &os, const Tensor &t)
{
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape())
    put_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.values())
    put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

Tensor read_tensor(std::istream &is)
{
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw ParseError("not an MXQT tensor record");
  const auto rank = get_u32(is);
  if (rank > kMaxRank)
    throw ParseError("tensor rank " + std::to_string(rank) + " is implausible");
  std::vector<std::size_t> shape(rank);
  for (auto &d : shape)
    d = get_u32(is);
  const auto n = Tensor::element_count(shape);
  std::vector<double> data(n);
  for (auto &v : data)
    v = static_cast<double>(std::bit_cast<float>(get_u32(is)));
  return Tensor(std::move(shape), std::move(data));
}

void save_tensors(const std::string &path, const std::vector<const Tensor *> &tensors)
{
  auto os = open_out(path);
  for (const Tensor *t : tensors)
    write_tensor(os, *t);
  if (!os)
    throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<Tensor> load_tensors(const std::string &path)
{
  auto is = open_in(path);
  std::vector<Tensor> out;
  while (is.peek() != std::char_traits<char>::eof())
    out.push_back(read_tensor(is));
  return out;
}

void save_weights(const std::string &path, const ModelWeights &weights)
{
  save_tensors(path, weights.tensors());
}

ModelWeights load_weights(const std::string &path, const NetworkSpec &spec)
{
  auto tensors = load_tensors(path);
  const auto shapes = weight_shapes(spec);
  if (tensors.size() != shapes.size())
    throw ParseError("weight file holds " + std::to_string(tensors.size()) + " tensors, spec needs " +
                     std::to_string(shapes.size()));
  ModelWeights w;
  w.blocks.resize(spec.blocks);
  auto slots = w.tensors();
  for (std::size_t i = 0; i < slots.size(); ++i)
  {
    if (tensors[i].shape() != shapes[i])
      throw ParseError("weight tensor " + std::to_string(i) + " has shape " + shape_string(tensors[i].shape()) +
                       ", expected " + shape_string(shapes[i]));
    *slots[i] = std::move(tensors[i]);
  }
  return w;
}

void save_batch(const std::string &path, const std::vector<Tensor> &batch)
{
  if (batch.empty())
    throw std::invalid_argument("save_batch: empty batch");
  std::vector<std::size_t> shape{batch.size()};
  shape.insert(shape.end(), batch.front().shape().begin(), batch.front().shape().end());
  std::vector<double> data;
  data.reserve(Tensor::element_count(shape));
  for (const auto &t : batch)
  {
    if (t.shape() != batch.front().shape())
      throw std::invalid_argument("save_batch: ragged batch");
    data.insert(data.end(), t.values().begin(), t.values().end());
  }
  const Tensor packed(std::move(shape), std::move(data));
  save_tensors(path, {&packed});
}

std::vector<Tensor> load_batch(const std::string &path)
{
  auto tensors = load_tensors(path);
  if (tensors.size() != 1 || tensors[0].rank() < 2)
    throw ParseError("data file must hold one tensor of rank >= 2");
  const auto &packed = tensors[0];
  const std::vector<std::size_t> item(packed.shape().begin() + 1, packed.shape().end());
  const auto n = Tensor::element_count(item);
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < packed.dim(0); ++i)
  {
    std::vector<double> data(packed.values().begin() + static_cast<std::ptrdiff_t>(i * n),
                             packed.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    out.emplace_back(item, std::move(data));
  }
  return out;
}

nlohmann::json spec_to_json(const NetworkSpec &spec)
{
  nlohmann::json layers = nlohmann::json::array();
  for (const auto &l : spec.layers)
  {
    layers.push_back({{"id", l.id},
                      {"kind", to_string(l.kind)},
                      {"block", l.block},
                      {"d_in", l.d_in},
                      {"d_out", l.d_out},
                      {"quantizable", l.quantizable}});
  }
  return {{"format_version", kFormatVersion},
          {"blocks", spec.blocks},
          {"tokens", spec.tokens},
          {"patch_dim", spec.patch_dim},
          {"embed", spec.embed},
          {"heads", spec.heads},
          {"mlp_dim", spec.mlp_dim},
          {"classes", spec.classes},
          {"layers", layers}};
}

NetworkSpec spec_from_json(const nlohmann::json &j)
{
  try
  {
    if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion)
      throw ParseError("unsupported spec format_version");
    auto spec = make_network_spec(j.at("blocks").get<std::size_t>(), j.at("tokens").get<std::size_t>(),
                                  j.at("patch_dim").get<std::size_t>(), j.at("embed").get<std::size_t>(),
                                  j.at("heads").get<std::size_t>(), j.at("mlp_dim").get<std::size_t>(),
                                  j.at("classes").get<std::size_t>());
    if (j.contains("layers"))
    {
      const auto &layers = j.at("layers");
      if (!layers.is_array() || layers.size() != spec.layers.size())
        throw ParseError("spec layers do not match the block layout");
      for (std::size_t i = 0; i < layers.size(); ++i)
      {
        auto &l = spec.layers[i];
        const auto &jl = layers[i];
        if (jl.at("id").get<int>() != l.id || layer_kind_from_string(jl.at("kind").get<std::string>()) != l.kind)
          throw ParseError("spec layer " + std::to_string(i) + " does not match the block layout");
        l.quantizable = jl.at("quantizable").get<bool>();
      }
    }
    spec.validate();
    return spec;
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ParseError(std::string("malformed network spec: ") + e.what());
  }
  catch (const std::invalid_argument &e)
  {
    throw ParseError(e.what());
  }
}

std::string fnv1a_hex(const std::string &bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string spec_hash(const NetworkSpec &spec) { return fnv1a_hex(spec_to_json(spec).dump()); }

nlohmann::json read_json_file(const std::string &path)
{
  auto is = open_in(path);
  try
  {
    return nlohmann::json::parse(is);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string &path, const nlohmann::json &j)
{
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

std::string read_text_file(const std::string &path)
{
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace mixq
