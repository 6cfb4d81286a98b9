#pragma once

#include "mixq/nn.hpp"

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixq
{

/// Version written into every JSON document.
inline constexpr int kFormatVersion = 1;

/// Malformed or inconsistent input files.
class ParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Binary tensors: "MXQT", u32 rank, u32 dims[rank], f32 payload, little endian.
void write_tensor(std::ostream &os, const Tensor &t);
Tensor read_tensor(std::istream &is);

void save_tensors(const std::string &path, const std::vector<const Tensor *> &tensors);
std::vector<Tensor> load_tensors(const std::string &path);

/// Weight file: one MXQT record per tensor in canonical order.
void save_weights(const std::string &path, const ModelWeights &weights);
ModelWeights load_weights(const std::string &path, const NetworkSpec &spec);

/// Calibration/eval data file: a single [T, tokens, patch_dim] tensor.
void save_batch(const std::string &path, const std::vector<Tensor> &batch);
std::vector<Tensor> load_batch(const std::string &path);

nlohmann::json spec_to_json(const NetworkSpec &spec);
NetworkSpec spec_from_json(const nlohmann::json &j);

/// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string &bytes);
std::string spec_hash(const NetworkSpec &spec);

nlohmann::json read_json_file(const std::string &path);
void write_json_file(const std::string &path, const nlohmann::json &j);
std::string read_text_file(const std::string &path);

} // namespace mixq
