#include "mixq/io.hpp"
#include "mixq/rng.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mixq;

namespace
{

std::string temp_path(const std::string &name)
{
  return (std::filesystem::temp_directory_path() / ("mixq_test_io_" + name)).string();
}

} // namespace

TEST_CASE("MXQT byte layout")
{
  const Tensor t({2}, std::vector<double>{1.0, -2.5});
  std::ostringstream os;
  write_tensor(os, t);
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 4 + 4 + 4 + 8);
  CHECK(bytes.substr(0, 4) == "MXQT");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);
  float f;
  std::memcpy(&f, bytes.data() + 16, 4);
  CHECK(f == -2.5f);
  std::istringstream is(bytes);
  CHECK(read_tensor(is) == t);
}

TEST_CASE("MXQT rejects malformed records")
{
  std::istringstream bad_magic(std::string("MXQX\1\0\0\0\1\0\0\0\0\0\0\0", 16));
  CHECK_THROWS_AS(read_tensor(bad_magic), ParseError);
  std::istringstream truncated(std::string("MXQT\1\0\0\0\4\0\0\0\0\0", 14));
  CHECK_THROWS_AS(read_tensor(truncated), ParseError);
  std::istringstream huge_rank(std::string("MXQT\xff\0\0\0", 8));
  CHECK_THROWS_AS(read_tensor(huge_rank), ParseError);
  CHECK_THROWS_AS(load_tensors(temp_path("does_not_exist")), ParseError);
}

TEST_CASE("weights round-trip exactly through a file")
{
  const auto spec = make_network_spec(2, 5, 12, 8, 2, 16, 4);
  const auto w = init_weights(spec, 3);
  const auto path = temp_path("weights.mxqt");
  save_weights(path, w);
  const auto back = load_weights(path, spec);
  const auto a = w.tensors(), b = back.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(*a[i] == *b[i]);

  const auto other = make_network_spec(2, 5, 12, 8, 2, 32, 4);
  CHECK_THROWS_AS(load_weights(path, other), ParseError);
  CHECK_THROWS_AS(load_weights(path, make_network_spec(3, 5, 12, 8, 2, 16, 4)), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("batches round-trip exactly")
{
  const auto batch = generate_synthetic(4, 3, {5, 6});
  const auto path = temp_path("batch.mxqt");
  save_batch(path, batch);
  const auto back = load_batch(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(back[i] == batch[i]);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(save_batch(path, {}), std::invalid_argument);
}

TEST_CASE("spec JSON round-trip and validation")
{
  const auto spec = default_network_spec();
  const auto j = spec_to_json(spec);
  CHECK(j.at("format_version") == kFormatVersion);
  const auto back = spec_from_json(j);
  CHECK(spec_hash(back) == spec_hash(spec));
  CHECK(back.quantizable_ids() == spec.quantizable_ids());

  auto minimal = j;
  minimal.erase("layers");
  CHECK(spec_hash(spec_from_json(minimal)) == spec_hash(spec));

  auto wrong_version = j;
  wrong_version["format_version"] = 99;
  CHECK_THROWS_AS(spec_from_json(wrong_version), ParseError);

  auto missing = j;
  missing.erase("embed");
  CHECK_THROWS_AS(spec_from_json(missing), ParseError);

  auto bad_heads = minimal;
  bad_heads["heads"] = 5;
  CHECK_THROWS_AS(spec_from_json(bad_heads), ParseError);

  auto first_quantized = j;
  first_quantized["layers"][0]["quantizable"] = true;
  CHECK_THROWS_AS(spec_from_json(first_quantized), ParseError);

  auto ln_quantized = j;
  ln_quantized["layers"][1]["quantizable"] = true;
  CHECK_THROWS_AS(spec_from_json(ln_quantized), ParseError);

  // Opting a layer out of quantization changes the hash.
  auto fewer = j;
  fewer["layers"][2]["quantizable"] = false;
  const auto reduced = spec_from_json(fewer);
  CHECK(reduced.quantizable_ids().size() == spec.quantizable_ids().size() - 1);
  CHECK(spec_hash(reduced) != spec_hash(spec));
}

TEST_CASE("fnv1a reference values")
{
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("JSON files")
{
  const auto path = temp_path("doc.json");
  write_json_file(path, {{"format_version", 1}, {"x", 2}});
  CHECK(read_json_file(path).at("x") == 2);
  {
    std::ofstream os(path);
    os << "{ not json";
  }
  CHECK_THROWS_AS(read_json_file(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("synthetic generator")
{
  const auto a = generate_synthetic(0, 2, {3, 4});
  const auto b = generate_synthetic(0, 2, {3, 4});
  CHECK(a == b);
  CHECK_FALSE(generate_synthetic(1, 2, {3, 4}) == a);
  const auto big = generate_synthetic(5, 1, {200000})[0];
  double mean = 0, var = 0;
  for (double v : big.values())
    mean += v;
  mean /= static_cast<double>(big.size());
  for (double v : big.values())
    var += (v - mean) * (v - mean);
  var /= static_cast<double>(big.size());
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);

  Rng r(42);
  const auto first = r.next();
  CHECK(first == std::mt19937_64(42)());
}
