#include "mixq/quant.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mixq;

namespace
{

Tensor vec(std::vector<double> v)
{
  const auto n = v.size();
  return Tensor({n}, std::move(v));
}

AffineParams per_tensor(double scale, std::int64_t zp, int bits)
{
  AffineParams p;
  p.scale = {scale};
  p.zero_point = {zp};
  p.bits = bits;
  return p;
}

} // namespace

TEST_CASE("calibrate_uniform: worked examples")
{
  auto p = calibrate_uniform(vec({0.0, 1.0, 2.0, 3.0}), 2);
  CHECK(p.scale[0] == doctest::Approx(1.0));
  CHECK(p.zero_point[0] == 0);

  p = calibrate_uniform(vec({-1.0, -0.3, 0.2, 1.0}), 8);
  CHECK(p.scale[0] == doctest::Approx(2.0 / 255.0).epsilon(1e-15));
  CHECK(p.zero_point[0] == 128);
}

TEST_CASE("calibrate_uniform: constant input uses scale 1 and reproduces the value")
{
  const auto x = vec({5.0, 5.0, 5.0});
  const auto p = calibrate_uniform(x, 8);
  CHECK(p.scale[0] == 1.0);
  CHECK(p.zero_point[0] == 0);
  const auto y = fake_quant(x, p);
  for (double v : y.values())
    CHECK(v == 5.0);

  const auto neg = calibrate_uniform(vec({-3.0, -3.0}), 4);
  CHECK(neg.zero_point[0] == 3);
  CHECK(fake_quant(vec({-3.0}), neg)[0] == -3.0);
}

TEST_CASE("calibrate_uniform: rejects bad input")
{
  CHECK_THROWS_AS(calibrate_uniform(Tensor({0}), 8), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_uniform(vec({0.0, 1.0}), 1), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_uniform(vec({0.0, 1.0}), 17), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_uniform(vec({0.0, std::nan("")}), 8), std::domain_error);
  CHECK_THROWS_AS(calibrate_uniform(vec({0.0, INFINITY}), 8), std::domain_error);
}

TEST_CASE("quantize_uniform: worked examples")
{
  CHECK(quantize_uniform(vec({1.4}), per_tensor(1.0, 0, 2)).codes[0] == 1);
  CHECK(quantize_uniform(vec({100.0}), per_tensor(1.0, 0, 2)).codes[0] == 3);
  CHECK(quantize_uniform(vec({-0.5}), per_tensor(2.0 / 255.0, 128, 8)).codes[0] == 64);
  // Half-way cases round away from zero.
  CHECK(quantize_uniform(vec({2.5}), per_tensor(1.0, 0, 4)).codes[0] == 3);
  CHECK(quantize_uniform(vec({-2.5}), per_tensor(1.0, 8, 4)).codes[0] == 5);
  CHECK_THROWS_AS(quantize_uniform(vec({std::nan("")}), per_tensor(1.0, 0, 4)), std::domain_error);
}

TEST_CASE("dequantize_uniform: worked examples and range errors")
{
  CHECK(dequantize_uniform({{1}, {1}}, per_tensor(1.0, 0, 2))[0] == 1.0);
  CHECK(dequantize_uniform({{1}, {128}}, per_tensor(2.0 / 255.0, 128, 8))[0] == 0.0);
  CHECK_THROWS_AS(dequantize_uniform({{1}, {4}}, per_tensor(1.0, 0, 2)), std::out_of_range);
  CHECK_THROWS_AS(dequantize_uniform({{1}, {-1}}, per_tensor(1.0, 0, 2)), std::out_of_range);
}

TEST_CASE("AffineParams validation")
{
  CHECK_THROWS_AS(per_tensor(0.0, 0, 8).validate(), std::invalid_argument);
  CHECK_THROWS_AS(per_tensor(1.0, 256, 8).validate(), std::invalid_argument);
  CHECK_NOTHROW(per_tensor(1.0, 255, 8).validate());
}

TEST_CASE("uniform round-trip bound, monotonicity and code range")
{
  oracle::SplitMix rng{11};
  for (int bits : {2, 3, 4, 6, 8, 12, 16})
  {
    const double lo = rng.uniform(-3.0, 0.5), hi = lo + rng.uniform(0.1, 4.0);
    Tensor x({2000});
    for (auto &v : x.values())
      v = rng.uniform(lo, hi);
    x[0] = lo;
    x[1] = hi;
    const auto p = calibrate_uniform(x, bits);
    const auto q = quantize_uniform(x, p);
    const auto y = dequantize_uniform(q, p);
    for (std::size_t i = 0; i < x.size(); ++i)
    {
      CHECK(q.codes[i] >= 0);
      CHECK(q.codes[i] <= p.qmax());
      CHECK(std::abs(y[i] - x[i]) <= p.scale[0] / 2 + 1e-9);
    }
    std::vector<double> sorted = x.values();
    std::sort(sorted.begin(), sorted.end());
    const auto qs = quantize_uniform(Tensor({sorted.size()}, sorted), p);
    CHECK(std::is_sorted(qs.codes.begin(), qs.codes.end()));
  }
}

TEST_CASE("fake_quant: zero is exact and codebook values are fixed points")
{
  oracle::SplitMix rng{3};
  for (int bits : {2, 5, 8})
  {
    const auto p = affine_from_range(rng.uniform(-2, -0.1), rng.uniform(0.1, 2), bits);
    CHECK(fake_quant(vec({0.0}), p)[0] == 0.0);
    for (std::int64_t k = 0; k <= p.qmax(); ++k)
    {
      const double v = p.scale[0] * static_cast<double>(k - p.zero_point[0]);
      CHECK(fake_quant(vec({v}), p)[0] == v);
    }
  }
}

TEST_CASE("per-channel calibration along axis 0")
{
  Tensor w({2, 3}, std::vector<double>{-1, 0, 1, 0, 2, 4});
  const auto p = calibrate_uniform(w, 4, Granularity::PerChannel, 0);
  REQUIRE(p.channels() == 2);
  CHECK(p.scale[0] == doctest::Approx(2.0 / 15));
  CHECK(p.scale[1] == doctest::Approx(4.0 / 15));
  CHECK(p.zero_point[1] == 0);
  const auto q = quantize_uniform(w, p);
  CHECK(q.codes[5] == 15);

  // Identical channels give the per-tensor parameters replicated.
  Tensor same({3, 4});
  oracle::SplitMix rng{9};
  for (std::size_t c = 0; c < 4; ++c)
  {
    const double v = rng.uniform(-1, 1);
    for (std::size_t r = 0; r < 3; ++r)
      same.at(r, c) = v;
  }
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      same.at(r, c) = same.at(0, c);
  const auto pc = calibrate_uniform(same, 6, Granularity::PerChannel, 0);
  const auto pt = calibrate_uniform(Tensor({4}, std::vector<double>(same.row(0).begin(), same.row(0).end())), 6);
  for (std::size_t r = 0; r < 3; ++r)
  {
    CHECK(pc.scale[r] == pt.scale[0]);
    CHECK(pc.zero_point[r] == pt.zero_point[0]);
  }

  AffineParams wrong = pc;
  CHECK_THROWS_AS(quantize_uniform(Tensor({4, 4}), wrong), std::invalid_argument);
}

TEST_CASE("quantize_log: worked examples")
{
  CHECK(log_code(0.25, {1.0, 2.0, 4}) == 2);
  CHECK(log_code(0.5, {1.0, std::sqrt(2.0), 4}) == 2);
  CHECK(log_code(0.0, {1.0, 2.0, 4}) == 15);
  CHECK(log_code(0.0, {1.0, 2.0, 3}) == 7);
  CHECK(log_code(4.0, {1.0, 2.0, 4}) == 0); // above scale clips to code 0
  CHECK(log_code(1e-30, {1.0, 2.0, 4}) == 15);
  CHECK_THROWS_AS(log_code(-0.1, {1.0, 2.0, 4}), std::domain_error);
  CHECK_THROWS_AS(quantize_log(vec({0.5, -1e-9}), {1.0, 2.0, 4}), std::domain_error);
}

TEST_CASE("dequantize_log: worked examples")
{
  CHECK(dequantize_log({{1}, {2}}, {1.0, 2.0, 4})[0] == 0.25);
  CHECK(dequantize_log({{1}, {0}}, {0.37, 2.0, 4})[0] == 0.37);
  CHECK(dequantize_log({{1}, {2}}, {1.0, std::sqrt(2.0), 4})[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(dequantize_log({{1}, {16}}, {1.0, 2.0, 4}), std::out_of_range);
  CHECK_THROWS_AS(LogParams({1.0, 1.0, 4}).validate(), std::invalid_argument);
}

TEST_CASE("log codebook is geometric and round-trips")
{
  for (double base : {2.0, std::sqrt(2.0), std::pow(2.0, 0.25)})
  {
    const LogParams p{0.8, base, 4};
    std::vector<double> values;
    for (std::int64_t k = 0; k <= p.qmax(); ++k)
      values.push_back(dequantize_log({{1}, {k}}, p)[0]);
    for (std::size_t k = 1; k < values.size(); ++k)
      CHECK(values[k - 1] / values[k] == doctest::Approx(base).epsilon(1e-12));
    for (std::int64_t k = 0; k <= p.qmax(); ++k)
      CHECK(log_code(values[static_cast<std::size_t>(k)], p) == k);
  }
}

TEST_CASE("search_log_base: exact representability picks the matching base")
{
  const std::vector<double> both{2.0, std::sqrt(2.0)};
  {
    const std::vector<double> s{1.0, 0.5, 0.25, 0.125};
    const auto p = search_log_base(s, 2, both);
    CHECK(p.base == 2.0);
    CHECK(p.scale == 1.0);
    for (double v : s)
      CHECK(dequantize_log({{1}, {log_code(v, p)}}, p)[0] == v);
  }
  {
    const std::vector<double> s{1.0, std::pow(2.0, -0.5), 0.5, std::pow(2.0, -1.5)};
    CHECK(search_log_base(s, 2, both).base == std::sqrt(2.0));
  }
  // With enough codes both bases represent powers of two exactly; the tie goes to the smaller base.
  {
    const std::vector<double> s{1.0, 0.5, 0.25};
    CHECK(search_log_base(s, 4, both).base == std::sqrt(2.0));
  }
  CHECK_THROWS_AS(search_log_base(std::vector<double>{0.5}, 4, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(search_log_base(std::vector<double>{-0.5}, 4), std::domain_error);
}

TEST_CASE("search_log_base agrees with an exhaustive per-candidate error evaluation")
{
  oracle::SplitMix rng{21};
  for (int trial = 0; trial < 20; ++trial)
  {
    // Softmax-like samples: exponentials of random logits, normalized.
    std::vector<double> s(64);
    double tot = 0;
    for (auto &v : s)
      tot += (v = std::exp(rng.uniform(-6, 2)));
    for (auto &v : s)
      v /= tot;
    const int bits = 2 + trial % 4;
    const auto &cands = default_log_bases();
    const double scale = *std::max_element(s.begin(), s.end());
    double best = std::numeric_limits<double>::infinity();
    double best_base = 0;
    for (double base : cands)
    {
      const double qmax = std::pow(2.0, bits) - 1;
      double sse = 0;
      for (double v : s)
      {
        double k = std::round(-std::log(v / scale) / std::log(base));
        k = std::clamp(k, 0.0, qmax);
        const double r = scale * std::pow(base, -k);
        sse += (r - v) * (r - v);
      }
      if (sse < best * (1 - 1e-12))
      {
        best = sse;
        best_base = base;
      }
      else if (std::abs(sse - best) <= 1e-12 * best && base < best_base)
        best_base = base;
    }
    CHECK(search_log_base(s, bits).base == best_base);
  }
}

TEST_CASE("fake_quant_inplace matches fake_quant for both schemes")
{
  oracle::SplitMix rng{5};
  const auto x = oracle::random_tensor(rng, {7, 9});
  const auto ua = calibrate_uniform(x, 5, Granularity::PerChannel, 0);
  Tensor a = x;
  fake_quant_inplace(a, ua);
  CHECK(a == fake_quant(x, ua));

  Tensor pos = x;
  for (auto &v : pos.values())
    v = std::abs(v);
  const LogParams lp{1.0, std::sqrt(2.0), 4};
  Tensor b = pos;
  fake_quant_inplace(b, lp);
  CHECK(b == fake_quant(pos, lp));
  CHECK(b.shape() == pos.shape());
}

TEST_CASE("log base candidates grow finer with the bit-width")
{
  CHECK(log_bases_for_bits(4) == default_log_bases());
  CHECK(log_bases_for_bits(7) == default_log_bases());
  const auto b8 = log_bases_for_bits(8);
  REQUIRE(b8.size() == 4);
  CHECK(b8[3] == std::pow(2.0, 0.125));
  const auto b16 = log_bases_for_bits(16);
  CHECK(b16.size() == 3 + 9);
  // The finest base still spans the required dynamic range.
  CHECK(65535.0 * std::log2(b16.back()) >= kMinLogOctaves);
}
