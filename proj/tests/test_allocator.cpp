#include "mixq/allocator.hpp"
#include "instances.hpp"

#include <doctest.h>

#include <cmath>

using namespace mixq;

TEST_CASE("objective worked examples")
{
  auto p = oracle::two_layer_example(0.0);
  const std::vector<int> b{8, 4};
  CHECK(objective(p, b) == doctest::Approx(7.2).epsilon(1e-15));
  p.lambda = 1.0;
  CHECK(objective(p, b) == doctest::Approx(3.2).epsilon(1e-15));
  CHECK(transition_penalty(p, b) == 4.0);
  const std::vector<int> flat{8, 8};
  CHECK(transition_penalty(p, flat) == 0.0);
  CHECK_THROWS_AS(objective(p, std::vector<int>{8, 5}), std::invalid_argument);
  CHECK_THROWS_AS(objective(p, std::vector<int>{8}), std::invalid_argument);
}

TEST_CASE("two-layer example resolves by enumeration and branch-and-bound")
{
  for (auto solve : {solve_bruteforce, solve_bnb})
  {
    const auto a = solve(oracle::two_layer_example(0.0));
    CHECK(a.feasible);
    CHECK(a.bits == std::vector<int>{8, 4});
    CHECK(a.objective == doctest::Approx(7.2).epsilon(1e-15));
    const auto c = solve(oracle::two_layer_example(1.0));
    CHECK(c.bits == std::vector<int>{4, 4});
    CHECK(c.objective == doctest::Approx(4.0).epsilon(1e-15));
  }
}

TEST_CASE("budgets below the all-min cost are infeasible")
{
  auto p = oracle::two_layer_example(0.0);
  p.size_budget = 799;
  for (auto solve : {solve_bruteforce, solve_bnb})
  {
    const auto a = solve(p);
    CHECK_FALSE(a.feasible);
    CHECK(a.bits.empty());
  }
}

TEST_CASE("build_problem budgets equal the uniform baseline")
{
  ImportanceProfile imp;
  imp.layer_ids = {3, 4};
  imp.omega = {0.8, 0.2};
  SynergyProfile syn;
  syn.s_hat = {2.0};
  syn.pairs = {{0, 1}};
  LayerStats stats;
  stats.layer_ids = {3, 4};
  stats.w_count = {100, 100};
  stats.macs = {100, 100};
  const auto p = build_problem(imp, syn, stats, 6);
  CHECK(p.size_budget == 1200);
  CHECK(p.bitops_budget == 7200);
  CHECK(p.s_hat == std::vector<double>{2.0});
  CHECK(p.lambda == kDefaultLambda);
  const auto ind = build_problem(imp, syn, stats, 6, kDefaultBitSet, 0.3, BtrMode::Independent);
  CHECK(ind.s_hat == std::vector<double>{1.0});
  CHECK(ind.lambda == 0.3);
  CHECK(build_problem(imp, syn, stats, 6, kDefaultBitSet, 0.3, BtrMode::ImportanceOnly).lambda == 0.0);
  CHECK_THROWS_AS(build_problem(imp, syn, stats, 9), std::invalid_argument);
  CHECK_THROWS_AS(build_problem(imp, syn, stats, 3), std::invalid_argument);
  stats.layer_ids = {3, 5};
  CHECK_THROWS_AS(build_problem(imp, syn, stats, 6), std::invalid_argument);

  // Uniform target allocation sits exactly on both budgets.
  BitAllocation uniform{{6, 6}, objective(p, std::vector<int>{6, 6}), 1200, 7200, true, 0};
  const auto r = verify_allocation(p, uniform);
  CHECK(r.feasible);
  CHECK(r.size_slack == 0);
  CHECK(r.bitops_slack == 0);
  CHECK(r.findings.empty());
}

TEST_CASE("target at max(B) with lambda 0 puts every layer at max(B)")
{
  oracle::SplitMix rng{4};
  auto p = oracle::random_problem(rng, 6, 3);
  p.lambda = 0.0;
  std::vector<int> top(6, p.bit_set.back());
  p.size_budget = allocation_size_bits(p, top);
  p.bitops_budget = allocation_bitops(p, top);
  CHECK(solve_bnb(p).bits == top);
}

TEST_CASE("a large uniform penalty yields the highest feasible uniform assignment")
{
  oracle::SplitMix rng{5};
  for (int i = 0; i < 20; ++i)
  {
    auto p = oracle::random_problem(rng, 5, 3);
    std::fill(p.s_hat.begin(), p.s_hat.end(), 1.0);
    p.lambda = 1e3;
    const auto a = solve_bnb(p);
    const auto e = oracle::exhaustive(p);
    REQUIRE(a.feasible);
    CHECK(a.bits == e.bits);
    // The highest uniform level that fits is optimal when transitions are prohibitively expensive.
    int best_uniform = -1;
    for (int b : p.bit_set)
    {
      const std::vector<int> u(5, b);
      if (allocation_size_bits(p, u) <= p.size_budget && allocation_bitops(p, u) <= p.bitops_budget)
        best_uniform = b;
    }
    if (best_uniform > 0 && std::adjacent_find(a.bits.begin(), a.bits.end(), std::not_equal_to<>()) == a.bits.end())
      CHECK(a.bits.front() == best_uniform);
  }
}

TEST_CASE("solvers agree with the independent enumerator")
{
  oracle::SplitMix rng{77};
  for (int i = 0; i < 150; ++i)
  {
    const std::size_t L = 1 + static_cast<std::size_t>(rng.below(7));
    const std::size_t K = 1 + static_cast<std::size_t>(rng.below(3));
    const auto p = oracle::random_problem(rng, L, K, rng.below(10) != 0);
    const auto e = oracle::exhaustive(p);
    const auto bf = solve_bruteforce(p);
    const auto bb = solve_bnb(p);
    REQUIRE(bf.feasible == e.feasible);
    REQUIRE(bb.feasible == e.feasible);
    if (!e.feasible)
      continue;
    CHECK(bf.bits == e.bits);
    CHECK(bb.bits == bf.bits);
    CHECK(bb.objective == bf.objective);
    CHECK(bf.objective == doctest::Approx(e.objective).epsilon(1e-12));
    CHECK(verify_allocation(p, bb).feasible);
    CHECK(verify_allocation(p, bb).findings.empty());
  }
}

TEST_CASE("dominance over the uniform target and scale invariance")
{
  oracle::SplitMix rng{6};
  for (int i = 0; i < 30; ++i)
  {
    auto p = oracle::random_problem(rng, 6, 3);
    const int t = p.bit_set[1];
    const std::vector<int> uniform(6, t);
    p.size_budget = allocation_size_bits(p, uniform);
    p.bitops_budget = allocation_bitops(p, uniform);
    const auto a = solve_bnb(p);
    REQUIRE(a.feasible);
    CHECK(a.objective >= objective(p, uniform));

    auto scaled = p;
    for (auto &w : scaled.omega)
      w *= 4.0;
    scaled.lambda *= 4.0;
    CHECK(solve_bnb(scaled).bits == a.bits);
  }
}

TEST_CASE("realized penalty does not increase with lambda")
{
  oracle::SplitMix rng{12};
  for (int i = 0; i < 30; ++i)
  {
    auto p = oracle::random_problem(rng, 7, 3);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.05, 0.1, 0.5, 1.0, 5.0})
    {
      p.lambda = lambda;
      const auto a = solve_bnb(p);
      REQUIRE(a.feasible);
      const double pen = transition_penalty(p, a.bits);
      CHECK(pen <= previous + 1e-12);
      previous = pen;
    }
  }
}

TEST_CASE("verify_allocation flags violations and stale fields")
{
  const auto p = oracle::two_layer_example(0.0);
  BitAllocation over{{8, 8}, 8.0, 1600, 12800, true, 0};
  const auto r = verify_allocation(p, over);
  CHECK_FALSE(r.feasible);
  CHECK(r.size_slack == -400);
  CHECK(r.bitops_slack == -4800);
  CHECK_FALSE(r.findings.empty());

  BitAllocation bad{{8, 5}, 0.0, 0, 0, true, 0};
  CHECK_FALSE(verify_allocation(p, bad).bits_valid);
}

TEST_CASE("brute force refuses oversized instances")
{
  oracle::SplitMix rng{3};
  const auto p = oracle::random_problem(rng, 11, 5);
  CHECK_THROWS_AS(solve_bruteforce(p), std::length_error);
}

TEST_CASE("problem validation")
{
  auto p = oracle::two_layer_example(0.0);
  p.bit_set = {8, 4};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = oracle::two_layer_example(-1.0);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = oracle::two_layer_example(0.0);
  p.s_hat = {};
  CHECK_THROWS_AS(solve_bnb(p), std::invalid_argument);
}

TEST_CASE("mode names round-trip")
{
  for (auto m : {BtrMode::Synergy, BtrMode::Independent, BtrMode::ImportanceOnly})
    CHECK(btr_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(btr_mode_from_string("greedy"), std::invalid_argument);
}

TEST_CASE("LP export lists every variable and constraint")
{
  const auto lp = export_lp(oracle::two_layer_example(1.0));
  CHECK(lp.find("Maximize") != std::string::npos);
  CHECK(lp.find("Subject To") != std::string::npos);
  CHECK(lp.find("Binary") != std::string::npos);
  CHECK(lp.find("End") != std::string::npos);
  for (const char *name : {"a_0_0", "a_0_1", "a_1_0", "a_1_1", "dp_0", "dm_0"})
    CHECK(lp.find(name) != std::string::npos);
  CHECK(lp.find("<= 1200") != std::string::npos);
  CHECK(lp.find("<= 8000") != std::string::npos);
}
