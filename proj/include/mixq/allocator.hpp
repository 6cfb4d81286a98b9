#pragma once

#include "mixq/importance.hpp"
#include "mixq/profiler.hpp"
#include "mixq/synergy.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mixq
{

/// How the bit-transition penalty is weighted.
enum class BtrMode
{
  Synergy,        ///< weights are the stabilized synergy scores
  Independent,    ///< every adjacent pair weighted 1
  ImportanceOnly, ///< no transition penalty (lambda = 0)
};

const char *to_string(BtrMode mode);
BtrMode btr_mode_from_string(const std::string &name);

inline const std::vector<int> kDefaultBitSet{4, 5, 6, 7, 8};
inline constexpr double kDefaultLambda = 0.1;

struct AllocationProblem
{
  std::vector<int> layer_ids;
  std::vector<int> bit_set; ///< ascending, unique
  std::vector<double> omega;
  std::vector<double> s_hat; ///< length L - 1
  std::vector<std::int64_t> w_count;
  std::vector<std::int64_t> macs;
  std::int64_t size_budget = 0;
  std::int64_t bitops_budget = 0;
  double lambda = kDefaultLambda;

  std::size_t layers() const { return omega.size(); }
  void validate() const;
};

struct BitAllocation
{
  std::vector<int> bits;
  double objective = 0.0;
  std::int64_t size_bits = 0;
  std::int64_t bitops = 0;
  bool feasible = false;
  std::uint64_t nodes = 0; ///< search nodes visited
};

struct FeasibilityReport
{
  bool feasible = false;
  bool bits_valid = false;
  std::int64_t size_bits = 0;
  std::int64_t bitops = 0;
  double objective = 0.0;
  std::int64_t size_slack = 0;   ///< budget - used; negative when violated
  std::int64_t bitops_slack = 0;
  std::vector<std::string> findings;
};

/// Importance-weighted bits minus lambda * sum of s_hat * |b_l - b_m|.
double objective(const AllocationProblem &problem, std::span<const int> bits);

/// Realized transition penalty sum of s_hat * |b_l - b_m| (without lambda).
double transition_penalty(const AllocationProblem &problem, std::span<const int> bits);

std::int64_t allocation_size_bits(const AllocationProblem &problem, std::span<const int> bits);
std::int64_t allocation_bitops(const AllocationProblem &problem, std::span<const int> bits);

/**
 * Budgets are the cost of running every layer at `target_bits`, so a mixed
 * allocation never exceeds the uniform baseline.
 */
AllocationProblem build_problem(const ImportanceProfile &importance, const SynergyProfile &synergy,
                                const LayerStats &stats, int target_bits,
                                std::vector<int> bit_set = kDefaultBitSet,
                                double lambda = kDefaultLambda, BtrMode mode = BtrMode::Synergy);

/// Exhaustive search; refuses instances with more than 1e7 assignments.
BitAllocation solve_bruteforce(const AllocationProblem &problem);

/// Exact depth-first branch-and-bound.
BitAllocation solve_bnb(const AllocationProblem &problem);

FeasibilityReport verify_allocation(const AllocationProblem &problem, const BitAllocation &allocation);

/// CPLEX LP text with one-hot binaries and a linearized absolute value per pair.
std::string export_lp(const AllocationProblem &problem);

} // namespace mixq
