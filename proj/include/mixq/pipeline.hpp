#pragma once

#include "mixq/allocator.hpp"
#include "mixq/importance.hpp"
#include "mixq/io.hpp"
#include "mixq/profiler.hpp"
#include "mixq/synergy.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mixq
{

/// Calibration images used for activation ranges when evaluating allocations.
inline constexpr std::size_t kCalibrationImages = 32;
inline constexpr std::size_t kDefaultProfileImages = 64;

/// Seeds of the synthetic streams derived from one user seed.
struct SeedPlan
{
  std::uint64_t weights;
  std::uint64_t profile_data;
  std::uint64_t calibration_data;
  std::uint64_t eval_data;

  static SeedPlan from(std::uint64_t seed) { return {seed, seed + 1, seed + 2, seed + 3}; }
};

/// Where the model weights came from; recorded so later stages can rebuild them.
struct WeightSource
{
  std::optional<std::uint64_t> seed;
  std::string path;
  std::string hash; ///< fnv1a of the weight file bytes, when loaded from disk
};

struct ProfileDocument
{
  std::string spec_hash;
  NetworkSpec spec;
  ImportanceProfile importance;
  SynergyProfile synergy;
  LayerStats stats;
  std::uint64_t seed = 0;
  WeightSource weights;
  std::string created;
};

struct AllocationDocument
{
  std::string spec_hash;
  BtrMode mode = BtrMode::Synergy;
  int target_bits = 6;
  std::vector<int> bit_set;
  double lambda = kDefaultLambda;
  std::vector<int> layer_ids;
  BitAllocation allocation;
  std::int64_t size_budget = 0;
  std::int64_t bitops_budget = 0;
  std::uint64_t seed = 0;
  WeightSource weights;
};

/// Observed activation statistics for one operand of a quantizable layer.
struct OperandStats
{
  double min = 0.0;
  double max = 0.0;
  std::vector<double> samples; ///< kept only for logarithmically quantized operands
};

using CalibrationStats = std::map<int, std::vector<OperandStats>>;

struct EvaluationRow
{
  std::string label;
  std::vector<int> bits; ///< empty for the full-precision row
  double mean_kl = 0.0;
  double mean_mse = 0.0;
  std::int64_t size_bits = 0;
  std::int64_t bitops = 0;
};

struct EvaluationReport
{
  std::string spec_hash;
  std::size_t calibration_images = 0;
  std::size_t eval_images = 0;
  std::vector<EvaluationRow> rows;
};

/// True when operand `operand` of `kind` uses the logarithmic quantizer.
bool uses_log_quantizer(LayerKind kind, std::size_t operand);

CalibrationStats collect_calibration(const NetworkSpec &spec, const ModelWeights &weights,
                                     std::span<const Tensor> images);

/**
 * Per-channel weight params and per-tensor activation params for every
 * quantizable layer at the given bit-widths (ordered as quantizable_ids()).
 */
QuantConfig make_quant_config(const NetworkSpec &spec, const ModelWeights &weights,
                              const CalibrationStats &calibration, std::span<const int> bits);

/// Full-precision row first, then one row per labelled allocation.
EvaluationReport evaluate_allocations(const NetworkSpec &spec, const ModelWeights &weights,
                                      std::span<const Tensor> calibration_images,
                                      std::span<const Tensor> eval_images,
                                      const std::vector<std::pair<std::string, std::vector<int>>> &configs);

ProfileDocument run_profile(const NetworkSpec &spec, const ModelWeights &weights, std::span<const Tensor> images,
                            std::uint64_t seed, WeightSource source, double epsilon = kDefaultSynergyEpsilon);

AllocationDocument run_allocate(const ProfileDocument &profile, int target_bits,
                                std::vector<int> bit_set = kDefaultBitSet, double lambda = kDefaultLambda,
                                BtrMode mode = BtrMode::Synergy);

/// Solves an already built problem and records it with the profile's provenance.
AllocationDocument solve_allocation(const ProfileDocument &profile, const AllocationProblem &problem, int target_bits,
                                    BtrMode mode);

/// Problem as built by run_allocate, for export or inspection.
AllocationProblem allocation_problem(const ProfileDocument &profile, int target_bits, std::vector<int> bit_set,
                                     double lambda, BtrMode mode);

nlohmann::json to_json(const ProfileDocument &doc);
ProfileDocument profile_from_json(const nlohmann::json &j);
nlohmann::json to_json(const AllocationDocument &doc);
AllocationDocument allocation_from_json(const nlohmann::json &j);
nlohmann::json to_json(const EvaluationReport &report);
EvaluationReport report_from_json(const nlohmann::json &j);

/// Aligned plain-text table.
std::string format_report(const EvaluationReport &report);
std::string format_allocation(const AllocationDocument &doc);
std::string format_profile(const ProfileDocument &doc);

/// UTC timestamp, ISO 8601.
std::string utc_timestamp();

} // namespace mixq
