// mixq: command-line driver for profiling, bit allocation and evaluation.

#include "mixq/pipeline.hpp"
#include "mixq/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

enum ExitCode : int
{
  kOk = 0,
  kFailure = 1,
  kParse = 2,
  kInfeasible = 3,
  kNumerical = 4,
};

/// Raised when the allocator finds no assignment within the budgets.
struct Infeasible : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

mixq::NetworkSpec load_spec(const std::string &path)
{
  if (path.empty())
    return mixq::default_network_spec();
  return mixq::spec_from_json(mixq::read_json_file(path));
}

struct LoadedWeights
{
  mixq::ModelWeights weights;
  mixq::WeightSource source;
};

LoadedWeights load_or_init_weights(const mixq::NetworkSpec &spec, const std::string &path, std::uint64_t seed)
{
  LoadedWeights out;
  if (path.empty())
  {
    out.weights = mixq::init_weights(spec, mixq::SeedPlan::from(seed).weights);
    out.source.seed = seed;
    return out;
  }
  out.weights = mixq::load_weights(path, spec);
  out.source.path = path;
  out.source.hash = mixq::fnv1a_hex(mixq::read_text_file(path));
  return out;
}

std::vector<mixq::Tensor> load_or_generate(const mixq::NetworkSpec &spec, const std::string &path,
                                           std::uint64_t stream_seed, std::size_t count)
{
  if (!path.empty())
  {
    auto batch = mixq::load_batch(path);
    const std::vector<std::size_t> expected{spec.tokens, spec.patch_dim};
    for (const auto &t : batch)
      if (t.shape() != expected)
        throw mixq::ParseError("data file '" + path + "' holds inputs of shape " + mixq::shape_string(t.shape()) +
                               ", spec expects " + mixq::shape_string(expected));
    return batch;
  }
  return mixq::generate_synthetic(stream_seed, count, {spec.tokens, spec.patch_dim});
}

void write_text(const std::string &path, const std::string &text)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os || !(os << text))
    throw std::runtime_error("cannot write '" + path + "'");
}

struct AllocateArgs
{
  std::string profile;
  std::string spec;
  int target_bits = 6;
  std::vector<int> bit_set = mixq::kDefaultBitSet;
  double lambda = mixq::kDefaultLambda;
  std::string mode = "synergy";
  std::optional<std::int64_t> size_budget;
  std::optional<std::int64_t> bitops_budget;
  std::string out;
};

void add_problem_options(CLI::App *cmd, AllocateArgs &a)
{
  cmd->add_option("--profile", a.profile, "Profile JSON written by 'profile'")->required()->check(CLI::ExistingFile);
  cmd->add_option("--spec", a.spec, "Network spec JSON; its hash must match the profile");
  cmd->add_option("--target-bits", a.target_bits, "Uniform bit-width defining the budgets")->capture_default_str();
  cmd->add_option("--bits-set", a.bit_set, "Candidate bit-widths, comma separated")
    ->delimiter(',')
    ->capture_default_str();
  cmd->add_option("--lambda", a.lambda, "Transition penalty weight")->capture_default_str();
  cmd->add_option("--mode", a.mode, "synergy, independent or importance-only")
    ->check(CLI::IsMember({"synergy", "independent", "importance-only"}))
    ->capture_default_str();
  cmd->add_option("--size-budget", a.size_budget, "Model-size budget in bits (default: uniform target cost)")
    ->check(CLI::NonNegativeNumber);
  cmd->add_option("--bitops-budget", a.bitops_budget, "BitOps budget (default: uniform target cost)")
    ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", a.out, "Output file")->required();
}

mixq::ProfileDocument load_profile(const AllocateArgs &a)
{
  auto profile = mixq::profile_from_json(mixq::read_json_file(a.profile));
  if (!a.spec.empty())
  {
    const auto hash = mixq::spec_hash(load_spec(a.spec));
    if (hash != profile.spec_hash)
      throw mixq::ParseError("spec hash " + hash + " does not match profile spec hash " + profile.spec_hash);
  }
  return profile;
}

std::vector<int> sorted_unique(std::vector<int> v)
{
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

mixq::AllocationProblem build(const mixq::ProfileDocument &profile, const AllocateArgs &a)
{
  auto problem = mixq::allocation_problem(profile, a.target_bits, sorted_unique(a.bit_set), a.lambda,
                                          mixq::btr_mode_from_string(a.mode));
  if (a.size_budget)
    problem.size_budget = *a.size_budget;
  if (a.bitops_budget)
    problem.bitops_budget = *a.bitops_budget;
  return problem;
}

int run(int argc, char **argv)
{
  CLI::App app{"Mixed-precision bit allocation for a toy vision transformer"};
  app.require_subcommand(1);

  // profile
  std::string p_spec, p_weights, p_data, p_out;
  std::uint64_t p_seed = 0;
  std::size_t p_images = mixq::kDefaultProfileImages;
  double p_epsilon = mixq::kDefaultSynergyEpsilon;
  auto *profile = app.add_subcommand("profile", "Score layer importance and synergy on calibration inputs");
  profile->add_option("--spec", p_spec, "Network spec JSON (default: built-in toy spec)");
  profile->add_option("--weights", p_weights, "Weight file; initialized from --seed when omitted");
  profile->add_option("--data", p_data, "Input batch file; synthetic inputs when omitted");
  profile->add_option("--images", p_images, "Synthetic images to generate")->check(CLI::PositiveNumber)->capture_default_str();
  profile->add_option("--seed", p_seed, "Seed for weights and synthetic data")->capture_default_str();
  profile->add_option("--epsilon", p_epsilon, "Synergy stabilizer")->check(CLI::PositiveNumber)->capture_default_str();
  profile->add_option("--out", p_out, "Profile JSON to write")->required();

  // allocate
  AllocateArgs alloc;
  auto *allocate = app.add_subcommand("allocate", "Solve the bit allocation for a profile");
  add_problem_options(allocate, alloc);

  // export-lp
  AllocateArgs lp;
  auto *export_lp = app.add_subcommand("export-lp", "Write the allocation problem in CPLEX LP format");
  add_problem_options(export_lp, lp);

  // evaluate
  std::string e_spec, e_weights, e_calibration, e_data, e_out;
  std::vector<std::string> e_allocations;
  std::vector<int> e_uniform;
  std::optional<std::uint64_t> e_seed;
  std::size_t e_images = mixq::kDefaultProfileImages;
  auto *evaluate = app.add_subcommand("evaluate", "Compare fake-quantized configurations against full precision");
  evaluate->add_option("--spec", e_spec, "Network spec JSON (default: built-in toy spec)");
  evaluate->add_option("--weights", e_weights, "Weight file; initialized from the seed when omitted");
  evaluate->add_option("--allocation", e_allocations, "Allocation JSON (repeatable)")->check(CLI::ExistingFile);
  evaluate->add_option("--uniform", e_uniform, "Uniform bit-widths to add as rows, comma separated")->delimiter(',');
  evaluate->add_option("--calibration", e_calibration, "Calibration batch file; synthetic when omitted");
  evaluate->add_option("--data", e_data, "Evaluation batch file; synthetic when omitted");
  evaluate->add_option("--images", e_images, "Synthetic evaluation images")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--seed", e_seed, "Seed for weights and synthetic data (default: the allocation's seed)");
  evaluate->add_option("--out", e_out, "Report JSON to write");

  // report
  std::string r_input;
  auto *report = app.add_subcommand("report", "Print a profile, allocation or evaluation document as text");
  report->add_option("--input", r_input, "Document to print")->required()->check(CLI::ExistingFile);

  // spec
  std::string s_out;
  auto *spec_cmd = app.add_subcommand("spec", "Write the built-in toy network spec");
  spec_cmd->add_option("--out", s_out, "Spec JSON to write")->required();

  // generate
  std::string g_spec, g_out;
  std::uint64_t g_seed = 0;
  std::size_t g_count = 1;
  auto *generate = app.add_subcommand("generate", "Write a batch of synthetic inputs");
  generate->add_option("--spec", g_spec, "Network spec JSON (default: built-in toy spec)");
  generate->add_option("--seed", g_seed, "Generator seed")->capture_default_str();
  generate->add_option("--count", g_count, "Number of inputs")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--out", g_out, "Batch file to write")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  if (*profile)
  {
    const auto spec = load_spec(p_spec);
    auto [weights, source] = load_or_init_weights(spec, p_weights, p_seed);
    const auto images = load_or_generate(spec, p_data, mixq::SeedPlan::from(p_seed).profile_data, p_images);
    const auto doc = mixq::run_profile(spec, weights, images, p_seed, source, p_epsilon);
    mixq::write_json_file(p_out, mixq::to_json(doc));
    std::cout << mixq::format_profile(doc);
    return kOk;
  }

  if (*allocate)
  {
    const auto prof = load_profile(alloc);
    const auto doc =
      mixq::solve_allocation(prof, build(prof, alloc), alloc.target_bits, mixq::btr_mode_from_string(alloc.mode));
    mixq::write_json_file(alloc.out, mixq::to_json(doc));
    std::cout << mixq::format_allocation(doc);
    if (!doc.allocation.feasible)
      throw Infeasible("no bit assignment satisfies size budget " + std::to_string(doc.size_budget) +
                       " and BitOps budget " + std::to_string(doc.bitops_budget));
    return kOk;
  }

  if (*export_lp)
  {
    const auto prof = load_profile(lp);
    const auto problem = build(prof, lp);
    write_text(lp.out, mixq::export_lp(problem));
    std::cout << "wrote " << problem.layers() << "-layer problem to " << lp.out << "\n";
    return kOk;
  }

  if (*evaluate)
  {
    const auto spec = load_spec(e_spec);
    const auto hash = mixq::spec_hash(spec);
    std::vector<std::pair<std::string, std::vector<int>>> configs;
    std::optional<mixq::WeightSource> recorded;
    for (const auto &path : e_allocations)
    {
      const auto doc = mixq::allocation_from_json(mixq::read_json_file(path));
      if (doc.spec_hash != hash)
        throw mixq::ParseError("allocation '" + path + "' was made for spec " + doc.spec_hash + ", not " + hash);
      if (!doc.allocation.feasible)
        throw Infeasible("allocation '" + path + "' is infeasible");
      if (!recorded)
        recorded = doc.weights;
      configs.emplace_back(std::string(mixq::to_string(doc.mode)) + "@" + std::to_string(doc.target_bits),
                           doc.allocation.bits);
    }
    const auto layers = spec.quantizable_ids().size();
    for (int b : e_uniform)
      configs.emplace_back("uniform-" + std::to_string(b), std::vector<int>(layers, b));
    if (configs.empty())
      throw mixq::ParseError("evaluate needs at least one --allocation or --uniform");

    std::uint64_t seed = 0;
    if (e_seed)
      seed = *e_seed;
    else if (recorded && recorded->seed)
      seed = *recorded->seed;
    std::string weight_path = e_weights;
    if (weight_path.empty() && !e_seed && recorded && !recorded->seed)
      weight_path = recorded->path;
    auto [weights, source] = load_or_init_weights(spec, weight_path, seed);
    if (recorded && !recorded->hash.empty() && !source.hash.empty() && recorded->hash != source.hash)
      throw mixq::ParseError("weight file does not match the one used for profiling");

    const auto plan = mixq::SeedPlan::from(seed);
    const auto calibration = load_or_generate(spec, e_calibration, plan.calibration_data, mixq::kCalibrationImages);
    const auto eval = load_or_generate(spec, e_data, plan.eval_data, e_images);
    const auto rep = mixq::evaluate_allocations(spec, weights, calibration, eval, configs);
    if (!e_out.empty())
      mixq::write_json_file(e_out, mixq::to_json(rep));
    std::cout << mixq::format_report(rep);
    return kOk;
  }

  if (*report)
  {
    const auto j = mixq::read_json_file(r_input);
    const auto kind = j.value("kind", std::string{});
    if (kind == "profile")
      std::cout << mixq::format_profile(mixq::profile_from_json(j));
    else if (kind == "allocation")
      std::cout << mixq::format_allocation(mixq::allocation_from_json(j));
    else if (kind == "evaluation")
      std::cout << mixq::format_report(mixq::report_from_json(j));
    else
      throw mixq::ParseError("'" + r_input + "' is not a profile, allocation or evaluation document");
    return kOk;
  }

  if (*spec_cmd)
  {
    mixq::write_json_file(s_out, mixq::spec_to_json(mixq::default_network_spec()));
    return kOk;
  }

  if (*generate)
  {
    const auto spec = load_spec(g_spec);
    mixq::save_batch(g_out, mixq::generate_synthetic(g_seed, g_count, {spec.tokens, spec.patch_dim}));
    return kOk;
  }
  return kFailure;
}

} // namespace

int main(int argc, char **argv)
{
  try
  {
    return run(argc, argv);
  }
  catch (const mixq::ParseError &e)
  {
    std::cerr << "mixq: parse error: " << e.what() << "\n";
    return kParse;
  }
  catch (const Infeasible &e)
  {
    std::cerr << "mixq: infeasible: " << e.what() << "\n";
    return kInfeasible;
  }
  catch (const std::domain_error &e)
  {
    std::cerr << "mixq: numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  catch (const std::invalid_argument &e)
  {
    std::cerr << "mixq: invalid input: " << e.what() << "\n";
    return kParse;
  }
  catch (const std::exception &e)
  {
    std::cerr << "mixq: " << e.what() << "\n";
    return kFailure;
  }
}
