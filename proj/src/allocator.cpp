#include "mixq/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mixq
{

const char *to_string(BtrMode mode)
{
  switch (mode)
  {
    case BtrMode::Synergy:
      return "synergy";
    case BtrMode::Independent:
      return "independent";
    case BtrMode::ImportanceOnly:
      return "importance-only";
  }
  return "?";
}

BtrMode btr_mode_from_string(const std::string &name)
{
  if (name == "synergy")
    return BtrMode::Synergy;
  if (name == "independent")
    return BtrMode::Independent;
  if (name == "importance-only")
    return BtrMode::ImportanceOnly;
  throw std::invalid_argument("unknown mode '" + name + "' (expected synergy, independent, importance-only)");
}

void AllocationProblem::validate() const
{
  const std::size_t L = omega.size();
  if (L == 0)
    throw std::invalid_argument("allocation problem has no layers");
  if (w_count.size() != L || macs.size() != L)
    throw std::invalid_argument("allocation problem: per-layer vectors differ in length");
  if (s_hat.size() != L - 1)
    throw std::invalid_argument("allocation problem: expected L-1 synergy values");
  if (!layer_ids.empty() && layer_ids.size() != L)
    throw std::invalid_argument("allocation problem: layer_ids length mismatch");
  if (bit_set.empty())
    throw std::invalid_argument("allocation problem: empty candidate bit set");
  for (std::size_t j = 0; j < bit_set.size(); ++j)
  {
    if (bit_set[j] < 1 || bit_set[j] > 32)
      throw std::invalid_argument("allocation problem: candidate bit-width out of range");
    if (j > 0 && bit_set[j] <= bit_set[j - 1])
      throw std::invalid_argument("allocation problem: bit set must be ascending and unique");
  }
  for (std::size_t l = 0; l < L; ++l)
  {
    if (!std::isfinite(omega[l]))
      throw std::invalid_argument("allocation problem: non-finite importance");
    if (w_count[l] < 0 || macs[l] < 0)
      throw std::invalid_argument("allocation problem: negative layer statistics");
  }
  for (double s : s_hat)
    if (!std::isfinite(s) || s < 0.0)
      throw std::invalid_argument("allocation problem: synergy must be finite and non-negative");
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw std::invalid_argument("allocation problem: lambda must be non-negative");
}

namespace
{

void check_bits(const AllocationProblem &problem, std::span<const int> bits)
{
  if (bits.size() != problem.layers())
    throw std::invalid_argument("bit vector length does not match the problem");
  for (int b : bits)
    if (!std::binary_search(problem.bit_set.begin(), problem.bit_set.end(), b))
      throw std::invalid_argument("bit-width " + std::to_string(b) + " is not a candidate");
}

} // namespace

double transition_penalty(const AllocationProblem &problem, std::span<const int> bits)
{
  check_bits(problem, bits);
  double penalty = 0.0;
  for (std::size_t l = 0; l + 1 < bits.size(); ++l)
    penalty += problem.s_hat[l] * std::abs(bits[l] - bits[l + 1]);
  return penalty;
}

double objective(const AllocationProblem &problem, std::span<const int> bits)
{
  check_bits(problem, bits);
  double gain = 0.0;
  for (std::size_t l = 0; l < bits.size(); ++l)
    gain += problem.omega[l] * bits[l];
  return gain - problem.lambda * transition_penalty(problem, bits);
}

std::int64_t allocation_size_bits(const AllocationProblem &problem, std::span<const int> bits)
{
  std::int64_t total = 0;
  for (std::size_t l = 0; l < bits.size(); ++l)
    total += problem.w_count[l] * bits[l];
  return total;
}

std::int64_t allocation_bitops(const AllocationProblem &problem, std::span<const int> bits)
{
  std::int64_t total = 0;
  for (std::size_t l = 0; l < bits.size(); ++l)
    total += problem.macs[l] * bits[l] * bits[l];
  return total;
}

AllocationProblem build_problem(const ImportanceProfile &importance, const SynergyProfile &synergy,
                                const LayerStats &stats, int target_bits, std::vector<int> bit_set,
                                double lambda, BtrMode mode)
{
  const std::size_t L = stats.size();
  if (importance.omega.size() != L)
    throw std::invalid_argument("build_problem: importance covers " + std::to_string(importance.omega.size()) +
                                " layers, stats cover " + std::to_string(L));
  if (!importance.layer_ids.empty() && importance.layer_ids != stats.layer_ids)
    throw std::invalid_argument("build_problem: importance and stats use different layer orderings");
  if (synergy.s_hat.size() + 1 != L)
    throw std::invalid_argument("build_problem: synergy pair count does not match layer count");

  std::sort(bit_set.begin(), bit_set.end());
  bit_set.erase(std::unique(bit_set.begin(), bit_set.end()), bit_set.end());
  if (bit_set.empty())
    throw std::invalid_argument("build_problem: empty candidate bit set");
  if (target_bits < bit_set.front() || target_bits > bit_set.back())
    throw std::invalid_argument("build_problem: target bit-width outside the candidate range");

  AllocationProblem p;
  p.layer_ids = stats.layer_ids;
  p.bit_set = std::move(bit_set);
  p.omega = importance.omega;
  p.w_count = stats.w_count;
  p.macs = stats.macs;
  p.lambda = lambda;
  switch (mode)
  {
    case BtrMode::Synergy:
      p.s_hat = synergy.s_hat;
      break;
    case BtrMode::Independent:
      p.s_hat.assign(L - 1, 1.0);
      break;
    case BtrMode::ImportanceOnly:
      p.s_hat = synergy.s_hat;
      p.lambda = 0.0;
      break;
  }
  const std::vector<int> uniform(L, target_bits);
  p.size_budget = allocation_size_bits(p, uniform);
  p.bitops_budget = allocation_bitops(p, uniform);
  p.validate();
  return p;
}

namespace
{

bool lex_less(const std::vector<int> &a, const std::vector<int> &b)
{
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

BitAllocation finish(const AllocationProblem &p, std::vector<int> bits, std::uint64_t nodes)
{
  BitAllocation a;
  a.objective = objective(p, bits);
  a.size_bits = allocation_size_bits(p, bits);
  a.bitops = allocation_bitops(p, bits);
  a.feasible = a.size_bits <= p.size_budget && a.bitops <= p.bitops_budget;
  a.bits = std::move(bits);
  a.nodes = nodes;
  return a;
}

BitAllocation infeasible(std::uint64_t nodes)
{
  BitAllocation a;
  a.feasible = false;
  a.objective = -std::numeric_limits<double>::infinity();
  a.nodes = nodes;
  return a;
}

bool min_bits_fit(const AllocationProblem &p)
{
  const std::vector<int> lowest(p.layers(), p.bit_set.front());
  return allocation_size_bits(p, lowest) <= p.size_budget && allocation_bitops(p, lowest) <= p.bitops_budget;
}

} // namespace

BitAllocation solve_bruteforce(const AllocationProblem &problem)
{
  problem.validate();
  const std::size_t L = problem.layers();
  const std::size_t K = problem.bit_set.size();
  double count = 1.0;
  for (std::size_t l = 0; l < L; ++l)
    count *= static_cast<double>(K);
  if (count > 1e7)
    throw std::length_error("solve_bruteforce: " + std::to_string(K) + "^" + std::to_string(L) +
                            " assignments exceed the enumeration guard");
  if (!min_bits_fit(problem))
    return infeasible(0);

  // Index n encodes the assignment in base K with layer 0 most significant,
  // so assignments are visited in ascending lexicographic order.
  const auto total = static_cast<std::uint64_t>(count);
  std::vector<int> bits(L);
  std::vector<int> best;
  double best_phi = -std::numeric_limits<double>::infinity();
  std::uint64_t visited = 0;
  for (std::uint64_t n = 0; n < total; ++n)
  {
    ++visited;
    std::uint64_t rest = n;
    for (std::size_t l = L; l-- > 0;)
    {
      bits[l] = problem.bit_set[rest % K];
      rest /= K;
    }
    if (allocation_size_bits(problem, bits) > problem.size_budget ||
        allocation_bitops(problem, bits) > problem.bitops_budget)
      continue;
    const double phi = objective(problem, bits);
    if (best.empty() || phi > best_phi || (phi == best_phi && lex_less(bits, best)))
    {
      best_phi = phi;
      best = bits;
    }
  }
  if (best.empty())
    return infeasible(visited);
  return finish(problem, std::move(best), visited);
}

namespace
{

/**
 * Suffix bound for one pair of Lagrange multipliers on the two budgets.
 * value[l][j] is the best relaxed objective of layers l..L-1 with layer l at
 * bit_set[j]; the relaxation charges mu per size bit and nu per BitOp.
 */
struct BoundTable
{
  double mu = 0.0;
  double nu = 0.0;
  std::vector<std::vector<double>> value;
};

BoundTable make_table(const AllocationProblem &p, double mu, double nu)
{
  const std::size_t L = p.layers(), K = p.bit_set.size();
  BoundTable t{mu, nu, std::vector<std::vector<double>>(L, std::vector<double>(K))};
  auto gain = [&](std::size_t l, std::size_t j) {
    const double b = p.bit_set[j];
    return p.omega[l] * b - mu * static_cast<double>(p.w_count[l]) * b -
           nu * static_cast<double>(p.macs[l]) * b * b;
  };
  for (std::size_t j = 0; j < K; ++j)
    t.value[L - 1][j] = gain(L - 1, j);
  for (std::size_t l = L - 1; l-- > 0;)
  {
    for (std::size_t j = 0; j < K; ++j)
    {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k)
      {
        const double v =
          t.value[l + 1][k] - p.lambda * p.s_hat[l] * std::abs(p.bit_set[j] - p.bit_set[k]);
        best = std::max(best, v);
      }
      t.value[l][j] = gain(l, j) + best;
    }
  }
  return t;
}

// Relaxed value of the whole chain plus the budget terms, and the maximizing assignment.
double dual_value(const AllocationProblem &p, const BoundTable &t, std::vector<int> &argmax)
{
  const std::size_t L = p.layers(), K = p.bit_set.size();
  argmax.assign(L, 0);
  std::size_t j = static_cast<std::size_t>(
    std::max_element(t.value[0].begin(), t.value[0].end()) - t.value[0].begin());
  const double value = t.value[0][j] + t.mu * static_cast<double>(p.size_budget) +
                       t.nu * static_cast<double>(p.bitops_budget);
  argmax[0] = p.bit_set[j];
  // Recover the maximizing chain from the tables.
  for (std::size_t l = 0; l + 1 < L; ++l)
  {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < K; ++k)
    {
      const double v = t.value[l + 1][k] - p.lambda * p.s_hat[l] * std::abs(p.bit_set[j] - p.bit_set[k]);
      if (v > best)
      {
        best = v;
        arg = k;
      }
    }
    j = arg;
    argmax[l + 1] = p.bit_set[j];
  }
  return value;
}

// Subgradient descent on the Lagrangian dual; returns a few good multiplier pairs.
std::vector<BoundTable> bound_tables(const AllocationProblem &p)
{
  std::vector<BoundTable> tables;
  tables.push_back(make_table(p, 0.0, 0.0));

  const double size_budget = std::max<double>(1.0, static_cast<double>(p.size_budget));
  const double bitops_budget = std::max<double>(1.0, static_cast<double>(p.bitops_budget));
  double scale = 0.0;
  for (double w : p.omega)
    scale += std::abs(w);
  scale = std::max(scale * p.bit_set.back(), 1e-12);

  // Multipliers in normalized units: charge per fraction of budget.
  double mu_n = 0.0, nu_n = 0.0;
  std::vector<int> argmax;
  std::vector<std::pair<double, BoundTable>> candidates;
  for (int iter = 0; iter < 60; ++iter)
  {
    auto table = make_table(p, mu_n / size_budget, nu_n / bitops_budget);
    const double dual = dual_value(p, table, argmax);
    candidates.emplace_back(dual, std::move(table));
    const double g_size = static_cast<double>(allocation_size_bits(p, argmax)) / size_budget - 1.0;
    const double g_ops = static_cast<double>(allocation_bitops(p, argmax)) / bitops_budget - 1.0;
    if (g_size <= 0.0 && g_ops <= 0.0 && mu_n * g_size == 0.0 && nu_n * g_ops == 0.0)
      break; // complementary slackness: the relaxation is tight
    const double step = scale / std::sqrt(static_cast<double>(iter) + 1.0);
    mu_n = std::max(0.0, mu_n + step * g_size);
    nu_n = std::max(0.0, nu_n + step * g_ops);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto &a, const auto &b) { return a.first < b.first; });
  for (std::size_t i = 0; i < candidates.size() && i < 3; ++i)
    tables.push_back(std::move(candidates[i].second));
  return tables;
}

class BranchAndBound
{
public:
  explicit BranchAndBound(const AllocationProblem &p) : _p(p), _tables(bound_tables(p))
  {
    const std::size_t L = p.layers();
    _min_size_suffix.assign(L + 1, 0);
    _min_ops_suffix.assign(L + 1, 0);
    const std::int64_t lo = p.bit_set.front();
    for (std::size_t l = L; l-- > 0;)
    {
      _min_size_suffix[l] = _min_size_suffix[l + 1] + p.w_count[l] * lo;
      _min_ops_suffix[l] = _min_ops_suffix[l + 1] + p.macs[l] * lo * lo;
    }
    _bits.assign(L, 0);
    seed_incumbent();
  }

  BitAllocation run()
  {
    descend(0, 0.0, 0, 0);
    if (_best.empty())
      return infeasible(_nodes);
    return finish(_p, _best, _nodes);
  }

private:
  // Uniform assignments give a cheap starting incumbent.
  void seed_incumbent()
  {
    for (int b : _p.bit_set)
    {
      const std::vector<int> bits(_p.layers(), b);
      if (allocation_size_bits(_p, bits) <= _p.size_budget && allocation_bitops(_p, bits) <= _p.bitops_budget)
        consider(bits);
    }
  }

  void consider(const std::vector<int> &bits)
  {
    const double phi = objective(_p, bits);
    if (_best.empty() || phi > _best_phi || (phi == _best_phi && lex_less(bits, _best)))
    {
      _best = bits;
      _best_phi = phi;
    }
  }

  double upper_bound(std::size_t l, double partial, std::int64_t used_size, std::int64_t used_ops) const
  {
    double bound = std::numeric_limits<double>::infinity();
    const std::size_t K = _p.bit_set.size();
    for (const auto &t : _tables)
    {
      double rest = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k)
      {
        double v = t.value[l][k];
        if (l > 0)
          v -= _p.lambda * _p.s_hat[l - 1] * std::abs(_bits[l - 1] - _p.bit_set[k]);
        rest = std::max(rest, v);
      }
      const double slack_terms = t.mu * static_cast<double>(_p.size_budget - used_size) +
                                 t.nu * static_cast<double>(_p.bitops_budget - used_ops);
      bound = std::min(bound, partial + rest + slack_terms);
    }
    return bound;
  }

  void descend(std::size_t l, double partial, std::int64_t used_size, std::int64_t used_ops)
  {
    ++_nodes;
    const std::size_t L = _p.layers();
    if (l == L)
    {
      consider(_bits);
      return;
    }
    if (!_best.empty())
    {
      const double tol = 1e-9 * (1.0 + std::abs(_best_phi));
      if (upper_bound(l, partial, used_size, used_ops) < _best_phi - tol)
        return;
    }
    // Children in descending bit-width order.
    for (std::size_t k = _p.bit_set.size(); k-- > 0;)
    {
      const std::int64_t b = _p.bit_set[k];
      const std::int64_t size = used_size + _p.w_count[l] * b;
      const std::int64_t ops = used_ops + _p.macs[l] * b * b;
      if (size + _min_size_suffix[l + 1] > _p.size_budget || ops + _min_ops_suffix[l + 1] > _p.bitops_budget)
        continue;
      double next = partial + _p.omega[l] * static_cast<double>(b);
      if (l > 0)
        next -= _p.lambda * _p.s_hat[l - 1] * std::abs(_bits[l - 1] - static_cast<int>(b));
      _bits[l] = static_cast<int>(b);
      descend(l + 1, next, size, ops);
    }
  }

  const AllocationProblem &_p;
  std::vector<BoundTable> _tables;
  std::vector<std::int64_t> _min_size_suffix;
  std::vector<std::int64_t> _min_ops_suffix;
  std::vector<int> _bits;
  std::vector<int> _best;
  double _best_phi = -std::numeric_limits<double>::infinity();
  std::uint64_t _nodes = 0;
};

} // namespace

BitAllocation solve_bnb(const AllocationProblem &problem)
{
  problem.validate();
  if (!min_bits_fit(problem))
    return infeasible(0);
  return BranchAndBound(problem).run();
}

FeasibilityReport verify_allocation(const AllocationProblem &problem, const BitAllocation &allocation)
{
  FeasibilityReport r;
  if (allocation.bits.size() != problem.layers())
  {
    r.findings.push_back("bit vector has " + std::to_string(allocation.bits.size()) + " entries, problem has " +
                         std::to_string(problem.layers()) + " layers");
    return r;
  }
  r.bits_valid = true;
  for (std::size_t l = 0; l < allocation.bits.size(); ++l)
  {
    if (!std::binary_search(problem.bit_set.begin(), problem.bit_set.end(), allocation.bits[l]))
    {
      r.bits_valid = false;
      r.findings.push_back("layer " + std::to_string(l) + " uses non-candidate bit-width " +
                           std::to_string(allocation.bits[l]));
    }
  }
  r.size_bits = allocation_size_bits(problem, allocation.bits);
  r.bitops = allocation_bitops(problem, allocation.bits);
  r.size_slack = problem.size_budget - r.size_bits;
  r.bitops_slack = problem.bitops_budget - r.bitops;
  if (r.size_slack < 0)
    r.findings.push_back("model size exceeds budget by " + std::to_string(-r.size_slack) + " bits");
  if (r.bitops_slack < 0)
    r.findings.push_back("BitOps exceed budget by " + std::to_string(-r.bitops_slack));
  if (r.bits_valid)
  {
    r.objective = objective(problem, allocation.bits);
    if (r.objective != allocation.objective)
      r.findings.push_back("stored objective differs from recomputed value");
  }
  if (r.size_bits != allocation.size_bits)
    r.findings.push_back("stored size_bits differs from recomputed value");
  if (r.bitops != allocation.bitops)
    r.findings.push_back("stored bitops differs from recomputed value");
  r.feasible = r.bits_valid && r.size_slack >= 0 && r.bitops_slack >= 0;
  if (r.feasible != allocation.feasible)
    r.findings.push_back("stored feasibility flag is wrong");
  return r;
}

std::string export_lp(const AllocationProblem &problem)
{
  problem.validate();
  const std::size_t L = problem.layers(), K = problem.bit_set.size();
  std::ostringstream os;
  os.precision(17);
  auto a = [](std::size_t l, std::size_t j) { return "a_" + std::to_string(l) + "_" + std::to_string(j); };
  auto dp = [](std::size_t l) { return "dp_" + std::to_string(l); };
  auto dm = [](std::size_t l) { return "dm_" + std::to_string(l); };

  os << "\\ mixed-precision bit allocation\n";
  os << "Maximize\n obj:";
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t j = 0; j < K; ++j)
      os << " + " << problem.omega[l] * problem.bit_set[j] << " " << a(l, j);
  for (std::size_t l = 0; l + 1 < L; ++l)
  {
    const double w = problem.lambda * problem.s_hat[l];
    os << " - " << w << " " << dp(l) << " - " << w << " " << dm(l);
  }
  os << "\nSubject To\n";
  for (std::size_t l = 0; l < L; ++l)
  {
    os << " onehot_" << l << ":";
    for (std::size_t j = 0; j < K; ++j)
      os << " + " << a(l, j);
    os << " = 1\n";
  }
  for (std::size_t l = 0; l + 1 < L; ++l)
  {
    os << " trans_" << l << ":";
    for (std::size_t j = 0; j < K; ++j)
      os << " + " << problem.bit_set[j] << " " << a(l, j);
    for (std::size_t j = 0; j < K; ++j)
      os << " - " << problem.bit_set[j] << " " << a(l + 1, j);
    os << " - " << dp(l) << " + " << dm(l) << " = 0\n";
  }
  os << " size:";
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t j = 0; j < K; ++j)
      os << " + " << problem.w_count[l] * problem.bit_set[j] << " " << a(l, j);
  os << " <= " << problem.size_budget << "\n";
  os << " bitops:";
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t j = 0; j < K; ++j)
      os << " + " << problem.macs[l] * problem.bit_set[j] * problem.bit_set[j] << " " << a(l, j);
  os << " <= " << problem.bitops_budget << "\n";
  os << "Bounds\n";
  for (std::size_t l = 0; l + 1 < L; ++l)
    os << " " << dp(l) << " >= 0\n " << dm(l) << " >= 0\n";
  os << "Binary\n";
  for (std::size_t l = 0; l < L; ++l)
  {
    os << " ";
    for (std::size_t j = 0; j < K; ++j)
      os << a(l, j) << (j + 1 < K ? " " : "\n");
  }
  os << "End\n";
  return os.str();
}

} // namespace mixq
