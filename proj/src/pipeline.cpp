#include "mixq/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mixq
{

using nlohmann::json;

bool uses_log_quantizer(LayerKind kind, std::size_t operand)
{
  return kind == LayerKind::MatMul2 && operand == 0;
}

CalibrationStats collect_calibration(const NetworkSpec &spec, const ModelWeights &weights,
                                     std::span<const Tensor> images)
{
  if (images.empty())
    throw std::invalid_argument("collect_calibration: need at least one image");
  CalibrationStats stats;
  ForwardOptions options;
  options.record_taps = false;
  options.observer = [&](int layer_id, std::size_t operand, const Tensor &x) {
    auto &ops = stats[layer_id];
    if (ops.size() <= operand)
      ops.resize(operand + 1, OperandStats{std::numeric_limits<double>::infinity(),
                                           -std::numeric_limits<double>::infinity(),
                                           {}});
    auto &s = ops[operand];
    const auto [lo, hi] = std::minmax_element(x.values().begin(), x.values().end());
    s.min = std::min(s.min, *lo);
    s.max = std::max(s.max, *hi);
    if (uses_log_quantizer(spec.layer(layer_id).kind, operand))
      s.samples.insert(s.samples.end(), x.values().begin(), x.values().end());
  };
  for (const auto &image : images)
    model_forward(spec, weights, image, options);
  return stats;
}

QuantConfig make_quant_config(const NetworkSpec &spec, const ModelWeights &weights,
                              const CalibrationStats &calibration, std::span<const int> bits)
{
  const auto ids = spec.quantizable_ids();
  if (bits.size() != ids.size())
    throw std::invalid_argument("make_quant_config: expected " + std::to_string(ids.size()) + " bit-widths, got " +
                                std::to_string(bits.size()));
  QuantConfig config;
  for (std::size_t i = 0; i < ids.size(); ++i)
  {
    const int id = ids[i];
    const auto kind = spec.layer(id).kind;
    LayerQuant lq;
    lq.bits = bits[i];
    if (const Tensor *w = layer_weight(spec, weights, id))
      lq.weight = QuantScheme(calibrate_uniform(*w, bits[i], Granularity::PerChannel, 0));

    const auto it = calibration.find(id);
    const std::size_t operands = operand_count(kind);
    if (it == calibration.end() || it->second.size() < operands)
      throw std::invalid_argument("make_quant_config: no calibration data for layer " + std::to_string(id));
    for (std::size_t k = 0; k < operands; ++k)
    {
      const auto &s = it->second[k];
      if (uses_log_quantizer(kind, k))
        lq.inputs.emplace_back(QuantScheme(search_log_base(s.samples, bits[i], log_bases_for_bits(bits[i]))));
      else
        lq.inputs.emplace_back(QuantScheme(affine_from_range(s.min, s.max, bits[i])));
    }
    config.emplace(id, std::move(lq));
  }
  return config;
}

EvaluationReport evaluate_allocations(const NetworkSpec &spec, const ModelWeights &weights,
                                      std::span<const Tensor> calibration_images,
                                      std::span<const Tensor> eval_images,
                                      const std::vector<std::pair<std::string, std::vector<int>>> &configs)
{
  if (eval_images.empty())
    throw std::invalid_argument("evaluate_allocations: need at least one evaluation image");
  const auto stats = layer_stats(spec);
  const auto calibration = collect_calibration(spec, weights, calibration_images);

  ForwardOptions plain;
  plain.record_taps = false;
  std::vector<Tensor> reference_logits;
  std::vector<std::vector<double>> reference_dist;
  for (const auto &image : eval_images)
  {
    auto r = model_forward(spec, weights, image, plain);
    reference_dist.push_back(output_distribution(r.logits.data()));
    reference_logits.push_back(std::move(r.logits));
  }

  EvaluationReport report;
  report.spec_hash = spec_hash(spec);
  report.calibration_images = calibration_images.size();
  report.eval_images = eval_images.size();

  const std::vector<int> full(stats.size(), static_cast<int>(kUnquantizedBits));
  report.rows.push_back({"full-precision", {}, 0.0, 0.0, model_size_bits(stats, full), bitops(stats, full)});

  for (const auto &[label, bits] : configs)
  {
    const auto config = make_quant_config(spec, weights, calibration, bits);
    ForwardOptions options;
    options.quant = &config;
    options.record_taps = false;
    double kl_sum = 0.0, mse_sum = 0.0;
    for (std::size_t i = 0; i < eval_images.size(); ++i)
    {
      const auto r = model_forward(spec, weights, eval_images[i], options);
      kl_sum += kl_divergence(reference_dist[i], output_distribution(r.logits.data()));
      double se = 0.0;
      for (std::size_t c = 0; c < r.logits.size(); ++c)
      {
        const double d = r.logits[c] - reference_logits[i][c];
        se += d * d;
      }
      mse_sum += se / static_cast<double>(r.logits.size());
    }
    const double n = static_cast<double>(eval_images.size());
    report.rows.push_back({label, bits, kl_sum / n, mse_sum / n, model_size_bits(stats, bits), bitops(stats, bits)});
  }
  return report;
}

ProfileDocument run_profile(const NetworkSpec &spec, const ModelWeights &weights, std::span<const Tensor> images,
                            std::uint64_t seed, WeightSource source, double epsilon)
{
  spec.validate();
  ProfileDocument doc;
  doc.spec = spec;
  doc.spec_hash = spec_hash(spec);
  doc.importance = importance_profile(ModelContext{spec, weights}, images);
  doc.synergy = synergy_profile(doc.importance.raw, epsilon);
  doc.stats = layer_stats(spec);
  doc.seed = seed;
  doc.weights = std::move(source);
  doc.created = utc_timestamp();
  return doc;
}

AllocationProblem allocation_problem(const ProfileDocument &profile, int target_bits, std::vector<int> bit_set,
                                     double lambda, BtrMode mode)
{
  if (profile.spec_hash != spec_hash(profile.spec))
    throw ParseError("profile spec_hash does not match its embedded network spec");
  return build_problem(profile.importance, profile.synergy, profile.stats, target_bits, std::move(bit_set), lambda,
                       mode);
}

AllocationDocument solve_allocation(const ProfileDocument &profile, const AllocationProblem &problem, int target_bits,
                                    BtrMode mode)
{
  AllocationDocument doc;
  doc.spec_hash = profile.spec_hash;
  doc.mode = mode;
  doc.target_bits = target_bits;
  doc.bit_set = problem.bit_set;
  doc.lambda = problem.lambda;
  doc.layer_ids = problem.layer_ids;
  doc.allocation = solve_bnb(problem);
  doc.size_budget = problem.size_budget;
  doc.bitops_budget = problem.bitops_budget;
  doc.seed = profile.seed;
  doc.weights = profile.weights;
  return doc;
}

AllocationDocument run_allocate(const ProfileDocument &profile, int target_bits, std::vector<int> bit_set,
                                double lambda, BtrMode mode)
{
  return solve_allocation(profile, allocation_problem(profile, target_bits, std::move(bit_set), lambda, mode),
                          target_bits, mode);
}

namespace
{

json weights_json(const WeightSource &w)
{
  json j;
  if (w.seed)
    j = {{"source", "seed"}, {"seed", *w.seed}};
  else
    j = {{"source", "file"}, {"path", w.path}, {"hash", w.hash}};
  return j;
}

WeightSource weights_from_json(const json &j)
{
  WeightSource w;
  if (j.at("source").get<std::string>() == "seed")
    w.seed = j.at("seed").get<std::uint64_t>();
  else
  {
    w.path = j.at("path").get<std::string>();
    w.hash = j.at("hash").get<std::string>();
  }
  return w;
}

void check_version(const json &j, const char *kind)
{
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw ParseError(std::string("unsupported ") + kind + " format_version");
  if (j.contains("kind") && j.at("kind").get<std::string>() != kind)
    throw ParseError(std::string("expected a ") + kind + " document, got '" + j.at("kind").get<std::string>() + "'");
}

template <typename F>
auto parse_guard(const char *what, F &&f)
{
  try
  {
    return f();
  }
  catch (const json::exception &e)
  {
    throw ParseError(std::string("malformed ") + what + ": " + e.what());
  }
}

} // namespace

json to_json(const ProfileDocument &doc)
{
  json pairs = json::array();
  for (const auto &[l, m] : doc.synergy.pairs)
    pairs.push_back({l, m});
  return {{"format_version", kFormatVersion},
          {"kind", "profile"},
          {"spec_hash", doc.spec_hash},
          {"spec", spec_to_json(doc.spec)},
          {"seed", doc.seed},
          {"weights", weights_json(doc.weights)},
          {"created", doc.created},
          {"importance",
           {{"layer_ids", doc.importance.layer_ids},
            {"images", doc.importance.images()},
            {"forwards", doc.importance.forwards},
            {"omega", doc.importance.omega},
            {"per_image", doc.importance.per_image},
            {"raw", doc.importance.raw}}},
          {"synergy",
           {{"pairs", pairs},
            {"s_hat", doc.synergy.s_hat},
            {"epsilon", doc.synergy.epsilon},
            {"images", doc.synergy.images}}},
          {"stats",
           {{"layer_ids", doc.stats.layer_ids},
            {"w_count", doc.stats.w_count},
            {"macs", doc.stats.macs},
            {"fixed_params", doc.stats.fixed_params},
            {"fixed_macs", doc.stats.fixed_macs}}}};
}

ProfileDocument profile_from_json(const json &j)
{
  return parse_guard("profile", [&] {
    check_version(j, "profile");
    ProfileDocument doc;
    doc.spec_hash = j.at("spec_hash").get<std::string>();
    doc.spec = spec_from_json(j.at("spec"));
    doc.seed = j.at("seed").get<std::uint64_t>();
    doc.weights = weights_from_json(j.at("weights"));
    doc.created = j.value("created", "");
    const auto &imp = j.at("importance");
    doc.importance.layer_ids = imp.at("layer_ids").get<std::vector<int>>();
    doc.importance.forwards = imp.at("forwards").get<std::uint64_t>();
    doc.importance.omega = imp.at("omega").get<std::vector<double>>();
    doc.importance.per_image = imp.at("per_image").get<std::vector<std::vector<double>>>();
    doc.importance.raw = imp.at("raw").get<std::vector<std::vector<double>>>();
    const auto &syn = j.at("synergy");
    for (const auto &p : syn.at("pairs"))
      doc.synergy.pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    doc.synergy.s_hat = syn.at("s_hat").get<std::vector<double>>();
    doc.synergy.epsilon = syn.at("epsilon").get<double>();
    doc.synergy.images = syn.at("images").get<std::size_t>();
    const auto &st = j.at("stats");
    doc.stats.layer_ids = st.at("layer_ids").get<std::vector<int>>();
    doc.stats.w_count = st.at("w_count").get<std::vector<std::int64_t>>();
    doc.stats.macs = st.at("macs").get<std::vector<std::int64_t>>();
    doc.stats.fixed_params = st.at("fixed_params").get<std::int64_t>();
    doc.stats.fixed_macs = st.at("fixed_macs").get<std::int64_t>();

    if (doc.spec_hash != spec_hash(doc.spec))
      throw ParseError("profile spec_hash does not match its embedded network spec");
    if (doc.importance.layer_ids != doc.spec.quantizable_ids() || doc.stats.layer_ids != doc.importance.layer_ids)
      throw ParseError("profile layer ordering is inconsistent with its spec");
    return doc;
  });
}

json to_json(const AllocationDocument &doc)
{
  const auto &a = doc.allocation;
  return {{"format_version", kFormatVersion},
          {"kind", "allocation"},
          {"spec_hash", doc.spec_hash},
          {"mode", to_string(doc.mode)},
          {"target_bits", doc.target_bits},
          {"bit_set", doc.bit_set},
          {"lambda", doc.lambda},
          {"seed", doc.seed},
          {"weights", weights_json(doc.weights)},
          {"layer_ids", doc.layer_ids},
          {"feasible", a.feasible},
          {"bits", a.bits},
          {"objective", a.feasible ? json(a.objective) : json(nullptr)},
          {"size_bits", a.size_bits},
          {"bitops", a.bitops},
          {"size_budget", doc.size_budget},
          {"bitops_budget", doc.bitops_budget},
          {"size_slack", doc.size_budget - a.size_bits},
          {"bitops_slack", doc.bitops_budget - a.bitops},
          {"nodes", a.nodes}};
}

AllocationDocument allocation_from_json(const json &j)
{
  return parse_guard("allocation", [&] {
    check_version(j, "allocation");
    AllocationDocument doc;
    doc.spec_hash = j.at("spec_hash").get<std::string>();
    doc.mode = btr_mode_from_string(j.at("mode").get<std::string>());
    doc.target_bits = j.at("target_bits").get<int>();
    doc.bit_set = j.at("bit_set").get<std::vector<int>>();
    doc.lambda = j.at("lambda").get<double>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    doc.weights = weights_from_json(j.at("weights"));
    doc.layer_ids = j.at("layer_ids").get<std::vector<int>>();
    doc.allocation.feasible = j.at("feasible").get<bool>();
    doc.allocation.bits = j.at("bits").get<std::vector<int>>();
    doc.allocation.objective = j.at("objective").is_null() ? -std::numeric_limits<double>::infinity()
                                                            : j.at("objective").get<double>();
    doc.allocation.size_bits = j.at("size_bits").get<std::int64_t>();
    doc.allocation.bitops = j.at("bitops").get<std::int64_t>();
    doc.allocation.nodes = j.value("nodes", std::uint64_t{0});
    doc.size_budget = j.at("size_budget").get<std::int64_t>();
    doc.bitops_budget = j.at("bitops_budget").get<std::int64_t>();
    return doc;
  });
}

json to_json(const EvaluationReport &report)
{
  json rows = json::array();
  for (const auto &r : report.rows)
    rows.push_back({{"label", r.label},
                    {"bits", r.bits},
                    {"mean_kl", r.mean_kl},
                    {"mean_mse", r.mean_mse},
                    {"size_bits", r.size_bits},
                    {"bitops", r.bitops}});
  return {{"format_version", kFormatVersion},
          {"kind", "evaluation"},
          {"note", "desk-scale proxy: output KL and logit MSE against the full-precision model"},
          {"spec_hash", report.spec_hash},
          {"calibration_images", report.calibration_images},
          {"eval_images", report.eval_images},
          {"rows", rows}};
}

EvaluationReport report_from_json(const json &j)
{
  return parse_guard("evaluation report", [&] {
    check_version(j, "evaluation");
    EvaluationReport r;
    r.spec_hash = j.at("spec_hash").get<std::string>();
    r.calibration_images = j.at("calibration_images").get<std::size_t>();
    r.eval_images = j.at("eval_images").get<std::size_t>();
    for (const auto &row : j.at("rows"))
      r.rows.push_back({row.at("label").get<std::string>(), row.at("bits").get<std::vector<int>>(),
                        row.at("mean_kl").get<double>(), row.at("mean_mse").get<double>(),
                        row.at("size_bits").get<std::int64_t>(), row.at("bitops").get<std::int64_t>()});
    return r;
  });
}

namespace
{

std::string bits_string(const std::vector<int> &bits)
{
  if (bits.empty())
    return "fp32";
  std::string s;
  for (int b : bits)
    s += std::to_string(b);
  return s;
}

} // namespace

std::string format_report(const EvaluationReport &report)
{
  std::ostringstream os;
  os << "# proxy evaluation (output KL / logit MSE vs full precision), spec " << report.spec_hash << ", "
     << report.calibration_images << " calibration / " << report.eval_images << " eval images\n";
  std::size_t label_w = 5, bits_w = 4;
  for (const auto &r : report.rows)
  {
    label_w = std::max(label_w, r.label.size());
    bits_w = std::max(bits_w, bits_string(r.bits).size());
  }
  os << std::left << std::setw(static_cast<int>(label_w)) << "label" << "  " << std::setw(static_cast<int>(bits_w))
     << "bits" << "  " << std::right << std::setw(12) << "mean_kl" << "  " << std::setw(12) << "mean_mse" << "  "
     << std::setw(12) << "size_bits" << "  " << std::setw(14) << "bitops" << "\n";
  for (const auto &r : report.rows)
  {
    os << std::left << std::setw(static_cast<int>(label_w)) << r.label << "  " << std::setw(static_cast<int>(bits_w))
       << bits_string(r.bits) << "  " << std::right << std::scientific << std::setprecision(4) << std::setw(12)
       << r.mean_kl << "  " << std::setw(12) << r.mean_mse << "  " << std::defaultfloat << std::setw(12)
       << r.size_bits << "  " << std::setw(14) << r.bitops << "\n";
  }
  return os.str();
}

std::string format_allocation(const AllocationDocument &doc)
{
  std::ostringstream os;
  const auto &a = doc.allocation;
  os << "mode " << to_string(doc.mode) << ", target " << doc.target_bits << " bits, lambda " << doc.lambda << "\n";
  os << "feasible   " << (a.feasible ? "yes" : "no") << "\n";
  if (a.feasible)
    os << "objective  " << std::setprecision(10) << a.objective << "\n";
  os << "size_bits  " << a.size_bits << " / " << doc.size_budget << " (slack " << doc.size_budget - a.size_bits
     << ")\n";
  os << "bitops     " << a.bitops << " / " << doc.bitops_budget << " (slack " << doc.bitops_budget - a.bitops
     << ")\n";
  os << "layer  bits\n";
  for (std::size_t i = 0; i < a.bits.size(); ++i)
    os << std::setw(5) << (i < doc.layer_ids.size() ? doc.layer_ids[i] : static_cast<int>(i)) << "  "
       << std::setw(4) << a.bits[i] << "\n";
  return os.str();
}

std::string format_profile(const ProfileDocument &doc)
{
  std::ostringstream os;
  os << "profile of spec " << doc.spec_hash << ", " << doc.importance.images() << " images, "
     << doc.importance.forwards << " forwards\n";
  os << "layer  kind        omega         w_count        macs  s_hat(next)\n";
  for (std::size_t i = 0; i < doc.importance.layer_ids.size(); ++i)
  {
    const int id = doc.importance.layer_ids[i];
    os << std::setw(5) << id << "  " << std::left << std::setw(10) << to_string(doc.spec.layer(id).kind)
       << std::right << std::fixed << std::setprecision(6) << std::setw(9) << doc.importance.omega[i]
       << std::setw(16) << doc.stats.w_count[i] << std::setw(12) << doc.stats.macs[i];
    if (i < doc.synergy.s_hat.size())
      os << std::setw(13) << std::setprecision(4) << doc.synergy.s_hat[i];
    os << std::defaultfloat << "\n";
  }
  return os.str();
}

std::string utc_timestamp()
{
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace mixq
