#include "mixq/allocator.hpp"
#include "mixq/importance.hpp"
#include "mixq/io.hpp"
#include "mixq/pipeline.hpp"
#include "mixq/quant.hpp"
#include "mixq/rng.hpp"
#include "mixq/synergy.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mixq;

namespace
{

Tensor flat(std::vector<double> values)
{
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

NetworkSpec spec_or_default(const std::string &spec_json)
{
  return spec_json.empty() ? default_network_spec() : spec_from_json(nlohmann::json::parse(spec_json));
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Bindings for the mixq C++ core";

  m.def(
    "calibrate_uniform",
    [](const std::vector<double> &samples, int bits) {
      const auto p = calibrate_uniform(flat(samples), bits);
      return py::make_tuple(p.scale[0], p.zero_point[0]);
    },
    py::arg("samples"), py::arg("bits"), "Per-tensor min-max calibration; returns (scale, zero_point).");

  m.def(
    "fake_quant_uniform",
    [](const std::vector<double> &x, int bits, bool per_channel, std::size_t channels) {
      if (!per_channel)
        return fake_quant(flat(x), QuantScheme(calibrate_uniform(flat(x), bits))).values();
      if (channels == 0 || x.size() % channels != 0)
        throw std::invalid_argument("channels must divide the value count");
      const Tensor t({channels, x.size() / channels}, x);
      return fake_quant(t, QuantScheme(calibrate_uniform(t, bits, Granularity::PerChannel, 0))).values();
    },
    py::arg("x"), py::arg("bits"), py::arg("per_channel") = false, py::arg("channels") = 1);

  m.def(
    "search_log_base",
    [](const std::vector<double> &samples, int bits) {
      const auto bases = log_bases_for_bits(bits);
      const auto p = search_log_base(samples, bits, bases);
      return py::make_tuple(p.base, p.scale);
    },
    py::arg("samples"), py::arg("bits"), "Returns (base, scale) chosen for `samples`.");

  m.def(
    "fake_quant_log",
    [](const std::vector<double> &x, double base, double scale, int bits) {
      return fake_quant(flat(x), QuantScheme(LogParams{scale, base, bits})).values();
    },
    py::arg("x"), py::arg("base"), py::arg("scale"), py::arg("bits"));

  m.def("kl_divergence", [](const std::vector<double> &p, const std::vector<double> &q) { return kl_divergence(p, q); },
        py::arg("p"), py::arg("q"));
  m.def("normalize_scores", [](const std::vector<double> &raw) { return normalize_scores(raw); }, py::arg("raw"));
  m.def("pair_synergy", &pair_synergy_per_image, py::arg("score_l"), py::arg("score_m"),
        py::arg("epsilon") = kDefaultSynergyEpsilon);

  py::class_<AllocationProblem>(m, "AllocationProblem")
    .def(py::init<>())
    .def_readwrite("layer_ids", &AllocationProblem::layer_ids)
    .def_readwrite("bit_set", &AllocationProblem::bit_set)
    .def_readwrite("omega", &AllocationProblem::omega)
    .def_readwrite("s_hat", &AllocationProblem::s_hat)
    .def_readwrite("w_count", &AllocationProblem::w_count)
    .def_readwrite("macs", &AllocationProblem::macs)
    .def_readwrite("size_budget", &AllocationProblem::size_budget)
    .def_readwrite("bitops_budget", &AllocationProblem::bitops_budget)
    .def_readwrite("lambda_", &AllocationProblem::lambda)
    .def("validate", &AllocationProblem::validate);

  py::class_<BitAllocation>(m, "BitAllocation")
    .def_readonly("bits", &BitAllocation::bits)
    .def_readonly("objective", &BitAllocation::objective)
    .def_readonly("size_bits", &BitAllocation::size_bits)
    .def_readonly("bitops", &BitAllocation::bitops)
    .def_readonly("feasible", &BitAllocation::feasible)
    .def_readonly("nodes", &BitAllocation::nodes);

  m.def("solve_bnb", &solve_bnb, py::arg("problem"));
  m.def("solve_bruteforce", &solve_bruteforce, py::arg("problem"));
  m.def("objective", [](const AllocationProblem &p, const std::vector<int> &bits) { return objective(p, bits); },
        py::arg("problem"), py::arg("bits"));
  m.def("export_lp", &export_lp, py::arg("problem"));

  m.def("default_spec_json", [] { return spec_to_json(default_network_spec()).dump(2); });

  m.def(
    "model_size_bits",
    [](const std::vector<int> &bits, const std::string &spec_json) {
      return model_size_bits(layer_stats(spec_or_default(spec_json)), bits);
    },
    py::arg("bits"), py::arg("spec_json") = "");
  m.def(
    "bitops",
    [](const std::vector<int> &bits, const std::string &spec_json) {
      return bitops(layer_stats(spec_or_default(spec_json)), bits);
    },
    py::arg("bits"), py::arg("spec_json") = "");

  m.def(
    "profile",
    [](std::uint64_t seed, std::size_t images, const std::string &spec_json) {
      const auto spec = spec_or_default(spec_json);
      const auto plan = SeedPlan::from(seed);
      const auto weights = init_weights(spec, plan.weights);
      const auto data = generate_synthetic(plan.profile_data, images, {spec.tokens, spec.patch_dim});
      py::gil_scoped_release release;
      return to_json(run_profile(spec, weights, data, seed, WeightSource{seed, "", ""})).dump(2);
    },
    py::arg("seed"), py::arg("images") = kDefaultProfileImages, py::arg("spec_json") = "",
    "Profiles a seeded toy model on synthetic images; returns the profile JSON text.");

  m.def(
    "allocate",
    [](const std::string &profile_json, int target_bits, std::vector<int> bit_set, double lambda,
       const std::string &mode) {
      const auto profile = profile_from_json(nlohmann::json::parse(profile_json));
      return to_json(run_allocate(profile, target_bits, std::move(bit_set), lambda, btr_mode_from_string(mode)))
        .dump(2);
    },
    py::arg("profile_json"), py::arg("target_bits") = 6, py::arg("bit_set") = kDefaultBitSet,
    py::arg("lambda_") = kDefaultLambda, py::arg("mode") = "synergy",
    "Solves the bit allocation for a profile; returns the allocation JSON text.");
}
