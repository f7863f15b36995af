#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evtrust/aggregation.hpp"
#include "evtrust/config.hpp"
#include "evtrust/data.hpp"
#include "evtrust/errors.hpp"
#include "evtrust/evidential.hpp"
#include "evtrust/mlp.hpp"
#include "evtrust/orchestrator.hpp"
#include "evtrust/results.hpp"
#include "evtrust/seed.hpp"
#include "evtrust/special.hpp"
#include "evtrust/topology.hpp"

namespace py = pybind11;
using namespace evtrust;

namespace {

py::dict output_dict(const EvidentialOutput& out) {
  py::dict d;
  d["alpha"] = py::cast(out.alpha, py::return_value_policy::copy);
  d["strength"] = out.strength;
  d["vacuity"] = out.vacuity;
  d["entropy"] = out.entropy;
  d["predicted"] = out.predicted;
  return d;
}

std::vector<std::vector<std::size_t>> adjacency(const TopologyGraph& g) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(g.neighbors(i));
  return out;
}

template <typename E>
void register_error(py::module_& m, const char* name, py::handle base) {
  py::register_exception<E>(m, name, base);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Evidential trust-aware decentralized learning simulator";

  auto& base_error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  register_error<ConfigError>(m, "ConfigError", base_error);
  register_error<InputError>(m, "InputError", base_error);
  register_error<DomainError>(m, "DomainError", base_error);
  register_error<GenerationError>(m, "GenerationError", base_error);
  register_error<PartitionError>(m, "PartitionError", base_error);
  register_error<SplitError>(m, "SplitError", base_error);
  register_error<ParseError>(m, "ParseError", base_error);
  register_error<ValidationError>(m, "ValidationError", base_error);
  register_error<EvaluationError>(m, "EvaluationError", base_error);
  register_error<AggregationError>(m, "AggregationError", base_error);
  register_error<IoError>(m, "IoError", base_error);

  m.def("digamma", &digamma, py::arg("x"));
  m.def("trigamma", &trigamma, py::arg("x"));
  m.def("log_gamma", &log_gamma, py::arg("x"));

  m.def("summarize_dirichlet", [](const Eigen::VectorXd& alpha) { return output_dict(summarize_dirichlet(alpha)); },
        py::arg("alpha"));
  m.def("vacuity", &vacuity, py::arg("alpha"));
  m.def("aleatoric_entropy", &aleatoric_entropy, py::arg("alpha"));
  m.def("kl_dirichlet_to_uniform", &kl_dirichlet_to_uniform, py::arg("alpha_tilde"));
  m.def("anneal_lambda", &anneal_lambda, py::arg("round_t"), py::arg("total_rounds"), py::arg("lambda_max"));

  py::class_<MlpParams>(m, "MlpParams")
      .def_static("zeros", [](const std::vector<int>& widths) { return MlpParams::zeros(widths); },
                  py::arg("widths"))
      .def_static("random_init",
                  [](const std::vector<int>& widths, std::uint64_t seed) {
                    Rng rng(seed);
                    return MlpParams::random_init(widths, rng);
                  },
                  py::arg("widths"), py::arg("seed"))
      .def_property_readonly("widths", &MlpParams::widths)
      .def_property_readonly("parameter_count", &MlpParams::parameter_count)
      .def("__eq__", &MlpParams::operator==);
  m.def("forward",
        [](const MlpParams& params, const Eigen::VectorXd& x, double clamp) {
          return output_dict(forward(params, x, clamp));
        },
        py::arg("params"), py::arg("features"), py::arg("logit_clamp") = 10.0);

  py::class_<TrustParams>(m, "TrustParams")
      .def(py::init<>())
      .def_readwrite("accuracy_weight", &TrustParams::accuracy_weight)
      .def_readwrite("uncertainty_threshold", &TrustParams::uncertainty_threshold)
      .def_readwrite("initial_min_trust", &TrustParams::initial_min_trust)
      .def_readwrite("tighten_depth", &TrustParams::tighten_depth)
      .def_readwrite("tighten_rate", &TrustParams::tighten_rate)
      .def_readwrite("ema_enabled", &TrustParams::ema_enabled)
      .def_readwrite("ema_momentum", &TrustParams::ema_momentum)
      .def_readwrite("self_weight", &TrustParams::self_weight)
      .def_readwrite("max_eval_samples", &TrustParams::max_eval_samples)
      .def("validate", &TrustParams::validate);
  m.def("trust_score", &trust_score, py::arg("mean_vacuity"), py::arg("accuracy"),
        py::arg("params") = TrustParams{});
  m.def("adaptive_threshold", &adaptive_threshold, py::arg("round_t"), py::arg("total_rounds"),
        py::arg("params") = TrustParams{});

  m.def("ring", [](std::size_t n) { return adjacency(ring(n)); }, py::arg("n"));
  m.def("fully_connected", [](std::size_t n) { return adjacency(fully_connected(n)); }, py::arg("n"));
  m.def("erdos_renyi", [](std::size_t n, double p, std::uint64_t seed) { return adjacency(erdos_renyi(n, p, seed)); },
        py::arg("n"), py::arg("p"), py::arg("seed"));
  m.def("k_regular",
        [](std::size_t n, std::size_t k, std::uint64_t seed) { return adjacency(k_regular(n, k, seed)); },
        py::arg("n"), py::arg("k"), py::arg("seed"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("features", &Dataset::features)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def("__len__", &Dataset::size);
  m.def("synth_blobs", &synth_blobs, py::arg("num_classes"), py::arg("dim"), py::arg("samples_per_class"),
        py::arg("separation"), py::arg("noise_sigma"), py::arg("seed"));
  m.def("standardize", &standardize, py::arg("dataset"));
  m.def("partition_dirichlet", &partition_dirichlet, py::arg("dataset"), py::arg("n_nodes"),
        py::arg("concentration"), py::arg("min_per_node"), py::arg("seed"));
  m.def("partition_iid", &partition_iid, py::arg("dataset"), py::arg("n_nodes"), py::arg("seed"));
  m.def("partition_label_groups", &partition_label_groups, py::arg("dataset"), py::arg("n_nodes"),
        py::arg("groups"), py::arg("seed"));
  m.def("class_proportions", &class_proportions, py::arg("dataset"), py::arg("indices"));
  m.def("effective_class_count", &effective_class_count, py::arg("dataset"), py::arg("indices"),
        py::arg("min_share") = 0.05);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("master_seed", &ExperimentConfig::master_seed)
      .def_readwrite("rounds", &ExperimentConfig::rounds)
      .def("to_yaml", &serialize_config)
      .def("override", &override_config, py::arg("dotted_key"), py::arg("yaml_value"))
      .def("__eq__", [](const ExperimentConfig& a, const ExperimentConfig& b) { return a == b; });
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("config", &ExperimentResult::config)
      .def_property_readonly("final_mean_accuracy", [](const ExperimentResult& r) { return r.summary.mean_accuracy; })
      .def_property_readonly("final_std_accuracy", [](const ExperimentResult& r) { return r.summary.std_accuracy; })
      .def_property_readonly("rounds_to_peak", [](const ExperimentResult& r) { return r.summary.rounds_to_peak; })
      .def_property_readonly("mean_accuracy_history",
                             [](const ExperimentResult& r) {
                               std::vector<double> out;
                               for (const auto& m : r.history) out.push_back(m.mean_accuracy);
                               return out;
                             })
      .def("metrics_records",
           [](const ExperimentResult& r) {
             std::vector<std::string> out;
             for (const auto& m : r.history) out.push_back(metrics_record(m));
             return out;
           })
      .def("summary_json", &summary_document)
      .def("emit", [](const ExperimentResult& r, const std::string& dir) { emit_results(r, dir); }, py::arg("out_dir"));
  m.def("run_experiment",
        [](const ExperimentConfig& config, unsigned threads) {
          RunOptions options;
          options.threads = threads;
          py::gil_scoped_release release;
          return run_experiment(config, options);
        },
        py::arg("config"), py::arg("threads") = 1);
  m.def("rounds_to_peak", [](const std::vector<double>& acc) { return rounds_to_peak(acc); },
        py::arg("mean_accuracies"));
  m.def("degradation", &degradation, py::arg("iid"), py::arg("non_iid"));
  m.def("derive_seed", &derive_seed, py::arg("master_seed"), py::arg("tag"), py::arg("index"));
}
