#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "getree/envs.hpp"
#include "getree/harness.hpp"

namespace py = pybind11;
using namespace getree;

namespace {

py::object json_to_py(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            return py::none();
        case nlohmann::json::value_t::boolean:
            return py::bool_(j.get<bool>());
        case nlohmann::json::value_t::number_integer:
            return py::int_(j.get<std::int64_t>());
        case nlohmann::json::value_t::number_unsigned:
            return py::int_(j.get<std::uint64_t>());
        case nlohmann::json::value_t::number_float:
            return py::float_(j.get<double>());
        case nlohmann::json::value_t::string:
            return py::str(j.get<std::string>());
        case nlohmann::json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(json_to_py(item));
            return out;
        }
        case nlohmann::json::value_t::object: {
            py::dict out;
            for (const auto& [key, value] : j.items()) out[py::str(key)] = json_to_py(value);
            return out;
        }
        default:
            return py::none();
    }
}

// env handle owning its episode stream, pythonic (obs, reward, done, info) step
class PyEnv {
public:
    PyEnv(const std::string& id, int max_steps, double sigma, std::uint64_t seed)
        : rng_(derive_seed(seed, 0x9e7)) {
        auto inner = make_env(id, max_steps);
        if (sigma > 0.0)
            env_ = std::make_unique<NoisyObservationEnv>(std::move(inner), sigma,
                                                         derive_seed(seed, 0x5137));
        else
            env_ = std::move(inner);
    }

    std::vector<double> reset(std::optional<std::uint64_t> seed) {
        if (seed) rng_ = Rng(derive_seed(*seed, 0x9e7));
        auto view = env_->reset(rng_);
        return {view.begin(), view.end()};
    }

    py::tuple step(int action) {
        StepResult r = env_->step(action);
        return py::make_tuple(std::vector<double>(r.observation.begin(), r.observation.end()),
                              r.reward, r.done, std::string(r.info));
    }

    int observation_dim() const { return env_->observation_dim(); }
    int action_count() const { return env_->action_count(); }
    int max_steps() const { return env_->max_steps(); }
    std::vector<std::string> observation_names() const {
        auto names = env_->observation_names();
        return {names.begin(), names.end()};
    }
    std::vector<std::string> action_names() const {
        auto names = env_->action_names();
        return {names.begin(), names.end()};
    }

private:
    std::unique_ptr<Environment> env_;
    Rng rng_;
};

py::dict report_to_py(const InterpretabilityReport& r) {
    py::dict out;
    out["l"] = r.l;
    out["n_o"] = r.n_o;
    out["n_nao"] = r.n_nao;
    out["n_naoc"] = r.n_naoc;
    out["M"] = r.M;
    return out;
}

py::dict summary_to_py(const ScoreSummary& s) {
    py::dict out;
    out["mean"] = s.mean;
    out["std"] = s.stddev;
    out["scores"] = s.scores;
    out["lengths"] = s.lengths;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "grammatical evolution of decision-tree policies with Q-learning leaves";

    py::class_<Grammar>(m, "Grammar")
        .def_static("parse", [](const std::string& text) { return Grammar::parse(text); },
                    py::arg("text"))
        .def_static("parse_file", &Grammar::parse_file, py::arg("path"))
        .def("serialize", &Grammar::serialize)
        .def("rule_names",
             [](const Grammar& g) {
                 std::vector<std::string> names;
                 for (const Rule& r : g.rules()) names.push_back(r.name);
                 return names;
             })
        .def("production_count",
             [](const Grammar& g, const std::string& rule) {
                 return g.rule(rule).productions.size();
             },
             py::arg("rule"))
        .def_property_readonly("start_rule", &Grammar::start_rule);

    py::class_<DecisionTree>(m, "DecisionTree")
        .def_static("load", &DecisionTree::load, py::arg("path"))
        .def_static("loads",
                    [](const std::string& text) {
                        return DecisionTree::from_json(nlohmann::json::parse(text));
                    },
                    py::arg("text"))
        .def("save", &DecisionTree::save, py::arg("path"))
        .def("dumps", [](const DecisionTree& t) { return t.to_json().dump(2); })
        .def("pretty", &DecisionTree::pretty)
        .def("to_dot", &DecisionTree::to_dot)
        .def("act",
             [](const DecisionTree& t, const std::vector<double>& obs, std::uint64_t seed) {
                 Rng tie(derive_seed(seed, 0x71e));
                 return greedy_action(t.route_const(obs), tie);
             },
             py::arg("observation"), py::arg("seed") = 0,
             "greedy action for one observation")
        .def_property_readonly("observation_dim", &DecisionTree::observation_dim)
        .def_property_readonly("action_count", &DecisionTree::action_count)
        .def_property_readonly("var_names",
                               [](const DecisionTree& t) { return t.var_names; })
        .def_property_readonly("action_names",
                               [](const DecisionTree& t) { return t.action_names; });

    py::class_<PyEnv>(m, "Env")
        .def(py::init<const std::string&, int, double, std::uint64_t>(), py::arg("id"),
             py::arg("max_steps") = 0, py::arg("sigma") = 0.0, py::arg("seed") = 0)
        .def("reset", &PyEnv::reset, py::arg("seed") = py::none())
        .def("step", &PyEnv::step, py::arg("action"))
        .def_property_readonly("observation_dim", &PyEnv::observation_dim)
        .def_property_readonly("action_count", &PyEnv::action_count)
        .def_property_readonly("max_steps", &PyEnv::max_steps)
        .def_property_readonly("observation_names", &PyEnv::observation_names)
        .def_property_readonly("action_names", &PyEnv::action_names);

    m.def("decode_text",
          [](const Grammar& grammar, const std::vector<std::uint32_t>& codons,
             std::uint32_t codon_max, std::size_t max_expansions) -> std::optional<std::string> {
              Genotype g{codons, codon_max};
              DecodeResult r = decode(g, grammar, max_expansions);
              if (!r.ok()) return std::nullopt;
              return derivation_text(*r.root, grammar);
          },
          py::arg("grammar"), py::arg("codons"), py::arg("codon_max") = 65536,
          py::arg("max_expansions") = 10000,
          "leftmost derivation rendered as text, or None on decode failure");

    m.def("tree_from_genotype",
          [](const Grammar& grammar, const std::vector<std::uint32_t>& codons,
             const std::string& env_id, std::uint32_t codon_max,
             double leaf_value) -> std::optional<DecisionTree> {
              Genotype g{codons, codon_max};
              DecodeResult r = decode(g, grammar);
              if (!r.ok()) return std::nullopt;
              auto env = make_env(env_id);
              TreeBuildSpec spec;
              auto obs = env->observation_names();
              auto act = env->action_names();
              spec.var_names.assign(obs.begin(), obs.end());
              spec.action_names.assign(act.begin(), act.end());
              const int actions = env->action_count();
              spec.leaf_init = [actions, leaf_value](Rng&) {
                  return std::vector<double>(static_cast<std::size_t>(actions), leaf_value);
              };
              Rng rng(0);
              return build_tree(*r.root, grammar, spec, rng);
          },
          py::arg("grammar"), py::arg("codons"), py::arg("env"),
          py::arg("codon_max") = 65536, py::arg("leaf_value") = 0.0,
          "decode a genotype into an (untrained) decision tree, or None");

    m.def("complexity",
          [](const DecisionTree& tree) { return report_to_py(complexity(tree)); },
          py::arg("tree"));

    m.def("evaluate_tree",
          [](const DecisionTree& tree, const std::string& env_id, int episodes,
             std::uint64_t seed, int max_steps, double sigma) {
              auto env = make_env(env_id, max_steps);
              std::unique_ptr<Environment> wrapped;
              Environment* target = env.get();
              if (sigma > 0.0) {
                  wrapped = std::make_unique<NoisyObservationEnv>(std::move(env), sigma,
                                                                  derive_seed(seed, 0x5137, 0));
                  target = wrapped.get();
              }
              return summary_to_py(evaluate_greedy(tree, *target, episodes, seed));
          },
          py::arg("tree"), py::arg("env"), py::arg("episodes") = 100, py::arg("seed") = 0,
          py::arg("max_steps") = 0, py::arg("sigma") = 0.0,
          "greedy evaluation: dict with mean, std, scores");

    m.def("simplify_tree",
          [](const DecisionTree& tree, const std::string& env_id, int episodes,
             std::uint64_t seed, int max_steps) {
              auto env = make_env(env_id, max_steps);
              Rng rng(derive_seed(seed, 0x5a11));
              return simplify(tree, *env, episodes, rng);
          },
          py::arg("tree"), py::arg("env"), py::arg("episodes") = 100, py::arg("seed") = 0,
          py::arg("max_steps") = 0);

    m.def("mann_whitney",
          [](const std::vector<double>& a, const std::vector<double>& b,
             const std::string& method) {
              MannWhitneyMode mode = MannWhitneyMode::Auto;
              if (method == "exact") mode = MannWhitneyMode::Exact;
              else if (method == "normal") mode = MannWhitneyMode::NormalApproximation;
              else if (method != "auto") throw std::invalid_argument("method: auto|exact|normal");
              const TestOutcome outcome = mann_whitney_u(a, b, mode);
              py::dict out;
              out["u"] = outcome.u;
              out["p_value"] = outcome.p_value;
              out["method"] =
                  outcome.method == TestOutcome::Method::Exact ? "exact" : "normal_approximation";
              return out;
          },
          py::arg("a"), py::arg("b"), py::arg("method") = "auto");

    m.def("noise_sweep",
          [](const DecisionTree& tree, const std::string& env_id,
             const std::vector<double>& sigmas, int episodes, std::uint64_t seed, int max_steps) {
              auto env = make_env(env_id, max_steps);
              py::list out;
              for (const SweepPoint& p : noise_sweep(tree, *env, sigmas, episodes, seed)) {
                  py::dict row;
                  row["sigma"] = p.sigma;
                  row["mean"] = p.mean;
                  row["std"] = p.stddev;
                  out.append(row);
              }
              return out;
          },
          py::arg("tree"), py::arg("env"), py::arg("sigmas"), py::arg("episodes") = 100,
          py::arg("seed") = 0, py::arg("max_steps") = 0);

    m.def("stability_trace",
          [](const DecisionTree& tree, const std::string& env_id, int episodes, int horizon,
             std::uint64_t seed) {
              auto env = make_env(env_id, horizon);
              return stability_trace(tree, *env, episodes, horizon, seed);
          },
          py::arg("tree"), py::arg("env"), py::arg("episodes") = 100, py::arg("horizon") = 500,
          py::arg("seed") = 0);

    m.def("run_training",
          [](const std::string& config_path, const std::string& output_dir,
             std::optional<std::uint64_t> seed, std::optional<int> runs, int workers) {
              ExperimentConfig cfg = ExperimentConfig::load(config_path);
              if (!output_dir.empty()) cfg.output_dir = output_dir;
              if (seed) cfg.seed_base = *seed;
              if (runs) cfg.runs = *runs;
              py::list out;
              for (const RunRecord& record : cmd_train(cfg, workers))
                  out.append(json_to_py(record.to_json()));
              return out;
          },
          py::arg("config"), py::arg("output_dir") = "", py::arg("seed") = py::none(),
          py::arg("runs") = py::none(), py::arg("workers") = 1,
          "run a config-driven experiment; returns the run records as dicts");
}
