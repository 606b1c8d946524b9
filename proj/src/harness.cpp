#include "getree/harness.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "getree/envs.hpp"
#include "getree/parallel.hpp"

namespace fs = std::filesystem;

namespace getree {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw std::runtime_error("config field '" + field + "': " + what);
}

template <class T>
T require(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field)) config_error(field, "missing");
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_error(field, e.what());
    }
}

template <class T>
T optional_field(const nlohmann::json& j, const std::string& field, T fallback) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_error(field, e.what());
    }
}

LearnerConfig parse_learner(const nlohmann::json& q) {
    LearnerConfig cfg;
    if (q.contains("epsilon")) {
        const auto& e = q.at("epsilon");
        const std::string type = optional_field<std::string>(e, "type", "constant");
        if (type == "constant") {
            cfg.epsilon.kind = EpsilonSchedule::Kind::Constant;
            cfg.epsilon.epsilon = require<double>(e, "value");
        } else if (type == "decay") {
            cfg.epsilon.kind = EpsilonSchedule::Kind::Decay;
            cfg.epsilon.epsilon0 = require<double>(e, "epsilon0");
            cfg.epsilon.multiplier = require<double>(e, "multiplier");
        } else {
            config_error("qlearning.epsilon.type", "unknown schedule '" + type + "'");
        }
    }
    if (q.contains("learning_rate")) {
        const auto& lr = q.at("learning_rate");
        const std::string type = optional_field<std::string>(lr, "type", "constant");
        if (type == "constant") {
            cfg.learning_rate.kind = LearningRate::Kind::Constant;
            cfg.learning_rate.alpha = require<double>(lr, "alpha");
        } else if (type == "inverse_visits") {
            cfg.learning_rate.kind = LearningRate::Kind::InverseVisits;
        } else {
            config_error("qlearning.learning_rate.type", "unknown schedule '" + type + "'");
        }
    }
    if (q.contains("init")) {
        const auto& init = q.at("init");
        const std::string type = optional_field<std::string>(init, "type", "uniform");
        if (type == "uniform") {
            cfg.init.kind = LeafInit::Kind::Uniform;
            cfg.init.low = require<double>(init, "low");
            cfg.init.high = require<double>(init, "high");
        } else if (type == "constant") {
            cfg.init.kind = LeafInit::Kind::Constant;
            cfg.init.value = require<double>(init, "value");
        } else {
            config_error("qlearning.init.type", "unknown strategy '" + type + "'");
        }
    }
    cfg.discount = optional_field<double>(q, "discount", 0.99);
    return cfg;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             const std::string& base_dir) {
    ExperimentConfig cfg;
    cfg.environment = require<std::string>(j, "environment");
    cfg.grammar_file = require<std::string>(j, "grammar");
    if (!base_dir.empty() && fs::path(cfg.grammar_file).is_relative())
        cfg.grammar_file = (fs::path(base_dir) / cfg.grammar_file).lexically_normal().string();
    cfg.family = optional_field<std::string>(j, "family", "orthogonal");
    cfg.runs = optional_field<int>(j, "runs", 10);
    cfg.test_episodes = optional_field<int>(j, "test_episodes", 100);
    cfg.validation_episodes = optional_field<int>(j, "validation_episodes", 100);
    cfg.seed_base = optional_field<std::uint64_t>(j, "seed_base", 0);
    cfg.output_dir = optional_field<std::string>(j, "output_dir", "results");
    cfg.env_max_steps = optional_field<int>(j, "env_max_steps", 0);
    cfg.observation_sigma = optional_field<double>(j, "observation_sigma", 0.0);

    const auto& evo = j.contains("evolution") ? j.at("evolution") : nlohmann::json::object();
    cfg.evolution.population_size = optional_field<int>(evo, "population_size", 200);
    cfg.evolution.generations = optional_field<int>(evo, "generations", 100);
    cfg.evolution.genotype_length = optional_field<int>(evo, "genotype_length", 1024);
    cfg.evolution.crossover_probability =
        optional_field<double>(evo, "crossover_probability", 0.0);
    cfg.evolution.mutation_probability = optional_field<double>(evo, "mutation_probability", 1.0);
    cfg.evolution.gene_mutation_probability =
        optional_field<double>(evo, "gene_mutation_probability", 0.1);
    cfg.evolution.tournament_size = optional_field<int>(evo, "tournament_size", 0);
    cfg.evolution.codon_max = optional_field<std::uint32_t>(evo, "codon_max", 65536);

    const auto& q = j.contains("qlearning") ? j.at("qlearning") : nlohmann::json::object();
    cfg.learner = parse_learner(q);
    cfg.training_episodes = optional_field<int>(q, "episodes", 10);
    if (q.contains("early_stop")) {
        cfg.early_stop.enabled = optional_field<bool>(q.at("early_stop"), "enabled", true);
        cfg.early_stop.period = optional_field<int>(q.at("early_stop"), "period", 30);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        return from_json(j, fs::path(path).parent_path().string());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void ExperimentConfig::validate() const {
    if (!is_known_env(environment)) config_error("environment", "unknown id '" + environment + "'");
    if (family != "orthogonal" && family != "oblique" && family != "ablation")
        config_error("family", "must be orthogonal, oblique, or ablation");
    if (runs < 1) config_error("runs", "must be >= 1");
    if (test_episodes < 1) config_error("test_episodes", "must be >= 1");
    if (validation_episodes < 1) config_error("validation_episodes", "must be >= 1");
    if (training_episodes < 1) config_error("qlearning.episodes", "must be >= 1");
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(evolution.crossover_probability))
        config_error("evolution.crossover_probability", "must be in [0,1]");
    if (!probability(evolution.mutation_probability))
        config_error("evolution.mutation_probability", "must be in [0,1]");
    if (!probability(evolution.gene_mutation_probability))
        config_error("evolution.gene_mutation_probability", "must be in [0,1]");
    if (evolution.population_size < 1) config_error("evolution.population_size", "must be >= 1");
    if (evolution.genotype_length < 1) config_error("evolution.genotype_length", "must be >= 1");
    if (evolution.codon_max < 1) config_error("evolution.codon_max", "must be >= 1");
    if (early_stop.enabled && early_stop.period < 1)
        config_error("qlearning.early_stop.period", "must be >= 1");
    if (observation_sigma < 0.0) config_error("observation_sigma", "must be >= 0");
    if (!probability(learner.epsilon.epsilon) || !probability(learner.epsilon.epsilon0))
        config_error("qlearning.epsilon", "epsilon values must be in [0,1]");
    if (learner.epsilon.multiplier <= 0.0 || learner.epsilon.multiplier > 1.0)
        config_error("qlearning.epsilon.multiplier", "must be in (0,1]");
    if (learner.learning_rate.kind == LearningRate::Kind::Constant &&
        learner.learning_rate.alpha <= 0.0)
        config_error("qlearning.learning_rate.alpha", "must be > 0");
    if (learner.discount < 0.0 || learner.discount > 1.0)
        config_error("qlearning.discount", "must be in [0,1]");
}

std::uint64_t run_seed(std::uint64_t seed_base, int run_index) {
    return derive_seed(seed_base, 0x5eed, static_cast<std::uint64_t>(run_index));
}

namespace {

std::unique_ptr<Environment> make_experiment_env(const ExperimentConfig& cfg,
                                                 std::uint64_t noise_seed) {
    auto env = make_env(cfg.environment, cfg.env_max_steps);
    if (cfg.observation_sigma > 0.0)
        return std::make_unique<NoisyObservationEnv>(std::move(env), cfg.observation_sigma,
                                                     noise_seed);
    return env;
}

TreeBuildSpec build_spec_for(const Environment& env, const LearnerConfig& learner) {
    TreeBuildSpec spec;
    auto obs = env.observation_names();
    auto act = env.action_names();
    spec.var_names.assign(obs.begin(), obs.end());
    spec.action_names.assign(act.begin(), act.end());
    const int actions = env.action_count();
    const LeafInit init = learner.init;
    spec.leaf_init = [init, actions](Rng& rng) { return init.make(actions, rng); };
    return spec;
}

}  // namespace

FitnessFn make_fitness_fn(const ExperimentConfig& cfg,
                          std::shared_ptr<const Grammar> grammar) {
    const double floor = decode_failure_fitness(cfg.environment);
    const bool ablation = cfg.family == "ablation";
    return [cfg, grammar, floor, ablation](const Genotype& genotype, Rng& rng) -> FitnessEval {
        DecodeResult decoded = decode(genotype, *grammar);
        if (!decoded.ok()) return FitnessEval{floor, nullptr};
        auto env = make_experiment_env(cfg, rng.next_u64());
        DecisionTree tree =
            build_tree(*decoded.root, *grammar, build_spec_for(*env, cfg.learner), rng);
        double fitness;
        if (ablation) {
            // evolution-only mode: leaves hold fixed actions, no updates
            double total = 0.0;
            for (int e = 0; e < cfg.training_episodes; ++e)
                total += run_episode(tree, *env, EpisodeMode::Greedy, cfg.learner, rng).total_reward;
            fitness = total / cfg.training_episodes;
        } else {
            fitness = train_on_episodes(tree, *env, cfg.training_episodes, cfg.learner,
                                        cfg.early_stop, rng)
                          .fitness;
        }
        return FitnessEval{fitness, std::make_shared<DecisionTree>(std::move(tree))};
    };
}

nlohmann::ordered_json RunRecord::to_json() const {
    nlohmann::ordered_json j;
    j["run_index"] = run_index;
    j["seed"] = seed;
    j["test_seed"] = test_seed;
    j["valid"] = valid;
    if (!valid) j["error"] = error;
    j["training_score"] = training_score;
    j["testing_mean"] = testing_mean;
    j["testing_std"] = testing_std;
    j["interpretability"] = {{"l", report.l},
                             {"n_o", report.n_o},
                             {"n_nao", report.n_nao},
                             {"n_naoc", report.n_naoc},
                             {"M", report.M}};
    j["champion"] = champion;
    j["champion_simplified"] = champion_simplified;
    j["history_file"] = history_file;
    return j;
}

namespace {

std::string run_tag(int index) {
    std::string n = std::to_string(index);
    return std::string(n.size() >= 2 ? 0 : 2 - n.size(), '0') + n;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << text;
}

RunRecord execute_run(const ExperimentConfig& cfg, std::shared_ptr<const Grammar> grammar,
                      int run_index, int evolution_workers, const fs::path& out_dir) {
    RunRecord record;
    record.run_index = run_index;
    record.seed = run_seed(cfg.seed_base, run_index);
    record.test_seed = derive_seed(record.seed, 0x7e57);
    record.history_file = "history_" + run_tag(run_index) + ".jsonl";

    EvolutionConfig evo = cfg.evolution;
    evo.seed = record.seed;
    evo.workers = evolution_workers;

    EvolutionResult result = evolve(evo, make_fitness_fn(cfg, grammar));

    std::string history;
    for (const GenerationStats& g : result.history) {
        nlohmann::ordered_json line;
        line["generation"] = g.generation;
        line["best_fitness"] = g.best_fitness;
        line["mean_fitness"] = g.mean_fitness;
        line["champion_digest"] = g.champion_digest;
        history += line.dump() + "\n";
    }
    write_text(out_dir / record.history_file, history);

    if (!result.champion.tree) {
        record.error = "champion genotype never decoded";
        return record;
    }

    const DecisionTree& champion = *result.champion.tree;
    record.training_score = result.champion.fitness;

    // noise seed chosen so `test --seed <test_seed> --sigma <sigma>` replays this
    auto test_env = make_experiment_env(cfg, derive_seed(record.test_seed, 0x5137, 0));
    const ScoreSummary test =
        evaluate_greedy(champion, *test_env, cfg.test_episodes, record.test_seed);
    record.testing_mean = test.mean;
    record.testing_std = test.stddev;

    auto validation_env = make_experiment_env(cfg, derive_seed(record.seed, 0x0154));
    Rng validation_rng(derive_seed(record.seed, 0x5a11));
    const DecisionTree simplified =
        simplify(champion, *validation_env, cfg.validation_episodes, validation_rng);

    record.report = complexity(simplified);
    record.champion = champion.to_json();
    record.champion_simplified = simplified.to_json();
    record.valid = true;
    return record;
}

std::string runs_csv(const std::vector<RunRecord>& records) {
    std::string csv = "run,seed,training_score,testing_mean,testing_std,l,n_o,n_nao,n_naoc,M\n";
    std::vector<double> training, means, stds, metric;
    for (const RunRecord& r : records) {
        if (!r.valid) {
            csv += std::to_string(r.run_index) + "," + std::to_string(r.seed) + ",error,,,,,,,\n";
            continue;
        }
        csv += std::to_string(r.run_index) + "," + std::to_string(r.seed) + "," +
               format_double(r.training_score) + "," + format_double(r.testing_mean) + "," +
               format_double(r.testing_std) + "," + std::to_string(r.report.l) + "," +
               std::to_string(r.report.n_o) + "," + std::to_string(r.report.n_nao) + "," +
               std::to_string(r.report.n_naoc) + "," + format_double(r.report.M) + "\n";
        training.push_back(r.training_score);
        means.push_back(r.testing_mean);
        stds.push_back(r.testing_std);
        metric.push_back(r.report.M);
    }
    if (!means.empty()) {
        const auto agg = [](const std::vector<double>& v) { return summarize(v); };
        const ScoreSummary st = agg(training), sm = agg(means), ss = agg(stds), sM = agg(metric);
        csv += "mean,," + format_double(st.mean) + "," + format_double(sm.mean) + "," +
               format_double(ss.mean) + ",,,,," + format_double(sM.mean) + "\n";
        csv += "std,," + format_double(st.stddev) + "," + format_double(sm.stddev) + "," +
               format_double(ss.stddev) + ",,,,," + format_double(sM.stddev) + "\n";
    }
    return csv;
}

}  // namespace

std::vector<RunRecord> cmd_train(const ExperimentConfig& cfg, int workers) {
    auto grammar = std::make_shared<const Grammar>(Grammar::parse_file(cfg.grammar_file));
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);

    std::vector<RunRecord> records(static_cast<std::size_t>(cfg.runs));
    // parallelize across runs; a single run hands the workers to the evolution
    const int evolution_workers = cfg.runs == 1 ? workers : 1;
    const int run_workers = cfg.runs == 1 ? 1 : workers;
    parallel_for(static_cast<std::size_t>(cfg.runs), run_workers, [&](std::size_t i) {
        try {
            records[i] = execute_run(cfg, grammar, static_cast<int>(i), evolution_workers, out_dir);
        } catch (const std::exception& e) {
            records[i].run_index = static_cast<int>(i);
            records[i].seed = run_seed(cfg.seed_base, static_cast<int>(i));
            records[i].test_seed = derive_seed(records[i].seed, 0x7e57);
            records[i].valid = false;
            records[i].error = e.what();
        }
    });

    for (const RunRecord& record : records)
        write_text(out_dir / ("run_" + run_tag(record.run_index) + ".json"),
                   record.to_json().dump(2) + "\n");
    write_text(out_dir / "runs.csv", runs_csv(records));
    return records;
}

ScoreSummary cmd_test(const TestOptions& opt) {
    const DecisionTree tree = DecisionTree::load(opt.tree_file);
    auto env = make_env(opt.environment, opt.max_steps);
    std::unique_ptr<Environment> wrapped;
    Environment* target = env.get();
    if (opt.sigma > 0.0) {
        wrapped = std::make_unique<NoisyObservationEnv>(std::move(env), opt.sigma,
                                                        derive_seed(opt.seed, 0x5137, 0));
        target = wrapped.get();
    }
    const ScoreSummary summary = evaluate_greedy(tree, *target, opt.episodes, opt.seed);
    if (!opt.csv_out.empty()) {
        std::string csv = "episode,total_reward,length\n";
        for (std::size_t i = 0; i < summary.scores.size(); ++i)
            csv += std::to_string(i) + "," + format_double(summary.scores[i]) + "," +
                   std::to_string(summary.lengths[i]) + "\n";
        write_text(opt.csv_out, csv);
    }
    return summary;
}

DecisionTree cmd_simplify(const SimplifyOptions& opt) {
    const DecisionTree tree = DecisionTree::load(opt.tree_file);
    auto env = make_env(opt.environment, opt.max_steps);
    Rng rng(derive_seed(opt.seed, 0x5a11));
    DecisionTree simplified = simplify(tree, *env, opt.episodes, rng);
    if (!opt.out_file.empty()) simplified.save(opt.out_file);
    return simplified;
}

InspectResult cmd_inspect(const std::string& tree_file) {
    const DecisionTree tree = DecisionTree::load(tree_file);
    InspectResult result;
    result.pretty = tree.pretty();
    result.dot = tree.to_dot();
    result.report = complexity(tree);
    return result;
}

namespace {

std::vector<double> testing_means_of(const std::string& path) {
    std::vector<double> means;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            const std::string name = entry.path().filename().string();
            if (name.starts_with("run_") && name.ends_with(".json")) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& file : files) {
            std::ifstream in(file);
            nlohmann::json j;
            in >> j;
            if (j.value("valid", false)) means.push_back(j.at("testing_mean").get<double>());
        }
    } else {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open results: " + path);
        nlohmann::json j;
        in >> j;
        if (!j.is_array()) throw std::runtime_error(path + ": expected an array");
        for (const auto& item : j) {
            if (item.is_number())
                means.push_back(item.get<double>());
            else
                means.push_back(item.at("testing_mean").get<double>());
        }
    }
    if (means.empty()) throw std::runtime_error(path + ": no testing means found");
    return means;
}

}  // namespace

TestOutcome cmd_compare(const std::string& results_a, const std::string& results_b,
                        std::vector<double>* means_a, std::vector<double>* means_b) {
    const std::vector<double> a = testing_means_of(results_a);
    const std::vector<double> b = testing_means_of(results_b);
    if (means_a) *means_a = a;
    if (means_b) *means_b = b;
    return mann_whitney_u(a, b);
}

std::string cmd_sweep(const SweepOptions& opt) {
    const DecisionTree tree = DecisionTree::load(opt.tree_file);
    std::string csv;
    if (opt.stability) {
        auto env = make_env(opt.environment, opt.max_steps > 0 ? opt.max_steps : opt.horizon);
        const std::vector<double> trace =
            stability_trace(tree, *env, opt.episodes, opt.horizon, opt.seed);
        csv = "t,mean_distance\n";
        for (std::size_t t = 0; t < trace.size(); ++t)
            csv += std::to_string(t) + "," + format_double(trace[t]) + "\n";
    } else {
        if (opt.sigmas.empty()) throw std::runtime_error("sweep needs --sigmas or --stability");
        auto env = make_env(opt.environment, opt.max_steps);
        const std::vector<SweepPoint> curve =
            noise_sweep(tree, *env, opt.sigmas, opt.episodes, opt.seed);
        csv = "sigma,mean,std\n";
        for (const SweepPoint& p : curve)
            csv += format_double(p.sigma) + "," + format_double(p.mean) + "," +
                   format_double(p.stddev) + "\n";
    }
    if (!opt.csv_out.empty()) write_text(opt.csv_out, csv);
    return csv;
}

}  // namespace getree
