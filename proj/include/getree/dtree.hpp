#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "getree/env.hpp"
#include "getree/grammar.hpp"
#include "getree/rng.hpp"

namespace getree {

enum class Comparator { LessThan, GreaterThan };

// Axis-aligned split: obs[var] <op> threshold.
struct OrthogonalSplit {
    int var = 0;
    Comparator op = Comparator::LessThan;
    double threshold = 0.0;
};

// Linear split: dot(coefficients, obs') < threshold, where obs' is the raw
// observation or, when normalization bounds are present, each dimension
// min-max scaled to [0,1].
struct ObliqueSplit {
    std::vector<double> coefficients;  // one per observation dimension
    double threshold = 0.0;
    bool threshold_is_literal = false;  // threshold fixed by the grammar, not evolved
    std::vector<std::optional<std::pair<double, double>>> normalization;  // empty = none
};

using Condition = std::variant<OrthogonalSplit, ObliqueSplit>;

bool eval_condition(const Condition& condition, std::span<const double> obs);

// Leaf payload: either a Q-table updated during episodes, or a fixed action
// (grammars whose leaves name actions directly, used by the ablation setups).
struct Leaf {
    std::vector<double> q;
    std::vector<std::uint64_t> action_visits;
    std::uint64_t visits = 0;
    std::optional<int> fixed_action;

    int action_count() const { return static_cast<int>(q.size()); }
    double max_q() const;
};

// argmax over Q-values; ties broken uniformly at random from tie_rng.
int greedy_action(const Leaf& leaf, Rng& tie_rng);

struct Node {
    struct Split {
        Condition condition;
        std::unique_ptr<Node> on_true;
        std::unique_ptr<Node> on_false;
    };
    std::variant<Split, Leaf> data;
    std::uint64_t visits = 0;  // maintained by route() when tracking is on

    bool is_leaf() const { return std::holds_alternative<Leaf>(data); }
    Leaf& leaf() { return std::get<Leaf>(data); }
    const Leaf& leaf() const { return std::get<Leaf>(data); }
    Split& split() { return std::get<Split>(data); }
    const Split& split() const { return std::get<Split>(data); }
    std::unique_ptr<Node> clone() const;
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::unique_ptr<Node> root, int observation_dim, int action_count);
    DecisionTree(const DecisionTree& other);
    DecisionTree& operator=(const DecisionTree& other);
    DecisionTree(DecisionTree&&) noexcept = default;
    DecisionTree& operator=(DecisionTree&&) noexcept = default;

    bool empty() const { return root_ == nullptr; }
    Node* root() { return root_.get(); }
    const Node* root() const { return root_.get(); }
    int observation_dim() const { return observation_dim_; }
    int action_count() const { return action_count_; }

    // Walks from the root following condition outcomes to a leaf. Increments
    // node counters when visit tracking is enabled.
    Leaf& route(std::span<const double> obs);
    const Leaf& route_const(std::span<const double> obs) const;

    void set_visit_tracking(bool enabled) { track_visits_ = enabled; }
    bool visit_tracking() const { return track_visits_; }
    void reset_visit_counts();

    // display metadata; empty vectors fall back to generic names
    std::vector<std::string> var_names;
    std::vector<std::string> action_names;

    nlohmann::ordered_json to_json() const;
    static DecisionTree from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static DecisionTree load(const std::string& path);

    std::string pretty() const;
    std::string to_dot() const;

    bool structurally_equal(const DecisionTree& other) const;

private:
    std::unique_ptr<Node> root_;
    int observation_dim_ = 0;
    int action_count_ = 0;
    bool track_visits_ = false;
};

// Expression-level counts used by the interpretability metric:
//   l      constants + variables + operations
//   n_o    all operations
//   n_nao  non-arithmetical operations (if dispatches and comparisons)
//   n_naoc non-arithmetical operations adjacent to another one in the
//          expression tree (members of consecutive compositions)
struct ExpressionStats {
    long l = 0;
    long n_o = 0;
    long n_nao = 0;
    long n_naoc = 0;
};

ExpressionStats to_expression_stats(const DecisionTree& tree);

// Post-hoc pruning: runs the greedy policy for `episodes` validation episodes
// with visit tracking, removes subtrees that were never visited, then merges
// any split whose two children are leaves with the same greedy action. The
// input tree is not modified.
DecisionTree simplify(const DecisionTree& tree, Environment& validation_env, int episodes,
                      Rng& rng);

// ---- genotype-to-tree construction -----------------------------------------

struct TreeBuildSpec {
    std::vector<std::string> var_names;     // observation order
    std::vector<std::string> action_names;  // action id order
    // Returns initial Q-values for a fresh leaf (one per action).
    std::function<std::vector<double>(Rng&)> leaf_init;
};

// Interprets a decoded derivation as a decision tree. Recognized shapes are
// the ones used by the shipped grammars: `if <condition> then .. else ..`,
// orthogonal conditions `var <comp_op> <const>`, oblique conditions
// `lt ( <const> * var + ... , <threshold> )`, `leaf` Q-leaves, and bare
// action-name leaves. Throws std::runtime_error on grammars it cannot map.
DecisionTree build_tree(const Derivation& derivation, const Grammar& grammar,
                        const TreeBuildSpec& spec, Rng& rng);

}  // namespace getree
