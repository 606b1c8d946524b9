#include "getree/dtree.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace getree {

namespace {

std::string dtos(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

bool parse_double(std::string_view text, double& out) {
    std::string owned(text);
    const char* begin = owned.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + owned.size() && !owned.empty();
}

}  // namespace

bool eval_condition(const Condition& condition, std::span<const double> obs) {
    if (const auto* orth = std::get_if<OrthogonalSplit>(&condition)) {
        if (orth->var < 0 || orth->var >= static_cast<int>(obs.size()))
            throw std::invalid_argument("orthogonal split variable out of range");
        const double x = obs[static_cast<std::size_t>(orth->var)];
        return orth->op == Comparator::LessThan ? x < orth->threshold : x > orth->threshold;
    }
    const auto& obl = std::get<ObliqueSplit>(condition);
    if (obl.coefficients.size() != obs.size())
        throw std::invalid_argument("oblique split dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        double x = obs[i];
        if (i < obl.normalization.size() && obl.normalization[i]) {
            const auto [lo, hi] = *obl.normalization[i];
            x = (x - lo) / (hi - lo);
        }
        dot += obl.coefficients[i] * x;
    }
    return dot < obl.threshold;
}

double Leaf::max_q() const {
    double best = q.empty() ? 0.0 : q[0];
    for (double v : q) best = std::max(best, v);
    return best;
}

int greedy_action(const Leaf& leaf, Rng& tie_rng) {
    if (leaf.fixed_action) return *leaf.fixed_action;
    if (leaf.q.empty()) throw std::logic_error("leaf has no actions");
    const double best = *std::max_element(leaf.q.begin(), leaf.q.end());
    int ties = 0;
    for (double v : leaf.q)
        if (v == best) ++ties;
    if (ties == 1)
        return static_cast<int>(std::max_element(leaf.q.begin(), leaf.q.end()) - leaf.q.begin());
    std::uint32_t pick = tie_rng.below(static_cast<std::uint32_t>(ties));
    for (std::size_t i = 0; i < leaf.q.size(); ++i)
        if (leaf.q[i] == best && pick-- == 0) return static_cast<int>(i);
    return 0;  // unreachable
}

namespace {

// First-index argmax: the deterministic reading of a leaf used for structural
// decisions (merging in simplify, printing).
int structural_action(const Leaf& leaf) {
    if (leaf.fixed_action) return *leaf.fixed_action;
    return static_cast<int>(std::max_element(leaf.q.begin(), leaf.q.end()) - leaf.q.begin());
}

}  // namespace

std::unique_ptr<Node> Node::clone() const {
    auto out = std::make_unique<Node>();
    out->visits = visits;
    if (is_leaf()) {
        out->data = leaf();
    } else {
        const Split& s = split();
        out->data = Node::Split{s.condition, s.on_true->clone(), s.on_false->clone()};
    }
    return out;
}

DecisionTree::DecisionTree(std::unique_ptr<Node> root, int observation_dim, int action_count)
    : root_(std::move(root)), observation_dim_(observation_dim), action_count_(action_count) {}

DecisionTree::DecisionTree(const DecisionTree& other)
    : var_names(other.var_names),
      action_names(other.action_names),
      root_(other.root_ ? other.root_->clone() : nullptr),
      observation_dim_(other.observation_dim_),
      action_count_(other.action_count_),
      track_visits_(other.track_visits_) {}

DecisionTree& DecisionTree::operator=(const DecisionTree& other) {
    if (this != &other) {
        root_ = other.root_ ? other.root_->clone() : nullptr;
        observation_dim_ = other.observation_dim_;
        action_count_ = other.action_count_;
        track_visits_ = other.track_visits_;
        var_names = other.var_names;
        action_names = other.action_names;
    }
    return *this;
}

Leaf& DecisionTree::route(std::span<const double> obs) {
    if (!root_) throw std::logic_error("routing an empty tree");
    if (static_cast<int>(obs.size()) != observation_dim_)
        throw std::invalid_argument("observation dimension mismatch");
    Node* node = root_.get();
    for (;;) {
        if (track_visits_) ++node->visits;
        if (node->is_leaf()) return node->leaf();
        Node::Split& s = node->split();
        node = eval_condition(s.condition, obs) ? s.on_true.get() : s.on_false.get();
    }
}

const Leaf& DecisionTree::route_const(std::span<const double> obs) const {
    if (!root_) throw std::logic_error("routing an empty tree");
    if (static_cast<int>(obs.size()) != observation_dim_)
        throw std::invalid_argument("observation dimension mismatch");
    const Node* node = root_.get();
    while (!node->is_leaf()) {
        const Node::Split& s = node->split();
        node = eval_condition(s.condition, obs) ? s.on_true.get() : s.on_false.get();
    }
    return node->leaf();
}

namespace {

void reset_counts(Node& node) {
    node.visits = 0;
    if (!node.is_leaf()) {
        reset_counts(*node.split().on_true);
        reset_counts(*node.split().on_false);
    }
}

}  // namespace

void DecisionTree::reset_visit_counts() {
    if (root_) reset_counts(*root_);
}

// ---- serialization ----------------------------------------------------------

namespace {

nlohmann::ordered_json condition_to_json(const Condition& c) {
    nlohmann::ordered_json j;
    if (const auto* orth = std::get_if<OrthogonalSplit>(&c)) {
        j["type"] = "orthogonal";
        j["var"] = orth->var;
        j["op"] = orth->op == Comparator::LessThan ? "lt" : "gt";
        j["threshold"] = orth->threshold;
    } else {
        const auto& obl = std::get<ObliqueSplit>(c);
        j["type"] = "oblique";
        j["coefficients"] = obl.coefficients;
        j["threshold"] = obl.threshold;
        if (obl.threshold_is_literal) j["threshold_literal"] = true;
        bool any_norm = false;
        for (const auto& n : obl.normalization) any_norm |= n.has_value();
        if (any_norm) {
            nlohmann::ordered_json norm = nlohmann::ordered_json::array();
            for (const auto& n : obl.normalization) {
                if (n)
                    norm.push_back({n->first, n->second});
                else
                    norm.push_back(nullptr);
            }
            j["normalization"] = std::move(norm);
        }
    }
    return j;
}

Condition condition_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type");
    if (type == "orthogonal") {
        OrthogonalSplit s;
        s.var = j.at("var");
        s.op = j.at("op") == "gt" ? Comparator::GreaterThan : Comparator::LessThan;
        s.threshold = j.at("threshold");
        return s;
    }
    if (type != "oblique") throw std::runtime_error("unknown condition type: " + type);
    ObliqueSplit s;
    s.coefficients = j.at("coefficients").get<std::vector<double>>();
    s.threshold = j.at("threshold");
    s.threshold_is_literal = j.value("threshold_literal", false);
    if (j.contains("normalization")) {
        for (const auto& n : j.at("normalization")) {
            if (n.is_null()) {
                s.normalization.push_back(std::nullopt);
            } else {
                double lo = n.at(0), hi = n.at(1);
                if (!(lo < hi)) throw std::runtime_error("normalization bounds must satisfy low < high");
                s.normalization.emplace_back(std::in_place, lo, hi);
            }
        }
    }
    return s;
}

nlohmann::ordered_json node_to_json(const Node& node) {
    nlohmann::ordered_json j;
    if (node.is_leaf()) {
        const Leaf& leaf = node.leaf();
        j["kind"] = "leaf";
        if (leaf.fixed_action) {
            j["action"] = *leaf.fixed_action;
        } else {
            j["q"] = leaf.q;
            j["visits"] = leaf.visits;
            j["action_visits"] = leaf.action_visits;
        }
    } else {
        j["kind"] = "split";
        j["condition"] = condition_to_json(node.split().condition);
        j["visits"] = node.visits;
        j["true"] = node_to_json(*node.split().on_true);
        j["false"] = node_to_json(*node.split().on_false);
    }
    return j;
}

std::unique_ptr<Node> node_from_json(const nlohmann::json& j, int action_count) {
    auto node = std::make_unique<Node>();
    const std::string kind = j.at("kind");
    if (kind == "leaf") {
        Leaf leaf;
        if (j.contains("action")) {
            leaf.fixed_action = j.at("action").get<int>();
            leaf.q.assign(static_cast<std::size_t>(action_count), 0.0);
            leaf.action_visits.assign(static_cast<std::size_t>(action_count), 0);
        } else {
            leaf.q = j.at("q").get<std::vector<double>>();
            leaf.visits = j.value("visits", std::uint64_t{0});
            if (j.contains("action_visits"))
                leaf.action_visits = j.at("action_visits").get<std::vector<std::uint64_t>>();
            else
                leaf.action_visits.assign(leaf.q.size(), 0);
        }
        node->data = std::move(leaf);
    } else if (kind == "split") {
        Node::Split s;
        s.condition = condition_from_json(j.at("condition"));
        s.on_true = node_from_json(j.at("true"), action_count);
        s.on_false = node_from_json(j.at("false"), action_count);
        node->data = std::move(s);
        node->visits = j.value("visits", std::uint64_t{0});
    } else {
        throw std::runtime_error("unknown node kind: " + kind);
    }
    return node;
}

}  // namespace

nlohmann::ordered_json DecisionTree::to_json() const {
    nlohmann::ordered_json j;
    j["observation_dim"] = observation_dim_;
    j["action_count"] = action_count_;
    if (!var_names.empty()) j["var_names"] = var_names;
    if (!action_names.empty()) j["action_names"] = action_names;
    j["root"] = root_ ? node_to_json(*root_) : nlohmann::ordered_json(nullptr);
    return j;
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j) {
    DecisionTree tree;
    tree.observation_dim_ = j.at("observation_dim");
    tree.action_count_ = j.at("action_count");
    if (j.contains("var_names")) tree.var_names = j.at("var_names").get<std::vector<std::string>>();
    if (j.contains("action_names"))
        tree.action_names = j.at("action_names").get<std::vector<std::string>>();
    if (!j.at("root").is_null()) tree.root_ = node_from_json(j.at("root"), tree.action_count_);
    return tree;
}

void DecisionTree::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tree file: " + path);
    out << to_json().dump(2) << "\n";
}

DecisionTree DecisionTree::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tree file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

// ---- printing ---------------------------------------------------------------

namespace {

std::string var_label(const std::vector<std::string>& names, int i) {
    if (i >= 0 && i < static_cast<int>(names.size())) return names[static_cast<std::size_t>(i)];
    return "x" + std::to_string(i);
}

std::string action_label(const std::vector<std::string>& names, int a) {
    if (a >= 0 && a < static_cast<int>(names.size())) return names[static_cast<std::size_t>(a)];
    return "action_" + std::to_string(a);
}

std::string condition_text(const Condition& c, const std::vector<std::string>& var_names) {
    if (const auto* orth = std::get_if<OrthogonalSplit>(&c)) {
        return var_label(var_names, orth->var) +
               (orth->op == Comparator::LessThan ? " < " : " > ") + dtos(orth->threshold);
    }
    const auto& obl = std::get<ObliqueSplit>(c);
    std::string out;
    for (std::size_t i = 0; i < obl.coefficients.size(); ++i) {
        if (obl.coefficients[i] == 0.0) continue;  // omit vanished terms
        if (!out.empty()) out += " + ";
        std::string var = var_label(var_names, static_cast<int>(i));
        if (i < obl.normalization.size() && obl.normalization[i]) var = "hat_" + var;
        out += dtos(obl.coefficients[i]) + "*" + var;
    }
    if (out.empty()) out = "0";
    out += " < " + dtos(obl.threshold);
    return out;
}

void pretty_node(const Node& node, const DecisionTree& tree, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (node.is_leaf()) {
        out += pad + action_label(tree.action_names, structural_action(node.leaf())) + "\n";
        return;
    }
    out += pad + "if " + condition_text(node.split().condition, tree.var_names) + " then\n";
    pretty_node(*node.split().on_true, tree, depth + 1, out);
    out += pad + "else\n";
    pretty_node(*node.split().on_false, tree, depth + 1, out);
}

int dot_node(const Node& node, const DecisionTree& tree, std::string& out, int& next_id) {
    const int id = next_id++;
    if (node.is_leaf()) {
        out += "  n" + std::to_string(id) + " [shape=ellipse, label=\"" +
               action_label(tree.action_names, structural_action(node.leaf())) + "\"];\n";
        return id;
    }
    out += "  n" + std::to_string(id) + " [shape=box, label=\"" +
           condition_text(node.split().condition, tree.var_names) + "\"];\n";
    const int t = dot_node(*node.split().on_true, tree, out, next_id);
    const int f = dot_node(*node.split().on_false, tree, out, next_id);
    out += "  n" + std::to_string(id) + " -> n" + std::to_string(t) + " [label=\"true\"];\n";
    out += "  n" + std::to_string(id) + " -> n" + std::to_string(f) + " [label=\"false\"];\n";
    return id;
}

}  // namespace

std::string DecisionTree::pretty() const {
    if (!root_) return "(empty tree)\n";
    std::string out;
    pretty_node(*root_, *this, 0, out);
    return out;
}

std::string DecisionTree::to_dot() const {
    std::string out = "digraph decision_tree {\n";
    if (root_) {
        int next_id = 0;
        dot_node(*root_, *this, out, next_id);
    }
    out += "}\n";
    return out;
}

namespace {

bool nodes_equal(const Node& a, const Node& b) {
    if (a.is_leaf() != b.is_leaf()) return false;
    if (a.is_leaf()) {
        const Leaf &la = a.leaf(), &lb = b.leaf();
        return la.q == lb.q && la.fixed_action == lb.fixed_action;
    }
    const Node::Split &sa = a.split(), &sb = b.split();
    if (sa.condition.index() != sb.condition.index()) return false;
    if (const auto* oa = std::get_if<OrthogonalSplit>(&sa.condition)) {
        const auto& ob = std::get<OrthogonalSplit>(sb.condition);
        if (oa->var != ob.var || oa->op != ob.op || oa->threshold != ob.threshold) return false;
    } else {
        const auto &qa = std::get<ObliqueSplit>(sa.condition),
                   &qb = std::get<ObliqueSplit>(sb.condition);
        if (qa.coefficients != qb.coefficients || qa.threshold != qb.threshold ||
            qa.normalization != qb.normalization)
            return false;
    }
    return nodes_equal(*sa.on_true, *sb.on_true) && nodes_equal(*sa.on_false, *sb.on_false);
}

}  // namespace

bool DecisionTree::structurally_equal(const DecisionTree& other) const {
    if (!root_ || !other.root_) return root_ == other.root_;
    return observation_dim_ == other.observation_dim_ &&
           action_count_ == other.action_count_ && nodes_equal(*root_, *other.root_);
}

// ---- expression statistics --------------------------------------------------

namespace {

struct Counts {
    long constants = 0;
    long variables = 0;
    long arithmetic = 0;
    long comparisons = 0;
    long ifs = 0;
};

void count_node(const Node& node, Counts& c) {
    if (node.is_leaf()) {
        c.constants += 1;  // the action held by the leaf
        return;
    }
    c.ifs += 1;
    const Condition& cond = node.split().condition;
    if (std::holds_alternative<OrthogonalSplit>(cond)) {
        c.comparisons += 1;
        c.variables += 1;
        c.constants += 1;
    } else {
        const auto& obl = std::get<ObliqueSplit>(cond);
        long terms = 0, normalized_terms = 0;
        for (std::size_t i = 0; i < obl.coefficients.size(); ++i) {
            if (obl.coefficients[i] == 0.0) continue;
            ++terms;
            if (i < obl.normalization.size() && obl.normalization[i]) ++normalized_terms;
        }
        c.comparisons += 1;
        c.variables += terms;
        c.constants += terms + 1;                      // coefficients and threshold
        c.arithmetic += terms;                         // multiplications
        c.arithmetic += std::max(terms - 1, 0L);       // additions
        c.arithmetic += 2 * normalized_terms;          // (x - low) / span per normalized use
    }
    count_node(*node.split().on_true, c);
    count_node(*node.split().on_false, c);
}

}  // namespace

ExpressionStats to_expression_stats(const DecisionTree& tree) {
    Counts c;
    if (tree.root()) count_node(*tree.root(), c);
    ExpressionStats stats;
    stats.n_nao = c.ifs + c.comparisons;
    stats.n_o = stats.n_nao + c.arithmetic;
    stats.l = c.constants + c.variables + stats.n_o;
    // Every if dispatches on its comparison, so whenever the tree has a split
    // at all, each non-arithmetical operation sits next to another one and the
    // whole set participates in consecutive compositions.
    stats.n_naoc = stats.n_nao > 0 ? stats.n_nao : 0;
    return stats;
}

// ---- simplification ---------------------------------------------------------

namespace {

std::unique_ptr<Node> prune_unvisited(std::unique_ptr<Node> node) {
    if (node->is_leaf() || node->visits == 0) return node;
    Node::Split& s = node->split();
    s.on_true = prune_unvisited(std::move(s.on_true));
    s.on_false = prune_unvisited(std::move(s.on_false));
    if (s.on_true->visits == 0 && s.on_false->visits > 0) return std::move(s.on_false);
    if (s.on_false->visits == 0 && s.on_true->visits > 0) return std::move(s.on_true);
    return node;
}

std::unique_ptr<Node> merge_same_action(std::unique_ptr<Node> node, int action_count) {
    if (node->is_leaf()) return node;
    Node::Split& s = node->split();
    s.on_true = merge_same_action(std::move(s.on_true), action_count);
    s.on_false = merge_same_action(std::move(s.on_false), action_count);
    if (s.on_true->is_leaf() && s.on_false->is_leaf()) {
        const int a_true = structural_action(s.on_true->leaf());
        const int a_false = structural_action(s.on_false->leaf());
        if (a_true == a_false) {
            auto merged = std::make_unique<Node>();
            Leaf leaf;
            leaf.q.assign(static_cast<std::size_t>(action_count), 0.0);
            leaf.action_visits.assign(static_cast<std::size_t>(action_count), 0);
            leaf.fixed_action = a_true;
            merged->data = std::move(leaf);
            merged->visits = s.on_true->visits + s.on_false->visits;
            return merged;
        }
    }
    return node;
}

}  // namespace

DecisionTree simplify(const DecisionTree& tree, Environment& validation_env, int episodes,
                      Rng& rng) {
    if (tree.empty()) return tree;
    DecisionTree work(tree);
    work.reset_visit_counts();
    work.set_visit_tracking(true);
    std::vector<double> obs;
    for (int e = 0; e < episodes; ++e) {
        auto view = validation_env.reset(rng);
        obs.assign(view.begin(), view.end());
        for (;;) {
            Leaf& leaf = work.route(obs);
            StepResult result = validation_env.step(greedy_action(leaf, rng));
            obs.assign(result.observation.begin(), result.observation.end());
            if (result.done) break;
        }
    }
    work.set_visit_tracking(false);

    auto root = std::unique_ptr<Node>(work.root() ? work.root()->clone() : nullptr);
    root = prune_unvisited(std::move(root));
    root = merge_same_action(std::move(root), tree.action_count());
    DecisionTree out(std::move(root), tree.observation_dim(), tree.action_count());
    out.var_names = tree.var_names;
    out.action_names = tree.action_names;
    return out;
}

// ---- tree construction from a derivation ------------------------------------

namespace {

struct ResolvedToken {
    std::string text;
    bool derived = false;  // came from a nonterminal expansion
};

struct VarRef {
    int index = -1;
    std::optional<std::pair<double, double>> normalization;
};

struct TreeBuilder {
    const Grammar& grammar;
    const TreeBuildSpec& spec;
    Rng& rng;

    int var_lookup(const std::string& name) const {
        for (std::size_t i = 0; i < spec.var_names.size(); ++i)
            if (spec.var_names[i] == name) return static_cast<int>(i);
        return -1;
    }

    int action_lookup(const std::string& name) const {
        for (std::size_t i = 0; i < spec.action_names.size(); ++i)
            if (spec.action_names[i] == name) return static_cast<int>(i);
        return -1;
    }

    // hat(name,low,high) marks a min-max-normalized variable use
    std::optional<VarRef> parse_var(const std::string& token) const {
        if (token.starts_with("hat(") && token.ends_with(")")) {
            std::string inner = token.substr(4, token.size() - 5);
            std::size_t c1 = inner.find(',');
            std::size_t c2 = inner.find(',', c1 == std::string::npos ? 0 : c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw std::runtime_error("malformed normalized variable: " + token);
            VarRef ref;
            ref.index = var_lookup(inner.substr(0, c1));
            double lo = 0, hi = 0;
            if (ref.index < 0 || !parse_double(inner.substr(c1 + 1, c2 - c1 - 1), lo) ||
                !parse_double(inner.substr(c2 + 1), hi) || !(lo < hi))
                throw std::runtime_error("malformed normalized variable: " + token);
            ref.normalization = {lo, hi};
            return ref;
        }
        int idx = var_lookup(token);
        if (idx < 0) return std::nullopt;
        return VarRef{idx, std::nullopt};
    }

    std::vector<ResolvedToken> resolve(const Derivation& d) const {
        const Rule& rule = grammar.rules()[static_cast<std::size_t>(d.rule)];
        const Production& prod = rule.productions[static_cast<std::size_t>(d.production)];
        std::vector<ResolvedToken> tokens;
        std::size_t child = 0;
        for (const Symbol& sym : prod) {
            if (sym.is_rule())
                tokens.push_back({derivation_text(*d.children[child++], grammar), true});
            else
                tokens.push_back({sym.text, false});
        }
        return tokens;
    }

    Leaf make_qleaf() {
        Leaf leaf;
        leaf.q = spec.leaf_init(rng);
        if (leaf.q.size() != spec.action_names.size())
            throw std::runtime_error("leaf initializer returned wrong action count");
        leaf.action_visits.assign(leaf.q.size(), 0);
        return leaf;
    }

    Leaf make_action_leaf(int action) {
        Leaf leaf;
        leaf.q.assign(spec.action_names.size(), 0.0);
        leaf.action_visits.assign(leaf.q.size(), 0);
        leaf.fixed_action = action;
        return leaf;
    }

    Condition build_condition(const Derivation& d) {
        const Rule& rule = grammar.rules()[static_cast<std::size_t>(d.rule)];
        const Production& prod = rule.productions[static_cast<std::size_t>(d.production)];
        if (prod.size() == 1 && prod[0].is_rule()) return build_condition(*d.children[0]);

        std::vector<ResolvedToken> tokens = resolve(d);
        // orthogonal shape: var comp_op const
        if (tokens.size() == 3) {
            if (auto var = parse_var(tokens[0].text); var && !var->normalization) {
                OrthogonalSplit s;
                s.var = var->index;
                if (tokens[1].text == "lt")
                    s.op = Comparator::LessThan;
                else if (tokens[1].text == "gt")
                    s.op = Comparator::GreaterThan;
                else
                    throw std::runtime_error("unknown comparison operator: " + tokens[1].text);
                if (!parse_double(tokens[2].text, s.threshold))
                    throw std::runtime_error("bad threshold token: " + tokens[2].text);
                return s;
            }
        }
        // oblique shape: lt ( const * var + ... , threshold )
        if (!tokens.empty() && tokens[0].text == "lt") {
            ObliqueSplit s;
            s.coefficients.assign(spec.var_names.size(), 0.0);
            s.normalization.assign(spec.var_names.size(), std::nullopt);
            double pending = 0.0;
            bool has_pending = false;
            bool after_comma = false;
            bool threshold_set = false;
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                const std::string& t = tokens[i].text;
                if (t == "(" || t == ")" || t == "*" || t == "+") continue;
                if (t == ",") {
                    after_comma = true;
                    continue;
                }
                if (auto var = parse_var(t)) {
                    if (!has_pending)
                        throw std::runtime_error("variable '" + t + "' has no coefficient");
                    s.coefficients[static_cast<std::size_t>(var->index)] = pending;
                    s.normalization[static_cast<std::size_t>(var->index)] = var->normalization;
                    has_pending = false;
                    continue;
                }
                double value = 0;
                if (!parse_double(t, value))
                    throw std::runtime_error("unexpected token in oblique condition: " + t);
                if (after_comma) {
                    s.threshold = value;
                    s.threshold_is_literal = !tokens[i].derived;
                    threshold_set = true;
                } else {
                    pending = value;
                    has_pending = true;
                }
            }
            if (!threshold_set) throw std::runtime_error("oblique condition has no threshold");
            return s;
        }
        throw std::runtime_error("rule '" + rule.name + "' is not a recognizable condition");
    }

    std::unique_ptr<Node> build_node(const Derivation& d) {
        const Rule& rule = grammar.rules()[static_cast<std::size_t>(d.rule)];
        const Production& prod = rule.productions[static_cast<std::size_t>(d.production)];
        if (prod.size() == 1 && prod[0].is_rule()) return build_node(*d.children[0]);
        auto node = std::make_unique<Node>();
        if (prod.size() == 1) {
            const std::string& tok = prod[0].text;
            if (tok == "leaf") {
                node->data = make_qleaf();
                return node;
            }
            if (int a = action_lookup(tok); a >= 0) {
                node->data = make_action_leaf(a);
                return node;
            }
            throw std::runtime_error("terminal '" + tok + "' is neither 'leaf' nor an action");
        }
        if (!prod[0].is_rule() && prod[0].text == "if") {
            if (d.children.size() != 3)
                throw std::runtime_error("rule '" + rule.name +
                                         "' does not look like 'if C then A else A'");
            Node::Split split;
            split.condition = build_condition(*d.children[0]);
            split.on_true = build_node(*d.children[1]);
            split.on_false = build_node(*d.children[2]);
            node->data = std::move(split);
            return node;
        }
        throw std::runtime_error("cannot interpret rule '" + rule.name + "' as a tree node");
    }
};

}  // namespace

DecisionTree build_tree(const Derivation& derivation, const Grammar& grammar,
                        const TreeBuildSpec& spec, Rng& rng) {
    TreeBuilder builder{grammar, spec, rng};
    DecisionTree tree(builder.build_node(derivation), static_cast<int>(spec.var_names.size()),
                      static_cast<int>(spec.action_names.size()));
    tree.var_names = spec.var_names;
    tree.action_names = spec.action_names;
    return tree;
}

}  // namespace getree
