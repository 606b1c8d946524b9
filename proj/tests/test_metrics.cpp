#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "getree/envs.hpp"
#include "getree/metrics.hpp"
#include "getree/runner.hpp"

using namespace getree;

namespace {

std::string fixture(const std::string& name) {
    return std::string(GETREE_SOURCE_DIR) + "/fixtures/" + name;
}

// independent enumeration oracle: two-tailed exact p over all C(n+m, n)
// assignments of the pooled values (assumes no ties)
double exact_p_oracle(std::vector<double> a, std::vector<double> b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const std::size_t n = pooled.size(), n_a = a.size();
    // U of the observed assignment
    double u_obs = 0;
    for (double x : a)
        for (double y : b) u_obs += x > y ? 1.0 : 0.0;
    const double mu = static_cast<double>(n_a) * static_cast<double>(b.size()) / 2.0;
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<long>(n_a), true);
    std::sort(mask.begin(), mask.end());
    long total = 0, extreme = 0;
    do {
        std::vector<double> group_a, group_b;
        for (std::size_t i = 0; i < n; ++i)
            (mask[i] ? group_a : group_b).push_back(pooled[i]);
        double u = 0;
        for (double x : group_a)
            for (double y : group_b) u += x > y ? 1.0 : 0.0;
        ++total;
        if (std::abs(u - mu) >= std::abs(u_obs - mu) - 1e-12) ++extreme;
    } while (std::next_permutation(mask.begin(), mask.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

DecisionTree leaf_only_tree() {
    auto node = std::make_unique<Node>();
    Leaf leaf;
    leaf.q = {0.2, 0.8};
    leaf.action_visits = {0, 0};
    node->data = std::move(leaf);
    return DecisionTree(std::move(node), 4, 2);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("a constant leaf scores exactly zero") {
    const InterpretabilityReport report = complexity(leaf_only_tree());
    CHECK(report.l == 1);
    CHECK(report.n_o == 0);
    CHECK(report.M == 0.0);
}

TEST_CASE("the calibrated convention scores the reference champions") {
    SUBCASE("one-split oblique tree") {
        const auto tree = DecisionTree::load(fixture("cartpole_oblique_best.json"));
        const InterpretabilityReport report = complexity(tree);
        CHECK(report.l == 20);
        CHECK(report.n_o == 9);
        CHECK(report.n_nao == 2);
        CHECK(report.n_naoc == 2);
        CHECK(report.M == doctest::Approx(24.10).epsilon(1e-9));
    }
    SUBCASE("two-split orthogonal tree") {
        const auto tree = DecisionTree::load(fixture("cartpole_orthogonal_best.json"));
        const InterpretabilityReport report = complexity(tree);
        CHECK(report.l == 11);
        CHECK(report.n_o == 4);
        CHECK(report.n_nao == 4);
        CHECK(report.n_naoc == 4);
        CHECK(report.M == doctest::Approx(35.60).epsilon(1e-9));
    }
    SUBCASE("six-split orthogonal mountain-car tree") {
        const auto tree = DecisionTree::load(fixture("mountaincar_orthogonal_best.json"));
        CHECK(complexity(tree).M == doctest::Approx(106.80).epsilon(1e-9));
    }
    SUBCASE("two-split normalized oblique mountain-car tree") {
        const auto tree = DecisionTree::load(fixture("mountaincar_oblique_best.json"));
        CHECK(complexity(tree).M == doctest::Approx(46.60).epsilon(1e-9));
    }
}

TEST_CASE("the metric follows the formula bit for bit") {
    for (const char* name : {"cartpole_oblique_best.json", "mountaincar_orthogonal_best.json",
                             "lunarlander_oblique_best.json"}) {
        const auto tree = DecisionTree::load(fixture(name));
        const InterpretabilityReport r = complexity(tree);
        CHECK(r.M == -0.2 + 0.2 * static_cast<double>(r.l) + 0.5 * static_cast<double>(r.n_o) +
                         3.4 * static_cast<double>(r.n_nao) + 4.5 * static_cast<double>(r.n_naoc));
    }
}

TEST_CASE("adding a split raises M by at least its own weight") {
    auto tree = DecisionTree::load(fixture("cartpole_orthogonal_best.json"));
    const double before = complexity(tree).M;
    // graft one more orthogonal split onto the false branch
    auto grafted = std::make_unique<Node>();
    Leaf l1, l2;
    l1.q = {1, 0};
    l2.q = {0, 1};
    l1.action_visits = l2.action_visits = {0, 0};
    auto t = std::make_unique<Node>();
    t->data = std::move(l1);
    auto f = std::make_unique<Node>();
    f->data = std::move(l2);
    grafted->data = Node::Split{OrthogonalSplit{0, Comparator::LessThan, 0.5}, std::move(t),
                                std::move(f)};
    tree.root()->split().on_false = std::move(grafted);
    const double after = complexity(tree).M;
    CHECK(after - before >= 0.2 + 0.5 + 3.4);
}

TEST_CASE("identical samples carry no evidence") {
    const std::vector<double> a{1, 2, 3, 4};
    const TestOutcome outcome = mann_whitney_u(a, a);
    CHECK(outcome.p_value == 1.0);
}

TEST_CASE("exact p for {1,2} vs {3,4} is 1/3") {
    const std::vector<double> a{1, 2}, b{3, 4};
    const TestOutcome outcome = mann_whitney_u(a, b);
    CHECK(outcome.method == TestOutcome::Method::Exact);
    CHECK(outcome.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(outcome.p_value == doctest::Approx(exact_p_oracle(a, b)).epsilon(1e-12));
    // two-tailed p is symmetric in the samples
    CHECK(mann_whitney_u(b, a).p_value == doctest::Approx(outcome.p_value).epsilon(1e-12));
}

TEST_CASE("exact p for {1..8} vs {9..16} is 2/C(16,8)") {
    std::vector<double> a(8), b(8);
    std::iota(a.begin(), a.end(), 1.0);
    std::iota(b.begin(), b.end(), 9.0);
    const TestOutcome outcome = mann_whitney_u(a, b);
    CHECK(outcome.method == TestOutcome::Method::Exact);
    CHECK(outcome.p_value == doctest::Approx(2.0 / 12870.0).epsilon(1e-12));
    CHECK(outcome.p_value == doctest::Approx(1.554e-4).epsilon(1e-3));
}

TEST_CASE("a 10-vs-10 comparison stays in the exact regime") {
    Rng rng(88);
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back(rng.uniform(0, 1));
        b.push_back(rng.uniform(0.2, 1.2));
    }
    CHECK(mann_whitney_u(a, b).method == TestOutcome::Method::Exact);
}

TEST_CASE("normal approximation tracks the exact test on tie-free samples") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 5 + trial % 4;  // sizes 5..8
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.push_back(rng.uniform(0, 1));
            b.push_back(rng.uniform(0.1, 1.1));
        }
        const double exact = mann_whitney_u(a, b, MannWhitneyMode::Exact).p_value;
        const double approx =
            mann_whitney_u(a, b, MannWhitneyMode::NormalApproximation).p_value;
        CHECK(std::abs(exact - approx) < 0.02);
    }
}

TEST_CASE("ties are handled through midranks") {
    const std::vector<double> a{1, 1, 2}, b{1, 2, 3};
    const TestOutcome outcome = mann_whitney_u(a, b);
    CHECK(outcome.p_value > 0.0);
    CHECK(outcome.p_value <= 1.0);
    // fully tied data in the approximation path degenerates to p = 1
    const std::vector<double> flat_a(40, 5.0), flat_b(45, 5.0);
    const TestOutcome flat = mann_whitney_u(flat_a, flat_b);
    CHECK(flat.p_value == 1.0);
}

TEST_CASE("noise sweep at sigma 0 equals the plain greedy evaluation") {
    const auto tree = DecisionTree::load(fixture("cartpole_orthogonal_best.json"));
    CartPoleEnv env;
    const std::array<double, 1> sigmas{0.0};
    const auto curve = noise_sweep(tree, env, sigmas, 20, 515);
    CartPoleEnv clean;
    const ScoreSummary summary = evaluate_greedy(tree, clean, 20, 515);
    CHECK(curve[0].mean == summary.mean);
    CHECK(curve[0].stddev == summary.stddev);
}

TEST_CASE("the oblique champion resists small noise and fails under heavy noise") {
    const auto tree = DecisionTree::load(fixture("cartpole_oblique_best.json"));
    CartPoleEnv env;
    const std::array<double, 3> sigmas{0.0, 0.005, 1.0};
    const auto curve = noise_sweep(tree, env, sigmas, 30, 616);
    CHECK(curve[0].mean == doctest::Approx(500.0));
    CHECK(curve[1].mean >= 450.0);        // sigma at 5x the constant step
    CHECK(curve[2].mean < curve[0].mean); // heavy noise costs performance
}

TEST_CASE("the orthogonal mountain-car champion is noise-fragile") {
    const auto tree = DecisionTree::load(fixture("mountaincar_orthogonal_best.json"));
    MountainCarEnv env;
    const std::array<double, 3> sigmas{0.0, 0.05, 0.1};
    const auto curve = noise_sweep(tree, env, sigmas, 30, 717);
    // visible degradation already at the smallest nonzero sigma
    CHECK(curve[1].mean < curve[0].mean - 5.0);
    CHECK(curve[2].mean < curve[0].mean - 5.0);
}

TEST_CASE("stability trace bookkeeping") {
    // an environment pinned at the zero state gives an all-zero trace
    class PinnedEnv final : public Environment {
    public:
        std::span<const double> reset(Rng&) override {
            steps_ = 0;
            return obs_;
        }
        StepResult step(int) override {
            ++steps_;
            return {obs_, 0.0, steps_ >= 25, steps_ >= 25 ? "timeout" : ""};
        }
        int observation_dim() const override { return 4; }
        int action_count() const override { return 2; }
        int max_steps() const override { return 25; }
        std::span<const std::string> observation_names() const override { return names_; }
        std::span<const std::string> action_names() const override { return names_; }

    private:
        std::array<double, 4> obs_{0, 0, 0, 0};
        std::vector<std::string> names_ = {"a", "b", "c", "d"};
        int steps_ = 0;
    };

    PinnedEnv pinned;
    const auto tree = DecisionTree::load(fixture("cartpole_orthogonal_best.json"));
    const auto zero_trace = stability_trace(tree, pinned, 3, 25, 1);
    REQUIRE(zero_trace.size() == 25);
    for (double d : zero_trace) CHECK(d == 0.0);

    // every episode of the perfect policy survives, so length == horizon
    CartPoleEnv env(500);
    const auto oblique = DecisionTree::load(fixture("cartpole_oblique_best.json"));
    const auto trace = stability_trace(oblique, env, 20, 500, 2);
    CHECK(trace.size() == 500);
}

TEST_CASE("the oblique policy is the stabler one on the long horizon") {
    CartPoleEnv env_a(500), env_b(500);
    const auto orthogonal = DecisionTree::load(fixture("cartpole_orthogonal_best.json"));
    const auto oblique = DecisionTree::load(fixture("cartpole_oblique_best.json"));
    const auto trace_ort = stability_trace(orthogonal, env_a, 30, 500, 3);
    const auto trace_obl = stability_trace(oblique, env_b, 30, 500, 3);
    REQUIRE(trace_obl.size() == 500);
    REQUIRE(trace_ort.size() >= 400);
    const auto window_mean = [](const std::vector<double>& t, std::size_t lo, std::size_t hi) {
        double sum = 0;
        for (std::size_t i = lo; i < hi; ++i) sum += t[i];
        return sum / static_cast<double>(hi - lo);
    };
    // the oblique trace settles onto a bounded plateau while the orthogonal
    // one keeps drifting outward over the late horizon
    const double growth_ort = window_mean(trace_ort, 400, 500) - window_mean(trace_ort, 100, 200);
    const double growth_obl = window_mean(trace_obl, 400, 500) - window_mean(trace_obl, 100, 200);
    CHECK(growth_ort > growth_obl);
    CHECK(*std::max_element(trace_obl.begin(), trace_obl.end()) < 1.5);
}

}  // TEST_SUITE
