#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <set>

#include "getree/grammar.hpp"

using namespace getree;

namespace {

// exact-decimal oracle: number of k with lo + k*step < hi, all scaled to
// integers, independent of the parser's enumeration
long range_count_oracle(long lo, long hi, long step) {
    long count = 0;
    for (long v = lo; v < hi; v += step) ++count;
    return count;
}

std::string grammar_dir() {
    return std::string(GETREE_SOURCE_DIR) + "/grammars/";
}

const char* kCartPoleOrthogonal =
    "dt ::= <if>\n"
    "if ::= if <condition> then <action> else <action>\n"
    "condition ::= x <comp_op> <const_x> | v <comp_op> <const_v> | theta <comp_op> "
    "<const_theta> | omega <comp_op> <const_omega>\n"
    "action ::= leaf | <if>\n"
    "comp_op ::= lt | gt\n"
    "const_x ::= range(-4.8, 4.8, 0.5)\n"
    "const_v ::= range(-5, 5, 0.5)\n"
    "const_theta ::= range(-0.418, 0.418, 0.01)\n"
    "const_omega ::= range(-0.836, 0.836, 0.01)\n";

}  // namespace

TEST_SUITE("grammar") {

TEST_CASE("comp_op rule keeps declaration order") {
    Grammar g = Grammar::parse("dt ::= <comp_op>\ncomp_op ::= lt | gt\n");
    const Rule& rule = g.rule("comp_op");
    REQUIRE(rule.productions.size() == 2);
    CHECK(rule.productions[0][0].text == "lt");
    CHECK(rule.productions[1][0].text == "gt");
}

TEST_CASE("minimal single-rule grammar") {
    Grammar g = Grammar::parse("dt ::= leaf\n");
    CHECK(g.rules().size() == 1);
    CHECK(g.start_rule() == "dt");
    CHECK(g.rule("dt").productions.size() == 1);
}

TEST_CASE("range expansion counts match the exact-decimal oracle") {
    Grammar g = Grammar::parse("dt ::= <const_v>\nconst_v ::= range(-0.07, 0.07, 0.005)\n");
    CHECK(range_count_oracle(-70, 70, 5) == 28);
    CHECK(g.rule("const_v").productions.size() == 28);

    Grammar cp = Grammar::parse(kCartPoleOrthogonal);
    CHECK(cp.rule("const_x").productions.size() == range_count_oracle(-48, 48, 5));    // 20
    CHECK(cp.rule("const_v").productions.size() == range_count_oracle(-50, 50, 5));    // 20
    CHECK(cp.rule("const_theta").productions.size() == range_count_oracle(-418, 418, 10));
    CHECK(cp.rule("const_omega").productions.size() == range_count_oracle(-836, 836, 10));
    CHECK(cp.rule("const_theta").productions.size() == 84);
    CHECK(cp.rule("const_omega").productions.size() == 168);

    Grammar obl = Grammar::parse("dt ::= <const>\nconst ::= range(-1, 1, 0.001)\n");
    CHECK(obl.rule("const").productions.size() == 2000);
}

TEST_CASE("constant enumeration spans [low, high)") {
    ConstantRange r{Decimal::parse("-0.07"), Decimal::parse("0.07"), Decimal::parse("0.005")};
    const auto values = r.enumerate();
    CHECK(values.front().value() == doctest::Approx(-0.07));
    CHECK(values.back().value() < 0.07);
    CHECK(values.front().str() == "-0.07");
    CHECK(values.back().str() == "0.065");
}

TEST_CASE("parse errors carry position and context") {
    CHECK_THROWS_AS(Grammar::parse("dt <if>\n"), GrammarError);
    try {
        Grammar::parse("dt ::= <if>\nif ::= x | \n");
        FAIL("expected a grammar error");
    } catch (const GrammarError& e) {
        CHECK(e.line == 2);
    }
    // reference to an undeclared rule
    CHECK_THROWS_WITH_AS(Grammar::parse("dt ::= <missing>\n"),
                         doctest::Contains("undeclared rule"), GrammarError);
    CHECK_THROWS_AS(Grammar::parse("   \n# only comments\n"), GrammarError);
    CHECK_THROWS_AS(Grammar::parse("dt ::= a\ndt ::= b\n"), GrammarError);
    // range() cannot be one alternative among others
    CHECK_THROWS_WITH_AS(Grammar::parse("dt ::= range(0, 1, 0.5) | x\n"),
                         doctest::Contains("entire right-hand side"), GrammarError);
}

TEST_CASE("modulo production choice") {
    // a rule with two productions and codon 7 selects index 7 mod 2 = 1
    Grammar g = Grammar::parse("dt ::= <action>\naction ::= leaf | go\n");
    Genotype geno{{7}, 65536};
    DecodeResult r = decode(geno, g);
    REQUIRE(r.ok());
    CHECK(r.root->children[0]->production == 1);
    CHECK(derivation_text(*r.root, g) == "go");
    CHECK(r.codons_used == 1);
}

TEST_CASE("single-production rules consume no codons") {
    Grammar g = Grammar::parse("dt ::= <a>\na ::= x <b>\nb ::= y\n");
    Genotype geno{{}, 65536};
    geno.codons.clear();
    DecodeResult r = decode(geno, g);
    REQUIRE(r.ok());
    CHECK(r.codons_used == 0);
    CHECK(derivation_text(*r.root, g) == "x y");
}

TEST_CASE("golden leftmost derivation for the CartPole orthogonal grammar") {
    Grammar g = Grammar::parse(kCartPoleOrthogonal);
    Genotype geno;
    geno.codons = {3, 0, 1, 5, 0, 0, 0, 0, 0, 0, 0, 0};
    DecodeResult r = decode(geno, g);
    REQUIRE(r.ok());
    // hand-derived against the production ordering above
    CHECK(derivation_text(*r.root, g) ==
          "if omega lt -0.826 then if x lt -4.8 then leaf else leaf else leaf");
    CHECK(r.codons_used == 10);
}

TEST_CASE("decode is deterministic") {
    Grammar g = Grammar::parse(kCartPoleOrthogonal);
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        Genotype geno = Genotype::random(64, 65536, rng);
        DecodeResult a = decode(geno, g);
        DecodeResult b = decode(geno, g);
        REQUIRE(a.ok() == b.ok());
        if (a.ok()) CHECK(derivation_text(*a.root, g) == derivation_text(*b.root, g));
    }
}

TEST_CASE("modulo stability: adding k*p to a codon keeps the phenotype") {
    // single choice point, p = 3
    Grammar g = Grammar::parse("dt ::= <pick>\npick ::= a | b | c\n");
    for (std::uint32_t base : {0u, 1u, 2u, 17u}) {
        Genotype geno{{base}, 65536};
        const std::string reference = derivation_text(*decode(geno, g).root, g);
        for (std::uint32_t k = 1; k < 5; ++k) {
            Genotype shifted{{base + 3 * k}, 65536};
            CHECK(derivation_text(*decode(shifted, g).root, g) == reference);
        }
    }
}

TEST_CASE("decode failure is a value, not a fault") {
    Grammar recursive = Grammar::parse("dt ::= <a>\na ::= x <a> | y\n");
    SUBCASE("codon exhaustion") {
        Genotype geno{{0, 0}, 65536};  // keeps recursing, runs dry
        DecodeResult r = decode(geno, recursive);
        CHECK(!r.ok());
        CHECK(r.status == DecodeStatus::CodonsExhausted);
        CHECK(r.root == nullptr);
    }
    SUBCASE("expansion limit") {
        Genotype geno;
        geno.codons.assign(200, 0);  // always recurse
        DecodeResult r = decode(geno, recursive, 50);
        CHECK(r.status == DecodeStatus::ExpansionLimit);
    }
}

TEST_CASE("shipped grammar files round-trip through serialization") {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(grammar_dir())) {
        if (entry.path().extension() != ".bnf") continue;
        ++seen;
        INFO("grammar ", entry.path().filename().string());
        Grammar first = Grammar::parse_file(entry.path().string());
        Grammar second = Grammar::parse(first.serialize());
        CHECK(first == second);
        CHECK(first.start_rule() == "dt");
    }
    CHECK(seen == 11);
}

TEST_CASE("random genotypes respect their invariants") {
    Rng rng(3);
    Genotype g = Genotype::random(1024, 65536, rng);
    CHECK(g.codons.size() == 1024);
    for (std::uint32_t c : g.codons) CHECK(c < 65536);
}

}  // TEST_SUITE
