#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "getree/rng.hpp"

namespace getree {

// Exact decimal number (units / 10^scale). Range shorthands in grammar files
// are enumerated in integer arithmetic so the half-open bound is exact and
// does not depend on floating-point rounding.
struct Decimal {
    std::int64_t units = 0;
    int scale = 0;  // number of fractional digits

    static Decimal parse(std::string_view text);  // throws on malformed input
    double value() const;
    std::string str() const;
};

struct ConstantRange {
    Decimal low;
    Decimal high;
    Decimal step;  // must be > 0

    // All values low + k*step with low + k*step < high, ascending.
    std::vector<Decimal> enumerate() const;
};

struct Symbol {
    enum class Kind { Terminal, RuleRef };
    Kind kind = Kind::Terminal;
    std::string text;  // terminal token, or referenced rule name

    bool is_rule() const { return kind == Kind::RuleRef; }
    bool operator==(const Symbol&) const = default;
};

using Production = std::vector<Symbol>;

struct Rule {
    std::string name;
    std::vector<Production> productions;
    std::optional<ConstantRange> range;  // set when declared via range(lo,hi,step)
};

class GrammarError : public std::runtime_error {
public:
    GrammarError(std::string message, int line, int column)
        : std::runtime_error(std::move(message)), line(line), column(column) {}
    int line = 0;
    int column = 0;
};

// Ordered BNF grammar. One rule per line, `name ::= prod | prod`, nonterminals
// in angle brackets, `range(lo,hi,step)` expanding to one production per
// enumerated constant, `#` starting a comment. The first declared rule is the
// start rule.
class Grammar {
public:
    static Grammar parse(std::string_view text);
    static Grammar parse_file(const std::string& path);

    std::string serialize() const;

    const std::vector<Rule>& rules() const { return rules_; }
    const std::string& start_rule() const { return rules_.front().name; }
    int rule_index(std::string_view name) const;  // -1 when absent
    const Rule& rule(std::string_view name) const;

    bool operator==(const Grammar& other) const;

private:
    void validate() const;  // referenced rules exist, every rule non-empty

    std::vector<Rule> rules_;
    std::unordered_map<std::string, int> index_;
};

// Fixed-length list of integer codons in [0, codon_max).
struct Genotype {
    std::vector<std::uint32_t> codons;
    std::uint32_t codon_max = 65536;

    static Genotype random(std::size_t length, std::uint32_t codon_max, Rng& rng);
    bool operator==(const Genotype&) const = default;
};

// One node of a derivation: the rule expanded, the production chosen, and a
// child derivation for every nonterminal in that production (in order).
struct Derivation {
    int rule = 0;
    int production = 0;
    std::vector<std::unique_ptr<Derivation>> children;
};

enum class DecodeStatus { Ok, CodonsExhausted, ExpansionLimit };

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Ok;
    std::unique_ptr<Derivation> root;  // set iff status == Ok
    std::size_t codons_used = 0;
    std::size_t expansions = 0;

    bool ok() const { return status == DecodeStatus::Ok; }
};

// Leftmost derivation from the start rule. A rule with p > 1 productions
// consumes the next codon c and takes production c mod p; single-production
// rules consume nothing. Running out of codons or exceeding max_expansions
// yields a failure value, not an exception.
DecodeResult decode(const Genotype& genotype, const Grammar& grammar,
                    std::size_t max_expansions = 10000);

// Flat token rendering of a derivation (terminals in derivation order).
std::string derivation_text(const Derivation& node, const Grammar& grammar);

}  // namespace getree
