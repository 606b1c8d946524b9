#include "getree/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace getree {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::int64_t pow10_i64(int n) {
    std::int64_t v = 1;
    for (int i = 0; i < n; ++i) v *= 10;
    return v;
}

}  // namespace

Decimal Decimal::parse(std::string_view text) {
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("empty number");
    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') negative = (text[i++] == '-');
    std::int64_t units = 0;
    int scale = 0;
    bool any_digit = false, seen_dot = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.') {
            if (seen_dot) throw std::invalid_argument("malformed number: " + std::string(text));
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            units = units * 10 + (c - '0');
            if (seen_dot) ++scale;
            any_digit = true;
        } else if (c == 'e' || c == 'E') {
            break;
        } else {
            throw std::invalid_argument("malformed number: " + std::string(text));
        }
    }
    int exponent = 0;
    if (i < text.size()) {  // exponent part
        ++i;
        bool exp_neg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) exp_neg = (text[i++] == '-');
        bool exp_digit = false;
        for (; i < text.size(); ++i) {
            if (text[i] < '0' || text[i] > '9')
                throw std::invalid_argument("malformed number: " + std::string(text));
            exponent = exponent * 10 + (text[i] - '0');
            exp_digit = true;
        }
        if (!exp_digit) throw std::invalid_argument("malformed number: " + std::string(text));
        if (exp_neg) exponent = -exponent;
    }
    if (!any_digit) throw std::invalid_argument("malformed number: " + std::string(text));
    Decimal d;
    d.units = negative ? -units : units;
    d.scale = scale - exponent;
    if (d.scale < 0) {  // shift into the integer part
        d.units *= pow10_i64(-d.scale);
        d.scale = 0;
    }
    if (d.scale > 15) throw std::invalid_argument("number has too many digits: " + std::string(text));
    return d;
}

double Decimal::value() const {
    return static_cast<double>(units) / static_cast<double>(pow10_i64(scale));
}

std::string Decimal::str() const {
    if (scale == 0) return std::to_string(units);
    std::int64_t mag = units < 0 ? -units : units;
    const std::int64_t div = pow10_i64(scale);
    std::int64_t whole = mag / div, frac = mag % div;
    std::string frac_digits = std::to_string(frac);
    frac_digits.insert(0, static_cast<std::size_t>(scale) - frac_digits.size(), '0');
    while (frac_digits.size() > 1 && frac_digits.back() == '0') frac_digits.pop_back();
    std::string out = units < 0 ? "-" : "";
    out += std::to_string(whole);
    if (frac_digits != "0") out += "." + frac_digits;
    return out;
}

std::vector<Decimal> ConstantRange::enumerate() const {
    if (step.units <= 0) throw std::invalid_argument("range step must be positive");
    // Bring all three to a common scale, then enumerate in integers.
    const int s = std::max({low.scale, high.scale, step.scale});
    const std::int64_t lo = low.units * pow10_i64(s - low.scale);
    const std::int64_t hi = high.units * pow10_i64(s - high.scale);
    const std::int64_t st = step.units * pow10_i64(s - step.scale);
    std::vector<Decimal> values;
    for (std::int64_t v = lo; v < hi; v += st) values.push_back(Decimal{v, s});
    if (values.empty()) throw std::invalid_argument("range enumerates no values");
    return values;
}

namespace {

// Splits a production string into whitespace-separated symbols.
Production parse_production(std::string_view text, int line_no, int col_base) {
    Production prod;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        std::string_view tok = text.substr(start, i - start);
        if (tok.front() == '<') {
            if (tok.back() != '>' || tok.size() < 3)
                throw GrammarError("malformed nonterminal '" + std::string(tok) + "'",
                                   line_no, col_base + static_cast<int>(start) + 1);
            prod.push_back(Symbol{Symbol::Kind::RuleRef,
                                  std::string(tok.substr(1, tok.size() - 2))});
        } else if (tok.starts_with("range(")) {
            // range() is a whole-rule shorthand, not a production symbol
            throw GrammarError("range(...) must be a rule's entire right-hand side", line_no,
                               col_base + static_cast<int>(start) + 1);
        } else {
            prod.push_back(Symbol{Symbol::Kind::Terminal, std::string(tok)});
        }
    }
    if (prod.empty())
        throw GrammarError("empty production", line_no, col_base + 1);
    return prod;
}

std::optional<ConstantRange> try_parse_range(std::string_view rhs, int line_no) {
    std::string_view t = trim(rhs);
    if (!t.starts_with("range(") || !t.ends_with(")")) return std::nullopt;
    std::string_view inner = t.substr(6, t.size() - 7);
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = inner.find(',', pos);
        if (comma == std::string_view::npos) {
            parts.push_back(inner.substr(pos));
            break;
        }
        parts.push_back(inner.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (parts.size() != 3)
        throw GrammarError("range() takes exactly (low, high, step)", line_no, 1);
    try {
        return ConstantRange{Decimal::parse(parts[0]), Decimal::parse(parts[1]),
                             Decimal::parse(parts[2])};
    } catch (const std::invalid_argument& e) {
        throw GrammarError(e.what(), line_no, 1);
    }
}

}  // namespace

Grammar Grammar::parse(std::string_view text) {
    if (trim(text).empty()) throw GrammarError("empty grammar", 1, 1);
    Grammar g;
    std::size_t line_start = 0;
    int line_no = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        std::string_view line = text.substr(line_start, line_end - line_start);
        ++line_no;
        line_start = line_end + 1;

        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;

        std::size_t sep = line.find("::=");
        if (sep == std::string_view::npos)
            throw GrammarError("expected 'name ::= productions'", line_no, 1);
        std::string name(trim(line.substr(0, sep)));
        if (name.empty()) throw GrammarError("missing rule name", line_no, 1);
        if (name.front() == '<' && name.back() == '>') name = name.substr(1, name.size() - 2);
        if (g.index_.count(name))
            throw GrammarError("rule '" + name + "' declared twice", line_no, 1);

        std::string_view rhs = line.substr(sep + 3);
        Rule rule;
        rule.name = name;
        if (auto range = try_parse_range(rhs, line_no)) {
            rule.range = *range;
            for (const Decimal& d : range->enumerate())
                rule.productions.push_back({Symbol{Symbol::Kind::Terminal, d.str()}});
        } else {
            std::size_t pos = 0;
            const int col_base = static_cast<int>(sep) + 3;
            while (true) {
                std::size_t bar = rhs.find('|', pos);
                std::string_view piece =
                    rhs.substr(pos, (bar == std::string_view::npos ? rhs.size() : bar) - pos);
                rule.productions.push_back(
                    parse_production(piece, line_no, col_base + static_cast<int>(pos)));
                if (bar == std::string_view::npos) break;
                pos = bar + 1;
            }
        }
        g.index_[rule.name] = static_cast<int>(g.rules_.size());
        g.rules_.push_back(std::move(rule));
    }
    if (g.rules_.empty()) throw GrammarError("grammar declares no rules", line_no, 1);
    g.validate();
    return g;
}

Grammar Grammar::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grammar file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str());
    } catch (const GrammarError& e) {
        throw GrammarError(path + ":" + std::to_string(e.line) + ":" +
                               std::to_string(e.column) + ": " + e.what(),
                           e.line, e.column);
    }
}

void Grammar::validate() const {
    for (const Rule& rule : rules_) {
        if (rule.productions.empty())
            throw GrammarError("rule '" + rule.name + "' has no productions", 0, 0);
        for (const Production& prod : rule.productions)
            for (const Symbol& sym : prod)
                if (sym.is_rule() && !index_.count(sym.text))
                    throw GrammarError("rule '" + rule.name + "' references undeclared rule '" +
                                           sym.text + "'",
                                       0, 0);
    }
}

std::string Grammar::serialize() const {
    std::string out;
    for (const Rule& rule : rules_) {
        out += rule.name;
        out += " ::= ";
        if (rule.range) {
            out += "range(" + rule.range->low.str() + ", " + rule.range->high.str() + ", " +
                   rule.range->step.str() + ")";
        } else {
            for (std::size_t p = 0; p < rule.productions.size(); ++p) {
                if (p) out += " | ";
                for (std::size_t s = 0; s < rule.productions[p].size(); ++s) {
                    if (s) out += " ";
                    const Symbol& sym = rule.productions[p][s];
                    out += sym.is_rule() ? "<" + sym.text + ">" : sym.text;
                }
            }
        }
        out += "\n";
    }
    return out;
}

int Grammar::rule_index(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : it->second;
}

const Rule& Grammar::rule(std::string_view name) const {
    int idx = rule_index(name);
    if (idx < 0) throw std::out_of_range("no such rule: " + std::string(name));
    return rules_[static_cast<std::size_t>(idx)];
}

bool Grammar::operator==(const Grammar& other) const {
    if (rules_.size() != other.rules_.size()) return false;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (rules_[i].name != other.rules_[i].name) return false;
        if (rules_[i].productions != other.rules_[i].productions) return false;
    }
    return true;
}

Genotype Genotype::random(std::size_t length, std::uint32_t codon_max, Rng& rng) {
    Genotype g;
    g.codon_max = codon_max;
    g.codons.resize(length);
    for (auto& c : g.codons) c = rng.below(codon_max);
    return g;
}

namespace {

struct Decoder {
    std::span<const std::uint32_t> codons;
    const Grammar& grammar;
    std::size_t max_expansions;
    std::size_t pos = 0;
    std::size_t expansions = 0;
    DecodeStatus status = DecodeStatus::Ok;

    std::unique_ptr<Derivation> expand(int rule_idx) {
        if (++expansions > max_expansions) {
            status = DecodeStatus::ExpansionLimit;
            return nullptr;
        }
        const Rule& rule = grammar.rules()[static_cast<std::size_t>(rule_idx)];
        int choice = 0;
        if (rule.productions.size() > 1) {
            if (pos >= codons.size()) {
                status = DecodeStatus::CodonsExhausted;
                return nullptr;
            }
            choice = static_cast<int>(codons[pos++] % rule.productions.size());
        }
        auto node = std::make_unique<Derivation>();
        node->rule = rule_idx;
        node->production = choice;
        for (const Symbol& sym : rule.productions[static_cast<std::size_t>(choice)]) {
            if (!sym.is_rule()) continue;
            auto child = expand(grammar.rule_index(sym.text));
            if (!child) return nullptr;
            node->children.push_back(std::move(child));
        }
        return node;
    }
};

}  // namespace

DecodeResult decode(const Genotype& genotype, const Grammar& grammar,
                    std::size_t max_expansions) {
    Decoder d{genotype.codons, grammar, max_expansions};
    DecodeResult result;
    result.root = d.expand(grammar.rule_index(grammar.start_rule()));
    result.status = d.status;
    result.codons_used = d.pos;
    result.expansions = d.expansions;
    return result;
}

namespace {

void render(const Derivation& node, const Grammar& grammar, std::string& out) {
    const Rule& rule = grammar.rules()[static_cast<std::size_t>(node.rule)];
    std::size_t child = 0;
    for (const Symbol& sym : rule.productions[static_cast<std::size_t>(node.production)]) {
        if (sym.is_rule()) {
            render(*node.children[child++], grammar, out);
        } else {
            if (!out.empty()) out += " ";
            out += sym.text;
        }
    }
}

}  // namespace

std::string derivation_text(const Derivation& node, const Grammar& grammar) {
    std::string out;
    render(node, grammar, out);
    return out;
}

}  // namespace getree
