#pragma once

#include <string>
#include <vector>

#include "freeop/term.hpp"
#include "freeop/types.hpp"

namespace freeop {

// S-expression term syntax:
//
//   term := (id TY) | (gen NAME) | (seq term term) | (par term term+)
//   TY   := [] | [R] | [R*R] ...
//
// Printing is canonical (single spaces); parsing accepts any whitespace.

inline std::string print_term(const Term& t) {
    if (!t) throw InternalError("print of null term");
    switch (t->kind) {
        case TermNode::Kind::Id:
            return "(id " + print_ty(t->ty) + ")";
        case TermNode::Kind::Gen:
            return "(gen " + t->gen + ")";
        case TermNode::Kind::Seq:
            return "(seq " + print_term(t->first) + " " + print_term(t->second) + ")";
        case TermNode::Kind::Par: {
            std::string out = "(par";
            for (const auto& f : t->factors) out += " " + print_term(f);
            return out + ")";
        }
    }
    throw InternalError("print: unknown node kind");
}

namespace detail {

struct TermLexer {
    const std::string& text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' ||
                                     text[pos] == '\n' || text[pos] == '\r'))
            ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        if (pos >= text.size()) throw ParseError("unexpected end of term text");
        return text[pos];
    }

    void expect(char c) {
        if (peek() != c)
            throw ParseError(std::string("expected '") + c + "' at offset " + std::to_string(pos));
        ++pos;
    }

    std::string atom() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t' &&
               text[pos] != '\n' && text[pos] != '\r' && text[pos] != '(' && text[pos] != ')')
            ++pos;
        if (pos == start) throw ParseError("expected atom at offset " + std::to_string(start));
        return text.substr(start, pos - start);
    }
};

inline Term parse_term_inner(TermLexer& lex) {
    lex.expect('(');
    std::string head = lex.atom();
    if (head == "id") {
        Ty ty = parse_ty(lex.atom());
        lex.expect(')');
        return make_id(std::move(ty));
    }
    if (head == "gen") {
        std::string name = lex.atom();
        if (!is_identifier(name)) throw ParseError("bad generator name '" + name + "'");
        lex.expect(')');
        return make_gen(std::move(name));
    }
    if (head == "seq") {
        Term a = parse_term_inner(lex);
        Term b = parse_term_inner(lex);
        lex.expect(')');
        return make_seq(std::move(a), std::move(b));
    }
    if (head == "par") {
        std::vector<Term> factors;
        while (lex.peek() != ')') factors.push_back(parse_term_inner(lex));
        lex.expect(')');
        if (factors.size() < 2)
            throw ParseError("par needs at least two factors");
        return make_par(std::move(factors));
    }
    throw ParseError("unknown term head '" + head + "'");
}

} // namespace detail

inline Term parse_term(const std::string& text) {
    detail::TermLexer lex{text};
    Term t = detail::parse_term_inner(lex);
    if (!lex.at_end())
        throw ParseError("trailing junk after term at offset " + std::to_string(lex.pos));
    return t;
}

} // namespace freeop
