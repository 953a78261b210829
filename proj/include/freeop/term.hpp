#pragma once

#include <memory>
#include <string>
#include <vector>

#include "freeop/errors.hpp"
#include "freeop/signature.hpp"
#include "freeop/types.hpp"

namespace freeop {

// Immutable term tree. Sequential composition is binary, parallel composition
// is n-ary (n >= 2 in stored nodes). Shared subtrees are fine: nodes are
// never mutated after construction.
struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
    enum class Kind { Id, Gen, Seq, Par };

    Kind kind;
    Ty ty;                      // Id
    std::string gen;            // Gen
    Term first, second;         // Seq
    std::vector<Term> factors;  // Par
};

inline Term make_id(Ty ty) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Id;
    n->ty = std::move(ty);
    return n;
}

inline Term make_gen(std::string name) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Gen;
    n->gen = std::move(name);
    return n;
}

// Raw tree constructors, no normalization. The parser and tests use these;
// code that wants the algebraic laws applied goes through compose_seq / par.
inline Term make_seq(Term a, Term b) {
    if (!a || !b) throw InternalError("make_seq: null child");
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Seq;
    n->first = std::move(a);
    n->second = std::move(b);
    return n;
}

inline Term make_par(std::vector<Term> factors) {
    if (factors.size() < 2) throw EmptyProduct("parallel node needs at least two factors");
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::Par;
    n->factors = std::move(factors);
    return n;
}

inline bool term_equal(const Term& a, const Term& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case TermNode::Kind::Id: return a->ty == b->ty;
        case TermNode::Kind::Gen: return a->gen == b->gen;
        case TermNode::Kind::Seq:
            return term_equal(a->first, b->first) && term_equal(a->second, b->second);
        case TermNode::Kind::Par: {
            if (a->factors.size() != b->factors.size()) return false;
            for (size_t i = 0; i < a->factors.size(); ++i)
                if (!term_equal(a->factors[i], b->factors[i])) return false;
            return true;
        }
    }
    return false;
}

// Structural identity check: plain Id or a parallel product of identities.
inline bool is_identity(const Term& t) {
    if (!t) return false;
    if (t->kind == TermNode::Kind::Id) return true;
    if (t->kind == TermNode::Kind::Par) {
        for (const auto& f : t->factors)
            if (!is_identity(f)) return false;
        return true;
    }
    return false;
}

inline Ty dom(const Signature& sig, const Term& t) {
    if (!t) throw InternalError("dom of null term");
    switch (t->kind) {
        case TermNode::Kind::Id: return t->ty;
        case TermNode::Kind::Gen: {
            const Generator* g = sig.find(t->gen);
            if (!g) throw UnboundGenerator("no generator named '" + t->gen + "'");
            return g->dom;
        }
        case TermNode::Kind::Seq: return dom(sig, t->first);
        case TermNode::Kind::Par: {
            Ty out;
            for (const auto& f : t->factors) out = tensor(out, dom(sig, f));
            return out;
        }
    }
    throw InternalError("dom: unknown node kind");
}

inline Ty cod(const Signature& sig, const Term& t) {
    if (!t) throw InternalError("cod of null term");
    switch (t->kind) {
        case TermNode::Kind::Id: return t->ty;
        case TermNode::Kind::Gen: {
            const Generator* g = sig.find(t->gen);
            if (!g) throw UnboundGenerator("no generator named '" + t->gen + "'");
            return g->cod;
        }
        case TermNode::Kind::Seq: return cod(sig, t->second);
        case TermNode::Kind::Par: {
            Ty out;
            for (const auto& f : t->factors) out = tensor(out, cod(sig, f));
            return out;
        }
    }
    throw InternalError("cod: unknown node kind");
}

// Rejects unbound generator names, malformed parallel nodes, and sequential
// interfaces that do not line up.
inline void validate_term(const Signature& sig, const Term& t) {
    if (!t) throw ValidationError("null term");
    switch (t->kind) {
        case TermNode::Kind::Id:
            return;
        case TermNode::Kind::Gen:
            if (!sig.find(t->gen)) throw UnboundGenerator("no generator named '" + t->gen + "'");
            return;
        case TermNode::Kind::Seq: {
            validate_term(sig, t->first);
            validate_term(sig, t->second);
            Ty mid_out = cod(sig, t->first);
            Ty mid_in = dom(sig, t->second);
            if (mid_out != mid_in)
                throw TypeMismatch("sequential interface mismatch: " + print_ty(mid_out) +
                                   " vs " + print_ty(mid_in));
            return;
        }
        case TermNode::Kind::Par:
            if (t->factors.size() < 2) throw EmptyProduct("parallel node needs at least two factors");
            for (const auto& f : t->factors) validate_term(sig, f);
            return;
    }
}

// Sequential composition with the unit law applied: identities on either side
// are absorbed.
inline Term compose_seq(const Signature& sig, const Term& f, const Term& g) {
    Ty out = cod(sig, f);
    Ty in = dom(sig, g);
    if (out != in)
        throw TypeMismatch("cannot compose: cod " + print_ty(out) + " does not match dom " +
                           print_ty(in));
    if (is_identity(f)) return g;
    if (is_identity(g)) return f;
    return make_seq(f, g);
}

// Parallel composition of one or more factors; a singleton is returned as is.
inline Term par(std::vector<Term> factors) {
    if (factors.empty()) throw EmptyProduct("parallel composition of zero terms");
    if (factors.size() == 1) return factors[0];
    return make_par(std::move(factors));
}

// Nest f into the i-th domain factor slot of g (1-based), by padding f with
// identities on both sides and composing sequentially:
//   g .after. (id_pre (x) f (x) id_post)
inline Term compose_indexed(const Signature& sig, const Term& g, size_t i, const Term& f) {
    Ty g_dom = dom(sig, g);
    if (i < 1 || i > g_dom.size())
        throw IndexOutOfRange("slot " + std::to_string(i) + " out of range for dom " +
                              print_ty(g_dom));
    Ty slot{g_dom[i - 1]};
    Ty f_cod = cod(sig, f);
    if (f_cod != slot)
        throw TypeMismatch("slot " + std::to_string(i) + " expects " + print_ty(slot) +
                           ", got cod " + print_ty(f_cod));
    if (is_identity(f)) return g;

    Ty pre(g_dom.begin(), g_dom.begin() + (i - 1));
    Ty post(g_dom.begin() + i, g_dom.end());
    std::vector<Term> row;
    if (!pre.empty()) row.push_back(make_id(pre));
    row.push_back(f);
    if (!post.empty()) row.push_back(make_id(post));
    return compose_seq(sig, par(std::move(row)), g);
}

namespace detail {
inline void flatten_seq(const Term& t, std::vector<Term>& out) {
    if (t->kind == TermNode::Kind::Seq) {
        flatten_seq(t->first, out);
        flatten_seq(t->second, out);
    } else {
        out.push_back(t);
    }
}

inline Ty identity_ty(const Term& t) {
    if (t->kind == TermNode::Kind::Id) return t->ty;
    Ty out;
    for (const auto& f : t->factors) out = tensor(out, identity_ty(f));
    return out;
}
} // namespace detail

// Normal form used for term-level deduplication: sequences are flattened and
// rebuilt left nested with inner identities dropped, parallel products are
// flattened, and an all-identity product collapses to a single Id.
inline Term canonicalize(const Term& t) {
    if (!t) throw InternalError("canonicalize of null term");
    switch (t->kind) {
        case TermNode::Kind::Id:
        case TermNode::Kind::Gen:
            return t;
        case TermNode::Kind::Par: {
            std::vector<Term> flat;
            for (const auto& f : t->factors) {
                Term cf = canonicalize(f);
                if (cf->kind == TermNode::Kind::Par)
                    flat.insert(flat.end(), cf->factors.begin(), cf->factors.end());
                else
                    flat.push_back(cf);
            }
            bool all_id = true;
            for (const auto& f : flat)
                if (f->kind != TermNode::Kind::Id) { all_id = false; break; }
            if (all_id) {
                Ty ty;
                for (const auto& f : flat) ty = tensor(ty, f->ty);
                return make_id(std::move(ty));
            }
            return par(std::move(flat));
        }
        case TermNode::Kind::Seq: {
            std::vector<Term> chain;
            detail::flatten_seq(t, chain);
            std::vector<Term> kept;
            for (const auto& e : chain) {
                Term ce = canonicalize(e);
                if (is_identity(ce)) continue;
                if (ce->kind == TermNode::Kind::Seq) {
                    std::vector<Term> inner;
                    detail::flatten_seq(ce, inner);
                    kept.insert(kept.end(), inner.begin(), inner.end());
                } else {
                    kept.push_back(ce);
                }
            }
            if (kept.empty()) return make_id(detail::identity_ty(canonicalize(chain.front())));
            Term acc = kept[0];
            for (size_t i = 1; i < kept.size(); ++i) acc = make_seq(acc, kept[i]);
            return acc;
        }
    }
    throw InternalError("canonicalize: unknown node kind");
}

} // namespace freeop
