#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "freeop/signature.hpp"
#include "freeop/term.hpp"

namespace freeop {

// Concrete semantics for generators over real vectors.
struct Binding {
    size_t in_arity = 0;
    size_t out_arity = 0;
    std::function<std::vector<double>(const std::vector<double>&)> fn;
};

struct Interpreter {
    std::map<std::string, Binding> bindings;

    const Binding& at(const std::string& name) const {
        auto it = bindings.find(name);
        if (it == bindings.end())
            throw UnboundGenerator("interpreter has no binding for '" + name + "'");
        return it->second;
    }
};

// Every generator must be bound with matching arities. Extra bindings are
// allowed so one interpreter can serve several signatures.
inline void validate_interpreter(const Signature& sig, const Interpreter& interp) {
    for (const auto& g : sig.generators) {
        const Binding& b = interp.at(g.name);
        if (b.in_arity != g.dom.size() || b.out_arity != g.cod.size())
            throw ValidationError("binding for '" + g.name + "' has arity " +
                                  std::to_string(b.in_arity) + "->" + std::to_string(b.out_arity) +
                                  ", generator declares " + std::to_string(g.dom.size()) + "->" +
                                  std::to_string(g.cod.size()));
    }
}

namespace detail {
// Input width of a term, derived from interpreter arities alone so that
// evaluation does not need the signature.
inline size_t term_in_arity(const Interpreter& interp, const Term& t) {
    switch (t->kind) {
        case TermNode::Kind::Id: return t->ty.size();
        case TermNode::Kind::Gen: return interp.at(t->gen).in_arity;
        case TermNode::Kind::Seq: return term_in_arity(interp, t->first);
        case TermNode::Kind::Par: {
            size_t n = 0;
            for (const auto& f : t->factors) n += term_in_arity(interp, f);
            return n;
        }
    }
    throw InternalError("term_in_arity: unknown node kind");
}
} // namespace detail

inline std::vector<double> evaluate(const Interpreter& interp, const Term& t,
                                    const std::vector<double>& inputs) {
    if (!t) throw InternalError("evaluate of null term");
    switch (t->kind) {
        case TermNode::Kind::Id:
            if (inputs.size() != t->ty.size())
                throw ArityError("identity on " + print_ty(t->ty) + " got " +
                                 std::to_string(inputs.size()) + " inputs");
            return inputs;
        case TermNode::Kind::Gen: {
            const Binding& b = interp.at(t->gen);
            if (inputs.size() != b.in_arity)
                throw ArityError("'" + t->gen + "' expects " + std::to_string(b.in_arity) +
                                 " inputs, got " + std::to_string(inputs.size()));
            std::vector<double> out = b.fn(inputs);
            if (out.size() != b.out_arity)
                throw ArityError("'" + t->gen + "' produced " + std::to_string(out.size()) +
                                 " outputs, declared " + std::to_string(b.out_arity));
            return out;
        }
        case TermNode::Kind::Seq:
            return evaluate(interp, t->second, evaluate(interp, t->first, inputs));
        case TermNode::Kind::Par: {
            std::vector<double> out;
            size_t offset = 0;
            for (const auto& f : t->factors) {
                size_t take = detail::term_in_arity(interp, f);
                if (offset + take > inputs.size())
                    throw ArityError("parallel product consumes more inputs than provided");
                std::vector<double> slice(inputs.begin() + offset, inputs.begin() + offset + take);
                std::vector<double> part = evaluate(interp, f, slice);
                out.insert(out.end(), part.begin(), part.end());
                offset += take;
            }
            if (offset != inputs.size())
                throw ArityError("parallel product consumed " + std::to_string(offset) +
                                 " of " + std::to_string(inputs.size()) + " inputs");
            return out;
        }
    }
    throw InternalError("evaluate: unknown node kind");
}

} // namespace freeop
