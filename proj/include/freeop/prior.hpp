#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeop/distance.hpp"
#include "freeop/hypergraph.hpp"
#include "freeop/rng.hpp"
#include "freeop/term.hpp"
#include "freeop/term_io.hpp"

namespace freeop {

// --- hyperparameters ------------------------------------------------------
//
// beta ~ Gamma(1, 1) (an exponential), one weight per generator plus one per
// recursion site, jointly Dirichlet with unit concentration.

struct Hyperparams {
    double beta = 1.0;
    std::vector<double> weights;
};

inline size_t weight_count(const OperadGraph& g) {
    return g.sig.generators.size() + g.sites.size();
}

inline double log_pdf_beta(double beta) {
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    return -beta;
}

inline double sample_beta(Rng& rng) {
    double b = rng.exponential();
    return b > 0.0 ? b : 5e-324;  // guard the measure-zero exact zero
}

inline double log_pdf_weights(const std::vector<double>& w) {
    if (w.empty()) throw DomainError("weight vector is empty");
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw DomainError("weights must be non-negative and finite");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw DomainError("weights must lie on the simplex, sum is " + std::to_string(total));
    // Flat Dirichlet density: Gamma(n) everywhere on the simplex.
    return std::lgamma(static_cast<double>(w.size()));
}

inline std::vector<double> sample_weights(size_t n, Rng& rng) {
    if (n == 0) throw DomainError("weight vector must have at least one entry");
    return rng.dirichlet(std::vector<double>(n, 1.0));
}

inline std::vector<double> uniform_weights(size_t n) {
    if (n == 0) throw DomainError("weight vector must have at least one entry");
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

// --- single-step policy ----------------------------------------------------
//
// Soft preference over the outgoing edges of ty1 while heading for ty2:
// weight exp(-d(cod(e), ty2) / beta), normalized. Computed in log space with
// the max shifted out, so large distances cannot underflow the whole row.
// Edges whose codomain cannot reach ty2 at all carry zero probability and are
// dropped from the support.

struct PolicyEntry {
    size_t edge = 0;
    double log_prob = 0.0;
};

inline std::vector<PolicyEntry> policy(const OperadGraph& g, const DistanceMatrix& d,
                                       size_t from_v, size_t to_v, double beta) {
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    if (from_v >= g.vertex_count() || to_v >= g.vertex_count())
        throw IndexOutOfRange("policy vertex index out of range");

    const auto& out = g.out_edges[from_v];
    std::vector<PolicyEntry> entries;
    entries.reserve(out.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (size_t e : out) {
        double dist = d.at(g.edges[e].cod_v, to_v);
        if (std::isinf(dist)) continue;
        double logit = -dist / beta;
        entries.push_back({e, logit});
        if (logit > max_logit) max_logit = logit;
    }
    if (entries.empty())
        throw DeadEnd("no usable edge from " + print_ty(g.vertices[from_v]) + " toward " +
                      print_ty(g.vertices[to_v]));

    double denom = 0.0;
    for (const auto& en : entries) denom += std::exp(en.log_prob - max_logit);
    double log_denom = max_logit + std::log(denom);
    for (auto& en : entries) en.log_prob -= log_denom;
    return entries;
}

// --- fill candidates -------------------------------------------------------
//
// An edge is realized by any generator with exactly its (dom, cod), or any
// recursion site whose combined signature matches. Generators come first in
// declaration order, then sites in creation order; the position fixes which
// weight entry applies.

struct FillCandidate {
    bool is_site = false;
    size_t index = 0;
};

inline std::vector<FillCandidate> fill_candidates(const OperadGraph& g, size_t edge_index) {
    const Ty& edom = g.edge_dom(edge_index);
    const Ty& ecod = g.edge_cod(edge_index);
    std::vector<FillCandidate> out;
    for (size_t m = 0; m < g.sig.generators.size(); ++m) {
        if (g.sig.generators[m].dom == edom && g.sig.generators[m].cod == ecod)
            out.push_back({false, m});
    }
    for (size_t s = 0; s < g.sites.size(); ++s) {
        if (g.sites[s].combined_dom == edom && g.sites[s].combined_cod == ecod)
            out.push_back({true, s});
    }
    return out;
}

// Unnormalized weight of each candidate: the matching entry of w, with site
// entries divided by the current beta.
inline std::vector<double> fill_weights(const OperadGraph& g,
                                        const std::vector<FillCandidate>& cands,
                                        const std::vector<double>& w, double beta) {
    if (w.size() != weight_count(g))
        throw DimensionError("weight vector has " + std::to_string(w.size()) + " entries, need " +
                             std::to_string(weight_count(g)));
    std::vector<double> out;
    out.reserve(cands.size());
    for (const auto& c : cands) {
        double base = c.is_site ? w[g.sig.generators.size() + c.index] / beta : w[c.index];
        out.push_back(base);
    }
    return out;
}

// --- path traces ------------------------------------------------------------

struct PathTrace;

struct TraceChoice {
    size_t chosen = 0;        // index into fill_candidates of the step's edge
    double log_prob = 0.0;    // of the discrete choice alone
    std::vector<PathTrace> subs;  // one per site pair when a site was chosen
};

struct PathStep {
    size_t edge = 0;
    double log_policy = 0.0;
    TraceChoice fill;
};

struct PathTrace {
    Ty dom;
    Ty cod;
    Term term;
    std::vector<PathStep> steps;
    double log_prior = 0.0;  // conditional on the (beta, weights) used to draw it
};

// Exact conditional log probability of a recorded trace under (beta, w),
// recursing into sub-traces with beta raised by one per level. This is the
// single scoring authority: the sampler and the enumerator both finalize
// their traces through it, so scores agree bit for bit.
inline double trace_log_prob(const OperadGraph& g, const DistanceMatrix& d,
                             const PathTrace& trace, double beta,
                             const std::vector<double>& w) {
    size_t v = g.vertex_index(trace.dom);
    size_t t = g.vertex_index(trace.cod);
    double lp = 0.0;
    for (const auto& step : trace.steps) {
        if (step.edge >= g.edges.size() || g.edges[step.edge].dom_v != v)
            throw InconsistentTrace("step edge does not leave the current vertex");
        std::vector<PolicyEntry> pol = policy(g, d, v, t, beta);
        double log_pol = std::numeric_limits<double>::quiet_NaN();
        for (const auto& en : pol)
            if (en.edge == step.edge) { log_pol = en.log_prob; break; }
        if (!std::isfinite(log_pol))
            throw InconsistentTrace("recorded edge is outside the policy support");
        lp += log_pol;

        std::vector<FillCandidate> cands = fill_candidates(g, step.edge);
        if (step.fill.chosen >= cands.size())
            throw InconsistentTrace("fill choice index out of range");
        std::vector<double> weights = fill_weights(g, cands, w, beta);
        double total = 0.0;
        for (double x : weights) total += x;
        if (!(total > 0.0)) throw InconsistentTrace("fill weights sum to zero");
        lp += std::log(weights[step.fill.chosen]) - std::log(total);

        const FillCandidate& c = cands[step.fill.chosen];
        if (c.is_site) {
            const RecursionSite& site = g.sites[c.index];
            if (step.fill.subs.size() != site.pairs.size())
                throw InconsistentTrace("sub-trace count does not match site arity");
            for (size_t l = 0; l < site.pairs.size(); ++l) {
                if (step.fill.subs[l].dom != site.pairs[l].first ||
                    step.fill.subs[l].cod != site.pairs[l].second)
                    throw InconsistentTrace("sub-trace endpoints do not match site pair");
                lp += trace_log_prob(g, d, step.fill.subs[l], beta + 1.0, w);
            }
        } else if (!step.fill.subs.empty()) {
            throw InconsistentTrace("generator choice cannot carry sub-traces");
        }
        v = g.edges[step.edge].cod_v;
    }
    if (v != t) throw InconsistentTrace("trace does not end at its codomain");
    return lp;
}

// Recompute-and-check variant: the recorded total must match.
inline double log_prior(const OperadGraph& g, const DistanceMatrix& d, const PathTrace& trace,
                        double beta, const std::vector<double>& w) {
    double lp = trace_log_prob(g, d, trace, beta, w);
    if (std::abs(lp - trace.log_prior) > 1e-9)
        throw InconsistentTrace("stored log prior " + std::to_string(trace.log_prior) +
                                " does not match recomputed " + std::to_string(lp));
    return lp;
}

// --- sampling ---------------------------------------------------------------

namespace detail {

inline std::pair<Term, TraceChoice> sample_fill(const OperadGraph& g, const DistanceMatrix& d,
                                                size_t edge_index, double beta,
                                                const std::vector<double>& w, Rng& rng,
                                                size_t step_cap);

inline PathTrace sample_path_impl(const OperadGraph& g, const DistanceMatrix& d, size_t from_v,
                                  size_t to_v, double beta, const std::vector<double>& w,
                                  Rng& rng, size_t step_cap) {
    PathTrace trace;
    trace.dom = g.vertices[from_v];
    trace.cod = g.vertices[to_v];
    Term term = make_id(trace.dom);

    size_t v = from_v;
    while (v != to_v) {
        if (trace.steps.size() >= step_cap)
            throw StepCapExceeded("path from " + print_ty(trace.dom) + " to " +
                                  print_ty(trace.cod) + " exceeded " +
                                  std::to_string(step_cap) + " steps");
        std::vector<PolicyEntry> pol = policy(g, d, v, to_v, beta);
        std::vector<double> probs(pol.size());
        for (size_t i = 0; i < pol.size(); ++i) probs[i] = std::exp(pol[i].log_prob);
        size_t pick = rng.discrete(probs);

        PathStep step;
        step.edge = pol[pick].edge;
        step.log_policy = pol[pick].log_prob;
        auto [fill_term, choice] = sample_fill(g, d, step.edge, beta, w, rng, step_cap);
        step.fill = std::move(choice);
        term = compose_seq(g.sig, term, fill_term);
        v = g.edges[step.edge].cod_v;
        trace.steps.push_back(std::move(step));
    }
    trace.term = term;
    trace.log_prior = trace_log_prob(g, d, trace, beta, w);
    return trace;
}

inline std::pair<Term, TraceChoice> sample_fill(const OperadGraph& g, const DistanceMatrix& d,
                                                size_t edge_index, double beta,
                                                const std::vector<double>& w, Rng& rng,
                                                size_t step_cap) {
    std::vector<FillCandidate> cands = fill_candidates(g, edge_index);
    if (cands.empty())
        throw NoCandidates("edge " + std::to_string(edge_index) +
                           " has neither generators nor sites");
    std::vector<double> weights = fill_weights(g, cands, w, beta);
    size_t j = rng.discrete(weights);
    double total = 0.0;
    for (double x : weights) total += x;

    TraceChoice choice;
    choice.chosen = j;
    choice.log_prob = std::log(weights[j]) - std::log(total);

    if (!cands[j].is_site)
        return {make_gen(g.sig.generators[cands[j].index].name), std::move(choice)};

    const RecursionSite& site = g.sites[cands[j].index];
    std::vector<Term> factors;
    factors.reserve(site.pairs.size());
    for (const auto& [sub_dom, sub_cod] : site.pairs) {
        PathTrace sub = sample_path_impl(g, d, g.vertex_index(sub_dom), g.vertex_index(sub_cod),
                                         beta + 1.0, w, rng, step_cap);
        factors.push_back(sub.term);
        choice.subs.push_back(std::move(sub));
    }
    return {par(std::move(factors)), std::move(choice)};
}

} // namespace detail

// Draw one morphism from dom to cod by walking the type graph until the
// target absorbs the walk, realizing each edge with a generator or a
// recursive parallel product. dom == cod yields the identity with no steps.
inline PathTrace sample_path(const OperadGraph& g, const DistanceMatrix& d, const Ty& dom,
                             const Ty& cod, double beta, const std::vector<double>& w, Rng& rng,
                             size_t step_cap = 256) {
    size_t from_v = g.vertex_index(dom);
    size_t to_v = g.vertex_index(cod);
    if (std::isinf(d.at(from_v, to_v)))
        throw DeadEnd("no path from " + print_ty(dom) + " to " + print_ty(cod));
    return detail::sample_path_impl(g, d, from_v, to_v, beta, w, rng, step_cap);
}

// Compact structural key: edge and choice per step, with sub-traces in
// parentheses. Two traces have the same key exactly when they made the same
// choices everywhere.
inline std::string trace_key(const PathTrace& trace) {
    std::string out;
    for (size_t i = 0; i < trace.steps.size(); ++i) {
        if (i) out += ";";
        out += "e" + std::to_string(trace.steps[i].edge) + "c" +
               std::to_string(trace.steps[i].fill.chosen);
        if (!trace.steps[i].fill.subs.empty()) {
            out += "(";
            for (size_t l = 0; l < trace.steps[i].fill.subs.size(); ++l) {
                if (l) out += "|";
                out += trace_key(trace.steps[i].fill.subs[l]);
            }
            out += ")";
        }
    }
    return out;
}

// JSONL record used by the sampling command.
inline nlohmann::ordered_json trace_record(const PathTrace& trace, double beta,
                                           const std::vector<double>& w) {
    nlohmann::ordered_json j;
    j["term"] = print_term(trace.term);
    j["log_prior"] = trace.log_prior;
    j["beta"] = beta;
    j["weights"] = w;
    std::vector<size_t> steps;
    steps.reserve(trace.steps.size());
    for (const auto& s : trace.steps) steps.push_back(s.edge);
    j["steps"] = steps;
    return j;
}

} // namespace freeop
