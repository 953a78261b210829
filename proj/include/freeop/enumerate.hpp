#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "freeop/prior.hpp"

namespace freeop {

// Exhaustive expansion of the path distribution between two types, up to a
// per-path step budget and a recursion depth budget. Probability that falls
// beyond either budget is returned as truncated_mass, so entry masses plus
// the truncation always account for the whole distribution. Every entry's
// log_prior is finalized through trace_log_prob, the same scorer the sampler
// uses.

struct Enumeration {
    std::vector<PathTrace> entries;
    double truncated_mass = 0.0;
};

namespace detail {

struct FillAlt {
    Term term;
    TraceChoice choice;
    double log_prob = 0.0;  // choice plus all sub-trace priors
};

struct EnumCtx {
    const OperadGraph& g;
    const DistanceMatrix& d;
    const std::vector<double>& w;
    size_t max_steps;
};

inline std::pair<std::vector<PathTrace>, double> enum_from(const EnumCtx& ctx, size_t v, size_t t,
                                                           double beta, size_t steps_left,
                                                           size_t depth_left);

inline std::pair<std::vector<FillAlt>, double> enum_fill(const EnumCtx& ctx, size_t edge_index,
                                                         double beta, size_t depth_left) {
    std::vector<FillCandidate> cands = fill_candidates(ctx.g, edge_index);
    if (cands.empty())
        throw NoCandidates("edge " + std::to_string(edge_index) +
                           " has neither generators nor sites");
    std::vector<double> weights = fill_weights(ctx.g, cands, ctx.w, beta);
    double total = 0.0;
    for (double x : weights) total += x;
    if (!(total > 0.0)) throw DomainError("fill weights sum to zero");

    std::vector<FillAlt> alts;
    double trunc = 0.0;
    for (size_t j = 0; j < cands.size(); ++j) {
        double lp_j = std::log(weights[j]) - std::log(total);
        if (!cands[j].is_site) {
            FillAlt alt;
            alt.term = make_gen(ctx.g.sig.generators[cands[j].index].name);
            alt.choice.chosen = j;
            alt.choice.log_prob = lp_j;
            alt.log_prob = lp_j;
            alts.push_back(std::move(alt));
            continue;
        }
        if (depth_left == 0) {
            trunc += std::exp(lp_j);
            continue;
        }
        const RecursionSite& site = ctx.g.sites[cands[j].index];
        std::vector<std::vector<PathTrace>> per_pair;
        double covered = 1.0;
        per_pair.reserve(site.pairs.size());
        for (const auto& [sub_dom, sub_cod] : site.pairs) {
            auto [subs, sub_trunc] =
                enum_from(ctx, ctx.g.vertex_index(sub_dom), ctx.g.vertex_index(sub_cod),
                          beta + 1.0, ctx.max_steps, depth_left - 1);
            double finite = 0.0;
            for (const auto& s : subs) finite += std::exp(s.log_prior);
            covered *= finite;
            (void)sub_trunc;
            per_pair.push_back(std::move(subs));
        }
        trunc += std::exp(lp_j) * (1.0 - covered);

        // Odometer over one choice per pair, last index fastest.
        bool any_empty = false;
        for (const auto& p : per_pair)
            if (p.empty()) any_empty = true;
        if (any_empty) continue;
        std::vector<size_t> idx(per_pair.size(), 0);
        while (true) {
            FillAlt alt;
            alt.choice.chosen = j;
            alt.choice.log_prob = lp_j;
            alt.log_prob = lp_j;
            std::vector<Term> factors;
            factors.reserve(per_pair.size());
            for (size_t l = 0; l < per_pair.size(); ++l) {
                const PathTrace& sub = per_pair[l][idx[l]];
                factors.push_back(sub.term);
                alt.log_prob += sub.log_prior;
                alt.choice.subs.push_back(sub);
            }
            alt.term = par(std::move(factors));
            alts.push_back(std::move(alt));

            size_t k = idx.size();
            while (k > 0) {
                idx[k - 1]++;
                if (idx[k - 1] < per_pair[k - 1].size()) break;
                idx[k - 1] = 0;
                --k;
            }
            if (k == 0) break;
        }
    }
    return {std::move(alts), trunc};
}

inline std::pair<std::vector<PathTrace>, double> enum_from(const EnumCtx& ctx, size_t v, size_t t,
                                                           double beta, size_t steps_left,
                                                           size_t depth_left) {
    std::vector<PathTrace> out;
    if (v == t) {
        PathTrace trace;
        trace.dom = ctx.g.vertices[v];
        trace.cod = ctx.g.vertices[t];
        trace.term = make_id(trace.dom);
        trace.log_prior = 0.0;
        out.push_back(std::move(trace));
        return {std::move(out), 0.0};
    }
    if (steps_left == 0) return {std::move(out), 1.0};

    double trunc = 0.0;
    std::vector<PolicyEntry> pol = policy(ctx.g, ctx.d, v, t, beta);
    for (const auto& en : pol) {
        auto [fills, fill_trunc] = enum_fill(ctx, en.edge, beta, depth_left);
        auto [rests, rest_trunc] =
            enum_from(ctx, ctx.g.edges[en.edge].cod_v, t, beta, steps_left - 1, depth_left);
        double p_edge = std::exp(en.log_prob);
        trunc += p_edge * fill_trunc;
        double fill_mass = 0.0;
        for (const auto& f : fills) fill_mass += std::exp(f.log_prob);
        trunc += p_edge * fill_mass * rest_trunc;

        for (const auto& fill : fills) {
            for (const auto& rest : rests) {
                PathTrace trace;
                trace.dom = ctx.g.vertices[v];
                trace.cod = ctx.g.vertices[t];
                PathStep step;
                step.edge = en.edge;
                step.log_policy = en.log_prob;
                step.fill = fill.choice;
                trace.steps.reserve(1 + rest.steps.size());
                trace.steps.push_back(std::move(step));
                for (const auto& s : rest.steps) trace.steps.push_back(s);
                trace.term = compose_seq(ctx.g.sig, fill.term, rest.term);
                trace.log_prior = en.log_prob + fill.log_prob + rest.log_prior;
                out.push_back(std::move(trace));
            }
        }
    }
    return {std::move(out), trunc};
}

} // namespace detail

inline Enumeration enumerate_paths(const OperadGraph& g, const DistanceMatrix& d, const Ty& dom,
                                   const Ty& cod, double beta, const std::vector<double>& w,
                                   size_t max_steps, size_t max_depth) {
    size_t from_v = g.vertex_index(dom);
    size_t to_v = g.vertex_index(cod);
    if (std::isinf(d.at(from_v, to_v)))
        throw DeadEnd("no path from " + print_ty(dom) + " to " + print_ty(cod));
    detail::EnumCtx ctx{g, d, w, max_steps};
    auto [entries, trunc] = detail::enum_from(ctx, from_v, to_v, beta, max_steps, max_depth);
    for (auto& e : entries) e.log_prior = trace_log_prob(g, d, e, beta, w);
    Enumeration result;
    result.entries = std::move(entries);
    result.truncated_mass = trunc;
    return result;
}

} // namespace freeop
