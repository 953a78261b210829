#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "freeop/signature.hpp"
#include "freeop/types.hpp"

namespace freeop {

// One directed edge of the type graph. Either it stands for the generators
// with that exact (dom, cod), or it was induced by a recursion site during
// product expansion.
struct Edge {
    enum class Label { Generator, Product };

    size_t dom_v = 0;
    size_t cod_v = 0;
    Label label = Label::Generator;
    size_t label_index = 0;  // generator index or recursion site index
};

// A way of covering a product vertex by a parallel tuple of sub-problems.
// pairs[l] = (d_l, c_l): a path from d_l to c_l is needed for each l, and the
// concatenated c_l equal the covered vertex.
struct RecursionSite {
    std::vector<std::pair<Ty, Ty>> pairs;
    Ty combined_dom;
    Ty combined_cod;
    size_t edge_index = 0;  // the edge this site induced
};

// A product domain that exceeded the length cap and was dropped instead of
// becoming a vertex. Kept for the build report.
struct Truncation {
    Ty domain;
    Ty while_processing;
};

struct OperadGraph {
    Signature sig;
    std::vector<Ty> vertices;
    std::vector<Edge> edges;
    std::vector<RecursionSite> sites;
    std::vector<Truncation> truncated;
    std::vector<std::vector<size_t>> out_edges;  // edge indices per dom vertex

    size_t vertex_count() const { return vertices.size(); }

    bool has_vertex(const Ty& ty) const {
        for (const auto& v : vertices)
            if (v == ty) return true;
        return false;
    }

    size_t vertex_index(const Ty& ty) const {
        for (size_t i = 0; i < vertices.size(); ++i)
            if (vertices[i] == ty) return i;
        throw IndexOutOfRange("no vertex " + print_ty(ty));
    }

    const Ty& edge_dom(size_t e) const { return vertices[edges[e].dom_v]; }
    const Ty& edge_cod(size_t e) const { return vertices[edges[e].cod_v]; }

    std::string edge_label(size_t e) const {
        const Edge& ed = edges[e];
        if (ed.label == Edge::Label::Generator) return sig.generators[ed.label_index].name;
        return "⊗site#" + std::to_string(ed.label_index);
    }

    // Walk counts: entry (i, j) is the number of edges from vertex i to
    // vertex j. Parallel edges count separately so powers of this matrix
    // count labeled walks.
    Eigen::MatrixXi adjacency() const {
        Eigen::MatrixXi a = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(vertices.size()),
                                                  static_cast<Eigen::Index>(vertices.size()));
        for (const auto& e : edges)
            a(static_cast<Eigen::Index>(e.dom_v), static_cast<Eigen::Index>(e.cod_v)) += 1;
        return a;
    }

    std::string to_dot() const {
        std::string out = "digraph {\n";
        for (size_t i = 0; i < vertices.size(); ++i)
            out += "  v" + std::to_string(i) + " [label=\"" + print_ty(vertices[i]) + "\"];\n";
        for (size_t e = 0; e < edges.size(); ++e)
            out += "  v" + std::to_string(edges[e].dom_v) + " -> v" +
                   std::to_string(edges[e].cod_v) + " [label=\"" + edge_label(e) + "\"];\n";
        out += "}\n";
        return out;
    }

    std::string report() const {
        std::string out;
        out += "vertices: " + std::to_string(vertices.size()) + "\n";
        for (size_t i = 0; i < vertices.size(); ++i)
            out += "  v" + std::to_string(i) + " " + print_ty(vertices[i]) + "\n";
        out += "edges: " + std::to_string(edges.size()) + "\n";
        for (size_t e = 0; e < edges.size(); ++e)
            out += "  e" + std::to_string(e) + " " + edge_label(e) + " : " +
                   print_ty(edge_dom(e)) + " -> " + print_ty(edge_cod(e)) + "\n";
        out += "recursion_sites: " + std::to_string(sites.size()) + "\n";
        for (size_t s = 0; s < sites.size(); ++s) {
            out += "  s" + std::to_string(s) + " ";
            for (size_t l = 0; l < sites[s].pairs.size(); ++l) {
                if (l) out += " ⊗ ";
                out += "(" + print_ty(sites[s].pairs[l].first) + "," +
                       print_ty(sites[s].pairs[l].second) + ")";
            }
            out += " : " + print_ty(sites[s].combined_dom) + " -> " +
                   print_ty(sites[s].combined_cod) + " edge e" +
                   std::to_string(sites[s].edge_index) + "\n";
        }
        out += "truncated: " + std::to_string(truncated.size()) + "\n";
        for (const auto& t : truncated)
            out += "  " + print_ty(t.domain) + " while processing " +
                   print_ty(t.while_processing) + "\n";
        return out;
    }
};

// Partition ty's factor sequence into contiguous sublists, each a member of
// the vertex set. When every factor is itself a vertex the finest partition
// (all singletons) is returned, which keeps the downstream inhabitant search
// as wide as possible. Otherwise the search prefers leftmost-longest chunks
// with backtracking, never returning the trivial one-chunk partition.
inline std::vector<Ty> chunks(const Ty& ty, const std::vector<Ty>& vertices) {
    if (ty.empty()) throw ChunkingError("cannot chunk the empty type");
    auto in_vertices = [&](const Ty& part) {
        for (const auto& v : vertices)
            if (v == part) return true;
        return false;
    };

    bool all_singletons = true;
    for (const auto& f : ty) {
        if (!in_vertices(Ty{f})) { all_singletons = false; break; }
    }
    if (all_singletons) {
        std::vector<Ty> out;
        out.reserve(ty.size());
        for (const auto& f : ty) out.push_back(Ty{f});
        return out;
    }

    std::vector<Ty> acc;
    std::function<bool(size_t)> search = [&](size_t pos) -> bool {
        if (pos == ty.size()) return acc.size() > 1 || ty.size() == 1;
        size_t longest = ty.size() - pos;
        if (pos == 0 && ty.size() > 1) longest = ty.size() - 1;  // forbid the trivial partition
        for (size_t len = longest; len >= 1; --len) {
            Ty part(ty.begin() + static_cast<long>(pos), ty.begin() + static_cast<long>(pos + len));
            if (!in_vertices(part)) continue;
            acc.push_back(std::move(part));
            if (search(pos + len)) return true;
            acc.pop_back();
        }
        return false;
    };
    if (!search(0))
        throw ChunkingError("no partition of " + print_ty(ty) + " into known vertices");
    return acc;
}

// Expand the declared signature into the full type graph: vertices are
// objects (plus product domains discovered along the way), edges are the
// generator arrows plus one edge per recursion site.
//
// Worklist pass over product vertices. For a vertex ty: partition it into
// chunks, gather for each chunk the (dom, chunk) pairs of edges landing on
// it, and walk the cartesian product of those pairs. Each combination whose
// concatenated domain is not a contiguous sublist of ty becomes a recursion
// site with an induced edge (combined dom -> ty). New product domains at or
// under the length cap become vertices and are queued; longer ones are
// recorded as truncated and skipped, so every stored edge keeps both
// endpoints in the vertex set.
//
// All iteration is in index order and the worklist is LIFO, which makes the
// output ordering a pure function of the input.
inline OperadGraph build_hypergraph(const Signature& sig, size_t max_product_len = 4) {
    OperadGraph g;
    g.sig = sig;
    g.vertices = sig.objects;

    std::map<Ty, size_t> index_of;
    for (size_t i = 0; i < g.vertices.size(); ++i) {
        if (index_of.count(g.vertices[i]))
            throw ValidationError("duplicate object " + print_ty(g.vertices[i]));
        index_of[g.vertices[i]] = i;
    }

    for (size_t m = 0; m < sig.generators.size(); ++m) {
        const Generator& gen = sig.generators[m];
        Edge e;
        e.dom_v = index_of.at(gen.dom);
        e.cod_v = index_of.at(gen.cod);
        e.label = Edge::Label::Generator;
        e.label_index = m;
        g.edges.push_back(e);
    }

    std::vector<size_t> stack;
    for (size_t i = 0; i < g.vertices.size(); ++i)
        if (g.vertices[i].size() > 1) stack.push_back(i);

    while (!stack.empty()) {
        size_t ty_idx = stack.back();
        stack.pop_back();
        const Ty ty = g.vertices[ty_idx];

        std::vector<Ty> parts = chunks(ty, g.vertices);

        // Inhabitants per chunk: deduplicated (dom, chunk) pairs over edges
        // whose codomain is the chunk, in first-seen edge order.
        std::vector<std::vector<std::pair<Ty, Ty>>> inhabitants(parts.size());
        bool any_empty = false;
        for (size_t c = 0; c < parts.size(); ++c) {
            for (size_t e = 0; e < g.edges.size(); ++e) {
                if (g.edge_cod(e) != parts[c]) continue;
                std::pair<Ty, Ty> cand{g.edge_dom(e), parts[c]};
                bool dup = false;
                for (const auto& have : inhabitants[c])
                    if (have == cand) { dup = true; break; }
                if (!dup) inhabitants[c].push_back(std::move(cand));
            }
            if (inhabitants[c].empty()) { any_empty = true; break; }
        }
        if (any_empty) continue;

        // Odometer over the per-chunk lists, last position fastest.
        std::vector<size_t> pick(parts.size(), 0);
        while (true) {
            std::vector<std::pair<Ty, Ty>> combo;
            combo.reserve(parts.size());
            Ty combined_dom;
            for (size_t c = 0; c < parts.size(); ++c) {
                combo.push_back(inhabitants[c][pick[c]]);
                combined_dom = tensor(combined_dom, combo.back().first);
            }

            if (!is_sublist(combined_dom, ty)) {
                if (combined_dom.size() > max_product_len) {
                    g.truncated.push_back({combined_dom, ty});
                } else {
                    size_t dom_idx;
                    auto it = index_of.find(combined_dom);
                    if (it != index_of.end()) {
                        dom_idx = it->second;
                    } else {
                        dom_idx = g.vertices.size();
                        g.vertices.push_back(combined_dom);
                        index_of[combined_dom] = dom_idx;
                        stack.push_back(dom_idx);
                    }

                    RecursionSite site;
                    site.pairs = combo;
                    site.combined_dom = combined_dom;
                    site.combined_cod = ty;
                    site.edge_index = g.edges.size();
                    Edge e;
                    e.dom_v = dom_idx;
                    e.cod_v = ty_idx;
                    e.label = Edge::Label::Product;
                    e.label_index = g.sites.size();
                    g.edges.push_back(e);
                    g.sites.push_back(std::move(site));
                }
            }

            size_t c = parts.size();
            while (c > 0) {
                --c;
                if (++pick[c] < inhabitants[c].size()) break;
                pick[c] = 0;
                if (c == 0) { c = parts.size() + 1; break; }
            }
            if (c == parts.size() + 1) break;
        }
    }

    g.out_edges.assign(g.vertices.size(), {});
    for (size_t e = 0; e < g.edges.size(); ++e)
        g.out_edges[g.edges[e].dom_v].push_back(e);
    return g;
}

} // namespace freeop
