#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "freeop/distance.hpp"
#include "freeop/enumerate.hpp"
#include "freeop/term_io.hpp"
#include "support/helpers.hpp"
#include "support/y2x2_oracle.hpp"

using freeop::Enumeration;
using freeop::OperadGraph;
using freeop::Ty;

namespace {

struct Loaded {
    OperadGraph g;
    freeop::DistanceMatrix d;
    std::vector<double> w;
};

Loaded load(const std::string& name) {
    freeop::Signature sig =
        freeop::load_signature(testsupport::fixture("signatures/" + name + ".json"));
    OperadGraph g = freeop::build_hypergraph(sig);
    freeop::DistanceMatrix d = freeop::transition_distance(g);
    std::vector<double> w = freeop::uniform_weights(freeop::weight_count(g));
    return {std::move(g), std::move(d), std::move(w)};
}

double total_mass(const Enumeration& en) {
    double m = en.truncated_mass;
    for (const auto& e : en.entries) m += std::exp(e.log_prior);
    return m;
}

} // namespace

TEST_CASE("a forced single morphism enumerates to a point mass") {
    Loaded L = load("solo");
    Enumeration en =
        freeop::enumerate_paths(L.g, L.d, Ty{"R"}, Ty{"R", "R"}, 1.0, L.w, 4, 2);
    REQUIRE(en.entries.size() == 1);
    REQUIRE(freeop::print_term(en.entries[0].term) == "(gen dup)");
    REQUIRE(en.entries[0].log_prior == 0.0);
    REQUIRE(en.truncated_mass == 0.0);
}

TEST_CASE("recursion expands through sites and keeps the sub-traces") {
    Loaded L = load("solo");
    Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"R", "R", "R", "R"},
                                             Ty{"R", "R"}, 1.0, L.w, 4, 1);
    REQUIRE(en.entries.size() == 1);
    REQUIRE(freeop::print_term(en.entries[0].term) == "(par (gen add) (gen add))");
    REQUIRE(en.entries[0].log_prior == 0.0);
    REQUIRE(en.entries[0].steps[0].fill.subs.size() == 2);
    REQUIRE(en.truncated_mass == 0.0);

    // With no recursion budget the whole distribution is out of reach.
    Enumeration dry = freeop::enumerate_paths(L.g, L.d, Ty{"R", "R", "R", "R"},
                                              Ty{"R", "R"}, 1.0, L.w, 4, 0);
    REQUIRE(dry.entries.empty());
    REQUIRE(dry.truncated_mass == 1.0);
}

TEST_CASE("chain walks enumerate their geometric tail") {
    Loaded L = load("chain");
    Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"X"}, Ty{"Y"}, 1.0,
                                             freeop::uniform_weights(2), 4, 1);
    // The walk stops the moment it reaches the target, so the h loop never
    // fires: one path.
    REQUIRE(en.entries.size() == 1);
    REQUIRE(freeop::print_term(en.entries[0].term) == "(gen g)");
    REQUIRE(std::abs(std::exp(en.entries[0].log_prior) - 1.0) <= 1e-15);
    REQUIRE(en.truncated_mass == 0.0);

    Loaded LL = load("chain_loop");
    Enumeration loops = freeop::enumerate_paths(LL.g, LL.d, Ty{"X"}, Ty{"Y"}, 1.0,
                                                freeop::uniform_weights(3), 4, 1);
    REQUIRE(loops.entries.size() == 4);
    // Entry terms come out right nested from the edge-then-rest recursion.
    std::set<std::string> terms;
    for (const auto& e : loops.entries) terms.insert(freeop::print_term(e.term));
    REQUIRE(terms == std::set<std::string>{
                         "(gen g)",
                         "(seq (gen g2) (gen g))",
                         "(seq (gen g2) (seq (gen g2) (gen g)))",
                         "(seq (gen g2) (seq (gen g2) (seq (gen g2) (gen g))))",
                     });
    for (const auto& e : loops.entries) {
        double p = std::exp(e.log_prior);
        double expected = std::pow(0.5, static_cast<double>(e.steps.size()));
        REQUIRE(std::abs(p - expected) <= 1e-12);
    }
    REQUIRE(std::abs(loops.truncated_mass - 0.0625) <= 1e-12);
    REQUIRE(std::abs(total_mass(loops) - 1.0) <= 1e-12);
}

TEST_CASE("identical endpoints enumerate to the identity") {
    Loaded L = load("arith_small");
    Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"R"}, Ty{"R"}, 1.0, L.w, 4, 1);
    REQUIRE(en.entries.size() == 1);
    REQUIRE(freeop::is_identity(en.entries[0].term));
    REQUIRE(en.entries[0].log_prior == 0.0);
    REQUIRE(en.truncated_mass == 0.0);
}

TEST_CASE("step budget cuts the tail and reports it as truncation") {
    Loaded L = load("arith_small");
    testsupport::Y2x2Policy oracle;

    Enumeration one = freeop::enumerate_paths(L.g, L.d, Ty{"R"}, Ty{"R", "R"},
                                              1.0, L.w, 1, 1);
    REQUIRE(one.entries.size() == 1);
    REQUIRE(freeop::print_term(one.entries[0].term) == "(gen dup)");
    REQUIRE(std::abs(one.truncated_mass - oracle.p_loop(1.0)) <= 1e-12);
    REQUIRE(std::abs(total_mass(one) - 1.0) <= 1e-12);

    // Two steps: dup, or one loop realized by either loop edge and either
    // unary generator, then dup. Parallel edges stay distinct entries here.
    Enumeration two = freeop::enumerate_paths(L.g, L.d, Ty{"R"}, Ty{"R", "R"},
                                              1.0, L.w, 2, 0);
    REQUIRE(two.entries.size() == 5);
    std::set<std::string> keys;
    for (const auto& e : two.entries) keys.insert(freeop::trace_key(e));
    REQUIRE(keys == std::set<std::string>{"e3c0", "e0c0;e3c0", "e0c1;e3c0",
                                          "e1c0;e3c0", "e1c1;e3c0"});
    double ploop = oracle.p_loop(1.0);
    REQUIRE(std::abs(two.truncated_mass - ploop * ploop) <= 1e-12);
    REQUIRE(std::abs(total_mass(two) - 1.0) <= 1e-12);
}

TEST_CASE("entry scores are finalized by the common scorer") {
    Loaded L = load("arith_small");
    Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"R"}, Ty{"R", "R"},
                                             1.0, L.w, 3, 1);
    REQUIRE(en.entries.size() > 5);
    for (const auto& e : en.entries)
        REQUIRE(e.log_prior == freeop::trace_log_prob(L.g, L.d, e, 1.0, L.w));
    REQUIRE(std::abs(total_mass(en) - 1.0) <= 1e-9);
}

TEST_CASE("mass is conserved across budget combinations") {
    Loaded L = load("arith_small");
    for (size_t steps : {1, 2, 3, 4}) {
        for (size_t depth : {0, 1, 2}) {
            Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"R"}, Ty{"R", "R"},
                                                     1.0, L.w, steps, depth);
            CAPTURE(steps, depth);
            REQUIRE(std::abs(total_mass(en) - 1.0) <= 1e-9);
        }
    }
    Loaded W = load("wide_small");
    for (size_t depth : {0, 1, 2}) {
        Enumeration en = freeop::enumerate_paths(W.g, W.d, Ty{"R"}, Ty{"R", "R"},
                                                 1.0, W.w, 3, depth);
        CAPTURE(depth);
        REQUIRE(std::abs(total_mass(en) - 1.0) <= 1e-9);
    }
}

TEST_CASE("parallel identity padding appears in product fills") {
    Loaded L = load("arith_small");
    Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"R", "R", "R"},
                                             Ty{"R", "R"}, 1.0, L.w, 1, 1);
    // The two site-induced edges share the same endpoint types, so each can
    // be filled by either site: four entries, two distinct terms, each
    // pairing an identity leg with an add leg, each entry worth a quarter.
    REQUIRE(en.entries.size() == 4);
    std::map<std::string, int> terms;
    for (const auto& e : en.entries) {
        terms[freeop::print_term(e.term)] += 1;
        REQUIRE(e.steps[0].fill.subs.size() == 2);
        REQUIRE(std::abs(e.log_prior - std::log(0.25)) <= 1e-12);
        freeop::validate_term(L.g.sig, e.term);
    }
    REQUIRE(terms == std::map<std::string, int>{{"(par (id [R]) (gen add))", 2},
                                                {"(par (gen add) (id [R]))", 2}});
    REQUIRE(en.truncated_mass == 0.0);
    REQUIRE(std::abs(total_mass(en) - 1.0) <= 1e-12);
}

TEST_CASE("per-edge budgets separate completions from truncations") {
    Loaded L = load("arith_small");
    // One step from the length-4 product: only the direct site edge lands on
    // the target; the three edges through the length-3 product run out of
    // budget and show up as truncation.
    Enumeration en = freeop::enumerate_paths(L.g, L.d, Ty{"R", "R", "R", "R"},
                                             Ty{"R", "R"}, 1.0, L.w, 1, 1);
    REQUIRE(en.entries.size() == 1);
    REQUIRE(freeop::print_term(en.entries[0].term) == "(par (gen add) (gen add))");
    REQUIRE(en.entries[0].steps[0].fill.subs.size() == 2);
    REQUIRE(en.truncated_mass > 0.0);
    REQUIRE(std::abs(total_mass(en) - 1.0) <= 1e-12);
}

TEST_CASE("unreachable targets are rejected up front") {
    Loaded L = load("chain");
    REQUIRE_THROWS_AS(freeop::enumerate_paths(L.g, L.d, Ty{"Y"}, Ty{"X"}, 1.0,
                                              freeop::uniform_weights(2), 4, 1),
                      freeop::DeadEnd);
}
