#include <catch2/catch_amalgamated.hpp>

#include "freeop/distance.hpp"
#include "freeop/term_io.hpp"
#include "freeop/wiring.hpp"
#include "support/helpers.hpp"

using freeop::Signature;
using freeop::Term;
using freeop::Ty;
using freeop::Wire;
using freeop::WiringBox;
using freeop::WiringDiagram;

namespace {

Signature xy_sig() {
    return freeop::parse_signature(R"({
        "base_types": ["X", "Y"],
        "objects": [["X"], ["Y"], ["X", "X"]],
        "generators": [
            {"name": "f", "dom": ["X"], "cod": ["X"]},
            {"name": "u", "dom": ["X"], "cod": ["Y"]}
        ]
    })");
}

Wire wire(int from_box, size_t from_slot, int to_box, size_t to_slot) {
    return Wire{{from_box, from_slot}, {to_box, to_slot}};
}

} // namespace

TEST_CASE("fixture diagrams parse, validate, and round trip") {
    WiringDiagram d = freeop::load_wiring(testsupport::fixture("diagrams/y2x2_pipeline.json"));
    REQUIRE(d.outer_dom == Ty{"R"});
    REQUIRE(d.outer_cod == Ty{"R"});
    REQUIRE(d.boxes.size() == 2);
    REQUIRE(d.boxes[0].name == "build");
    REQUIRE(d.boxes[0].dom == Ty{"R"});
    REQUIRE(d.boxes[0].cod == Ty{"R", "R"});
    REQUIRE(d.boxes[1].name == "reduce");
    REQUIRE(d.boxes[1].dom == Ty{"R", "R"});
    REQUIRE(d.boxes[1].cod == Ty{"R"});
    REQUIRE(d.wires.size() == 4);
    REQUIRE(d.wires[0].from.box == -1);
    REQUIRE(d.wires[0].to.box == 0);
    REQUIRE(d.wires[3].from.box == 1);
    REQUIRE(d.wires[3].to.box == -1);

    Signature arith =
        freeop::load_signature(testsupport::fixture("signatures/arith_small.json"));
    REQUIRE_NOTHROW(freeop::validate_wiring(arith, d));

    Signature solo = freeop::load_signature(testsupport::fixture("signatures/solo.json"));
    WiringDiagram one = freeop::load_wiring(testsupport::fixture("diagrams/one_box.json"));
    REQUIRE_NOTHROW(freeop::validate_wiring(solo, one));

    // Serialization is stable: dump, reparse, dump again, byte for byte.
    std::string text = freeop::serialize_wiring(d);
    REQUIRE(!text.empty());
    REQUIRE(text.back() == '\n');
    WiringDiagram again = freeop::parse_wiring(text);
    REQUIRE(freeop::serialize_wiring(again) == text);
}

TEST_CASE("diagram JSON schema violations are rejected") {
    using freeop::ParseError;
    using freeop::SchemaError;

    REQUIRE_THROWS_AS(freeop::parse_wiring("nonsense"), ParseError);
    REQUIRE_THROWS_AS(freeop::parse_wiring("[]"), SchemaError);
    REQUIRE_THROWS_AS(freeop::parse_wiring(
                          R"({"outer": {"dom": ["R"], "cod": ["R"]}, "boxes": [], "wires": [], "x": 1})"),
                      SchemaError);
    REQUIRE_THROWS_AS(freeop::parse_wiring(R"({"outer": {"dom": ["R"], "cod": ["R"]}, "boxes": []})"),
                      SchemaError);
    REQUIRE_THROWS_AS(freeop::parse_wiring(R"({"outer": 3, "boxes": [], "wires": []})"),
                      SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            R"({"outer": {"dom": ["R"], "cod": ["R"], "z": 1}, "boxes": [], "wires": []})"),
        SchemaError);
    REQUIRE_THROWS_AS(freeop::parse_wiring(
                          R"({"outer": {"dom": ["R"], "cod": ["R"]}, "boxes": 3, "wires": []})"),
                      SchemaError);
    REQUIRE_THROWS_AS(freeop::parse_wiring(
                          R"({"outer": {"dom": ["R"], "cod": ["R"]}, "boxes": [7], "wires": []})"),
                      SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            R"({"outer": {"dom": ["R"], "cod": ["R"]},
                "boxes": [{"name": "b", "dom": ["R"], "cod": ["R"], "q": 1}], "wires": []})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            R"({"outer": {"dom": ["R"], "cod": ["R"]},
                "boxes": [{"name": "b", "cod": ["R"]}], "wires": []})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            R"({"outer": {"dom": ["R"], "cod": ["R"]},
                "boxes": [{"name": 4, "dom": ["R"], "cod": ["R"]}], "wires": []})"),
        SchemaError);
    REQUIRE_THROWS_AS(freeop::parse_wiring(
                          R"({"outer": {"dom": ["R"], "cod": ["R"]}, "boxes": [], "wires": 0})"),
                      SchemaError);

    const std::string head =
        R"({"outer": {"dom": ["R"], "cod": ["R"]},
            "boxes": [{"name": "b", "dom": ["R"], "cod": ["R"]}],)";
    REQUIRE_THROWS_AS(freeop::parse_wiring(head + R"("wires": [3]})"), SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(head + R"("wires": [{"from": {"box": -1, "slot": 0}}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            head +
            R"("wires": [{"from": {"box": -1, "slot": 0}, "to": {"box": 0, "slot": 0}, "via": 1}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(head + R"("wires": [{"from": 3, "to": {"box": 0, "slot": 0}}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            head + R"("wires": [{"from": {"box": -1, "slot": 0, "q": 1}, "to": {"box": 0, "slot": 0}}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(head + R"("wires": [{"from": {"box": -1}, "to": {"box": 0, "slot": 0}}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            head + R"("wires": [{"from": {"box": "a", "slot": 0}, "to": {"box": 0, "slot": 0}}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            head + R"("wires": [{"from": {"box": -1, "slot": -1}, "to": {"box": 0, "slot": 0}}]})"),
        SchemaError);
    REQUIRE_THROWS_AS(
        freeop::parse_wiring(
            head + R"("wires": [{"from": {"box": -2, "slot": 0}, "to": {"box": 0, "slot": 0}}]})"),
        SchemaError);
}

TEST_CASE("structural validation catches each wiring defect") {
    Signature sig = xy_sig();
    WiringBox thru{"thru", {"X"}, {"X"}};

    SECTION("a diagram needs at least one box") {
        WiringDiagram d{{"X"}, {"X"}, {}, {}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::ValidationError);
    }
    SECTION("boundary and box types must be declared objects") {
        WiringDiagram d{{"X", "Y"}, {"X"}, {thru}, {}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::ValidationError);
        WiringDiagram b{{"X"}, {"X"}, {WiringBox{"b", {"Y", "Y"}, {"X"}}}, {}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, b), freeop::ValidationError);
    }
    SECTION("box names must be identifiers and unique") {
        WiringDiagram d{{"X"}, {"X"}, {WiringBox{"no-good", {"X"}, {"X"}}}, {}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::ValidationError);
        WiringDiagram dup{{"X"},
                          {"X"},
                          {WiringBox{"p", {"X"}, {"X"}}, WiringBox{"p", {"X"}, {"X"}}},
                          {}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, dup), freeop::ValidationError);
    }
    SECTION("wires must reference existing boxes and slots") {
        WiringDiagram d{{"X"}, {"X"}, {thru}, {wire(5, 0, 0, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::IndexOutOfRange);
        WiringDiagram low{{"X"}, {"X"}, {thru}, {wire(-2, 0, 0, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, low), freeop::IndexOutOfRange);
        WiringDiagram slot{{"X"}, {"X"}, {thru}, {wire(-1, 3, 0, 0), wire(0, 0, -1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, slot), freeop::IndexOutOfRange);
    }
    SECTION("the outer domain may not feed the outer codomain directly") {
        WiringDiagram d{{"X"}, {"X"}, {thru}, {wire(-1, 0, -1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::ValidationError);
    }
    SECTION("wire endpoints must carry the same base type") {
        WiringDiagram d{{"X"},
                        {"Y"},
                        {thru},
                        {wire(-1, 0, 0, 0), wire(0, 0, -1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::SlotTypeMismatch);
    }
    SECTION("every slot is wired exactly once") {
        WiringDiagram missing{{"X"}, {"X"}, {thru}, {wire(-1, 0, 0, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, missing), freeop::DanglingSlot);
        WiringDiagram twice{{"X"},
                            {"X"},
                            {thru, WiringBox{"thru2", {"X"}, {"X"}}},
                            {wire(-1, 0, 0, 0), wire(-1, 0, 1, 0), wire(0, 0, -1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, twice), freeop::DanglingSlot);
    }
    SECTION("box-to-box wires may not form a cycle") {
        WiringDiagram d{{"X"},
                        {"X"},
                        {thru, WiringBox{"a", {"X"}, {"X"}}, WiringBox{"b", {"X"}, {"X"}}},
                        {wire(-1, 0, 0, 0), wire(0, 0, -1, 0), wire(1, 0, 2, 0),
                         wire(2, 0, 1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::CyclicWiring);
    }
    SECTION("crossed outputs cannot be layered") {
        WiringDiagram d{{"X", "X"},
                        {"X", "X"},
                        {WiringBox{"f", {"X"}, {"X"}}, WiringBox{"g", {"X"}, {"X"}}},
                        {wire(-1, 0, 0, 0), wire(-1, 1, 1, 0), wire(0, 0, -1, 1),
                         wire(1, 0, -1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::CrossingWiring);
    }
    SECTION("a box cannot take its inputs in swapped order") {
        WiringDiagram d{{"X", "X"},
                        {"X"},
                        {WiringBox{"wide", {"X", "X"}, {"X"}}},
                        {wire(-1, 1, 0, 0), wire(-1, 0, 0, 1), wire(0, 0, -1, 0)}};
        REQUIRE_THROWS_AS(freeop::validate_wiring(sig, d), freeop::CrossingWiring);
    }
}

TEST_CASE("composition flattens a diagram into one term") {
    Signature arith =
        freeop::load_signature(testsupport::fixture("signatures/arith_small.json"));
    WiringDiagram pipe =
        freeop::load_wiring(testsupport::fixture("diagrams/y2x2_pipeline.json"));

    Term dup = freeop::parse_term("(gen dup)");
    Term add = freeop::parse_term("(gen add)");
    Term inc = freeop::parse_term("(gen inc)");

    Term whole = freeop::compose_diagram(arith, pipe, {dup, add});
    REQUIRE(freeop::print_term(whole) == "(seq (gen dup) (gen add))");
    REQUIRE_NOTHROW(freeop::validate_term(arith, whole));

    // A single box composes to its own fill.
    WiringDiagram one = freeop::load_wiring(testsupport::fixture("diagrams/one_box.json"));
    REQUIRE(freeop::print_term(freeop::compose_diagram(arith, one, {dup})) == "(gen dup)");

    // Untouched channels are padded with identities on whichever side they
    // pass the active box.
    WiringBox lift{"lift", {"R"}, {"R"}};
    WiringBox join{"join", {"R", "R"}, {"R"}};
    WiringDiagram left{{"R", "R"},
                       {"R"},
                       {lift, join},
                       {wire(-1, 0, 0, 0), wire(0, 0, 1, 0), wire(-1, 1, 1, 1),
                        wire(1, 0, -1, 0)}};
    REQUIRE_NOTHROW(freeop::validate_wiring(arith, left));
    REQUIRE(freeop::print_term(freeop::compose_diagram(arith, left, {inc, add})) ==
            "(seq (par (gen inc) (id [R])) (gen add))");

    WiringDiagram right{{"R", "R"},
                        {"R"},
                        {lift, join},
                        {wire(-1, 1, 0, 0), wire(-1, 0, 1, 0), wire(0, 0, 1, 1),
                         wire(1, 0, -1, 0)}};
    REQUIRE_NOTHROW(freeop::validate_wiring(arith, right));
    REQUIRE(freeop::print_term(freeop::compose_diagram(arith, right, {inc, add})) ==
            "(seq (par (id [R]) (gen inc)) (gen add))");

    REQUIRE_THROWS_AS(freeop::compose_diagram(arith, pipe, {dup}), freeop::DimensionError);
    REQUIRE_THROWS_AS(freeop::compose_diagram(arith, pipe, {add, add}), freeop::TypeMismatch);
}

TEST_CASE("diagram sampling is deterministic and scores add up") {
    Signature solo = freeop::load_signature(testsupport::fixture("signatures/solo.json"));
    freeop::OperadGraph sg = freeop::build_hypergraph(solo);
    freeop::DistanceMatrix sd = freeop::transition_distance(sg);
    std::vector<double> sw = freeop::uniform_weights(freeop::weight_count(sg));
    WiringDiagram one = freeop::load_wiring(testsupport::fixture("diagrams/one_box.json"));

    freeop::Rng rng = freeop::Rng::root(11);
    freeop::DiagramSample forced = freeop::sample_diagram(sg, sd, one, 1.0, sw, rng);
    REQUIRE(freeop::print_term(forced.term) == "(gen dup)");
    REQUIRE(forced.log_prior == 0.0);
    REQUIRE(forced.fills.size() == 1);
    REQUIRE(forced.fills[0].log_prior == 0.0);

    Signature arith =
        freeop::load_signature(testsupport::fixture("signatures/arith_small.json"));
    freeop::OperadGraph ag = freeop::build_hypergraph(arith);
    freeop::DistanceMatrix ad = freeop::transition_distance(ag);
    std::vector<double> aw = freeop::uniform_weights(freeop::weight_count(ag));
    WiringDiagram pipe =
        freeop::load_wiring(testsupport::fixture("diagrams/y2x2_pipeline.json"));

    freeop::Rng r1 = freeop::Rng::root(5);
    freeop::DiagramSample s = freeop::sample_diagram(ag, ad, pipe, 1.0, aw, r1);
    REQUIRE_NOTHROW(freeop::validate_term(arith, s.term));
    REQUIRE(freeop::dom(arith, s.term) == pipe.outer_dom);
    REQUIRE(freeop::cod(arith, s.term) == pipe.outer_cod);
    REQUIRE(s.fills.size() == 2);
    // The reduce box has a single admissible move, so its score is zero and
    // the diagram score equals the build box score exactly.
    REQUIRE(s.fills[1].log_prior == 0.0);
    REQUIRE(s.log_prior == s.fills[0].log_prior);

    // Same seed, same draw, bit for bit.
    freeop::Rng r2 = freeop::Rng::root(5);
    freeop::DiagramSample t = freeop::sample_diagram(ag, ad, pipe, 1.0, aw, r2);
    REQUIRE(freeop::print_term(t.term) == freeop::print_term(s.term));
    REQUIRE(t.log_prior == s.log_prior);

    // Box streams are derived per index from the caller's stream, so reusing
    // the generator replays the same joint draw.
    freeop::DiagramSample u = freeop::sample_diagram(ag, ad, pipe, 1.0, aw, r2);
    REQUIRE(freeop::print_term(u.term) == freeop::print_term(s.term));
    REQUIRE(u.log_prior == s.log_prior);

    // Each box consumes exactly the stream a lone path sampler would get.
    freeop::Rng r3 = freeop::Rng::root(5);
    freeop::Rng c0 = r3.child(0);
    freeop::Rng c1 = r3.child(1);
    freeop::PathTrace p0 = freeop::sample_path(ag, ad, {"R"}, {"R", "R"}, 1.0, aw, c0, 256);
    freeop::PathTrace p1 = freeop::sample_path(ag, ad, {"R", "R"}, {"R"}, 1.0, aw, c1, 256);
    REQUIRE(freeop::trace_key(p0) == freeop::trace_key(s.fills[0]));
    REQUIRE(p0.log_prior == s.fills[0].log_prior);
    REQUIRE(freeop::trace_key(p1) == freeop::trace_key(s.fills[1]));

    REQUIRE_THROWS_AS(freeop::sample_diagram(ag, ad, pipe, 1.0, aw, r1, 0),
                      freeop::StepCapExceeded);
}
