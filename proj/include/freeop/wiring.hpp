#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "freeop/io.hpp"
#include "freeop/prior.hpp"

namespace freeop {

// A wiring diagram: an outer boundary, a row of typed holes (boxes), and
// wires that each carry one base-type slot from a producer surface (outer
// domain or a box codomain) to a consumer surface (a box domain or the outer
// codomain). Every slot on every surface is used exactly once, wires may not
// run straight from the outer domain to the outer codomain, and the whole
// arrangement must be realizable as left-to-right stages without crossings.

struct SlotRef {
    int box = -1;  // -1 is the outer boundary
    size_t slot = 0;

    bool operator==(const SlotRef& o) const { return box == o.box && slot == o.slot; }
    bool operator<(const SlotRef& o) const {
        return box != o.box ? box < o.box : slot < o.slot;
    }
};

struct Wire {
    SlotRef from;
    SlotRef to;
};

struct WiringBox {
    std::string name;
    Ty dom;
    Ty cod;
};

struct WiringDiagram {
    Ty outer_dom;
    Ty outer_cod;
    std::vector<WiringBox> boxes;
    std::vector<Wire> wires;
};

namespace detail {

inline std::string slot_desc(const WiringDiagram& d, const SlotRef& r, bool producer) {
    if (r.box < 0) return std::string(producer ? "outer domain" : "outer codomain") +
                          " slot " + std::to_string(r.slot);
    return "box " + d.boxes[static_cast<size_t>(r.box)].name + (producer ? " output " : " input ") +
           "slot " + std::to_string(r.slot);
}

inline const std::string& producer_type(const WiringDiagram& d, const SlotRef& r) {
    if (r.box < 0) {
        if (r.slot >= d.outer_dom.size())
            throw IndexOutOfRange("outer domain has no slot " + std::to_string(r.slot));
        return d.outer_dom[r.slot];
    }
    const WiringBox& b = d.boxes[static_cast<size_t>(r.box)];
    if (r.slot >= b.cod.size())
        throw IndexOutOfRange("box " + b.name + " output has no slot " + std::to_string(r.slot));
    return b.cod[r.slot];
}

inline const std::string& consumer_type(const WiringDiagram& d, const SlotRef& r) {
    if (r.box < 0) {
        if (r.slot >= d.outer_cod.size())
            throw IndexOutOfRange("outer codomain has no slot " + std::to_string(r.slot));
        return d.outer_cod[r.slot];
    }
    const WiringBox& b = d.boxes[static_cast<size_t>(r.box)];
    if (r.slot >= b.dom.size())
        throw IndexOutOfRange("box " + b.name + " input has no slot " + std::to_string(r.slot));
    return b.dom[r.slot];
}

// One pass of the left-to-right placement, shared by validation (dry run)
// and composition. Returns box indices in placement order paired with the
// position of their input run among the live channels.
inline std::vector<std::pair<size_t, size_t>> layering_plan(const WiringDiagram& d) {
    std::map<SlotRef, SlotRef> feed;  // consumer -> producer
    for (const auto& w : d.wires) feed[w.to] = w.from;
    auto feed_of = [&](const SlotRef& r) -> const SlotRef& {
        auto it = feed.find(r);
        if (it == feed.end()) throw DanglingSlot(slot_desc(d, r, false) + " is not wired");
        return it->second;
    };

    std::vector<SlotRef> channels;
    for (size_t s = 0; s < d.outer_dom.size(); ++s)
        channels.push_back({-1, s});

    std::vector<bool> placed(d.boxes.size(), false);
    std::vector<std::pair<size_t, size_t>> plan;
    for (size_t round = 0; round < d.boxes.size(); ++round) {
        size_t best_box = d.boxes.size();
        size_t best_pos = channels.size() + 1;
        for (size_t j = 0; j < d.boxes.size(); ++j) {
            if (placed[j]) continue;
            size_t arity = d.boxes[j].dom.size();
            if (arity == 0) {
                if (channels.empty() && best_box == d.boxes.size()) {
                    best_box = j;
                    best_pos = 0;
                }
                continue;
            }
            SlotRef first = feed_of({static_cast<int>(j), 0});
            auto it = std::find(channels.begin(), channels.end(), first);
            if (it == channels.end()) continue;
            size_t pos = static_cast<size_t>(it - channels.begin());
            if (pos + arity > channels.size()) continue;
            bool run = true;
            for (size_t s = 1; s < arity && run; ++s)
                run = channels[pos + s] == feed_of({static_cast<int>(j), s});
            if (run && pos < best_pos) {
                best_box = j;
                best_pos = pos;
            }
        }
        if (best_box == d.boxes.size())
            throw CrossingWiring("wires cannot be layered left to right without crossing");
        plan.emplace_back(best_box, best_pos);
        placed[best_box] = true;
        std::vector<SlotRef> next;
        next.reserve(channels.size());
        for (size_t i = 0; i < best_pos; ++i) next.push_back(channels[i]);
        for (size_t s = 0; s < d.boxes[best_box].cod.size(); ++s)
            next.push_back({static_cast<int>(best_box), s});
        for (size_t i = best_pos + d.boxes[best_box].dom.size(); i < channels.size(); ++i)
            next.push_back(channels[i]);
        channels = std::move(next);
    }

    if (channels.size() != d.outer_cod.size())
        throw CrossingWiring("final stage leaves " + std::to_string(channels.size()) +
                             " channels for " + std::to_string(d.outer_cod.size()) +
                             " outer codomain slots");
    for (size_t s = 0; s < d.outer_cod.size(); ++s) {
        if (!(feed_of({-1, s}) == channels[s]))
            throw CrossingWiring("outer codomain slot " + std::to_string(s) +
                                 " is not fed by the channel arriving at its position");
    }
    return plan;
}

} // namespace detail

inline void validate_wiring(const Signature& sig, const WiringDiagram& d) {
    if (d.boxes.empty()) throw ValidationError("diagram needs at least one box");
    if (!sig.has_object(d.outer_dom) || !sig.has_object(d.outer_cod))
        throw ValidationError("outer boundary types must be declared objects");
    std::vector<std::string> names;
    for (const auto& b : d.boxes) {
        if (!is_identifier(b.name)) throw ValidationError("bad box name: " + b.name);
        if (std::find(names.begin(), names.end(), b.name) != names.end())
            throw ValidationError("duplicate box name: " + b.name);
        names.push_back(b.name);
        if (!sig.has_object(b.dom) || !sig.has_object(b.cod))
            throw ValidationError("box " + b.name + " types must be declared objects");
    }

    std::map<SlotRef, size_t> produced, consumed;
    for (const auto& w : d.wires) {
        if (w.from.box < -1 || w.from.box >= static_cast<int>(d.boxes.size()) ||
            w.to.box < -1 || w.to.box >= static_cast<int>(d.boxes.size()))
            throw IndexOutOfRange("wire references a box that does not exist");
        if (w.from.box == -1 && w.to.box == -1)
            throw ValidationError("wire may not run from the outer domain to the outer codomain");
        const std::string& pt = detail::producer_type(d, w.from);
        const std::string& ct = detail::consumer_type(d, w.to);
        if (pt != ct)
            throw SlotTypeMismatch(detail::slot_desc(d, w.from, true) + " carries " + pt +
                                   " but " + detail::slot_desc(d, w.to, false) + " needs " + ct);
        produced[w.from]++;
        consumed[w.to]++;
    }

    auto check_surface = [&](const std::map<SlotRef, size_t>& used, const SlotRef& r,
                             bool producer) {
        auto it = used.find(r);
        size_t n = it == used.end() ? 0 : it->second;
        if (n != 1)
            throw DanglingSlot(detail::slot_desc(d, r, producer) +
                               (n == 0 ? " is not wired" : " is wired more than once"));
    };
    for (size_t s = 0; s < d.outer_dom.size(); ++s) check_surface(produced, {-1, s}, true);
    for (size_t s = 0; s < d.outer_cod.size(); ++s) check_surface(consumed, {-1, s}, false);
    for (size_t j = 0; j < d.boxes.size(); ++j) {
        for (size_t s = 0; s < d.boxes[j].dom.size(); ++s)
            check_surface(consumed, {static_cast<int>(j), s}, false);
        for (size_t s = 0; s < d.boxes[j].cod.size(); ++s)
            check_surface(produced, {static_cast<int>(j), s}, true);
    }

    // Cycle check over box-to-box wires.
    std::vector<std::vector<size_t>> succ(d.boxes.size());
    std::vector<size_t> indeg(d.boxes.size(), 0);
    for (const auto& w : d.wires) {
        if (w.from.box >= 0 && w.to.box >= 0) {
            succ[static_cast<size_t>(w.from.box)].push_back(static_cast<size_t>(w.to.box));
            indeg[static_cast<size_t>(w.to.box)]++;
        }
    }
    std::vector<size_t> ready;
    for (size_t j = 0; j < d.boxes.size(); ++j)
        if (indeg[j] == 0) ready.push_back(j);
    size_t seen = 0;
    while (!ready.empty()) {
        size_t j = ready.back();
        ready.pop_back();
        ++seen;
        for (size_t k : succ[j])
            if (--indeg[k] == 0) ready.push_back(k);
    }
    if (seen != d.boxes.size()) throw CyclicWiring("wires form a cycle between boxes");

    detail::layering_plan(d);  // rejects crossings
}

// Substitute one term per box and flatten the diagram into a single term by
// stacking stages left to right, padding untouched channels with identities.
inline Term compose_diagram(const Signature& sig, const WiringDiagram& d,
                            const std::vector<Term>& fills) {
    if (fills.size() != d.boxes.size())
        throw DimensionError("need one term per box: " + std::to_string(fills.size()) + " for " +
                             std::to_string(d.boxes.size()));
    for (size_t j = 0; j < d.boxes.size(); ++j) {
        if (dom(sig, fills[j]) != d.boxes[j].dom || cod(sig, fills[j]) != d.boxes[j].cod)
            throw TypeMismatch("term for box " + d.boxes[j].name + " has type " +
                               print_ty(dom(sig, fills[j])) + " -> " +
                               print_ty(cod(sig, fills[j])) + ", expected " +
                               print_ty(d.boxes[j].dom) + " -> " + print_ty(d.boxes[j].cod));
    }

    std::vector<std::pair<size_t, size_t>> plan = detail::layering_plan(d);
    std::vector<std::string> channels(d.outer_dom.begin(), d.outer_dom.end());
    Term result = make_id(d.outer_dom);
    for (const auto& [j, pos] : plan) {
        Ty pre(channels.begin(), channels.begin() + static_cast<long>(pos));
        Ty post(channels.begin() + static_cast<long>(pos + d.boxes[j].dom.size()),
                channels.end());
        std::vector<Term> factors;
        if (!pre.empty()) factors.push_back(make_id(pre));
        factors.push_back(fills[j]);
        if (!post.empty()) factors.push_back(make_id(post));
        Term stage = par(std::move(factors));
        result = compose_seq(sig, result, stage);

        std::vector<std::string> next(pre.begin(), pre.end());
        next.insert(next.end(), d.boxes[j].cod.begin(), d.boxes[j].cod.end());
        next.insert(next.end(), post.begin(), post.end());
        channels = std::move(next);
    }
    if (Ty(channels.begin(), channels.end()) != d.outer_cod)
        throw InternalError("composed channels do not match the outer codomain");
    return result;
}

// --- joint sampling over a diagram ------------------------------------------

struct DiagramSample {
    std::vector<PathTrace> fills;  // one per box, in box order
    Term term;                     // the composed diagram
    double log_prior = 0.0;        // sum of the box priors
};

inline DiagramSample sample_diagram(const OperadGraph& g, const DistanceMatrix& dist,
                                    const WiringDiagram& d, double beta,
                                    const std::vector<double>& w, Rng& rng,
                                    size_t step_cap = 256) {
    DiagramSample out;
    std::vector<Term> terms;
    terms.reserve(d.boxes.size());
    for (size_t j = 0; j < d.boxes.size(); ++j) {
        Rng box_rng = rng.child(j);
        PathTrace trace =
            sample_path(g, dist, d.boxes[j].dom, d.boxes[j].cod, beta, w, box_rng, step_cap);
        out.log_prior += trace.log_prior;
        terms.push_back(trace.term);
        out.fills.push_back(std::move(trace));
    }
    out.term = compose_diagram(g.sig, d, terms);
    return out;
}

// --- JSON in/out -------------------------------------------------------------

namespace detail {

inline SlotRef parse_slot_ref(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, val] : j.items()) {
        (void)val;
        if (key != "box" && key != "slot") throw SchemaError(where + " has unknown key: " + key);
    }
    if (!j.contains("box") || !j.contains("slot"))
        throw SchemaError(where + " needs box and slot");
    if (!j["box"].is_number_integer() || !j["slot"].is_number_unsigned())
        throw SchemaError(where + " box must be an integer, slot a non-negative integer");
    SlotRef r;
    r.box = j["box"].get<int>();
    r.slot = j["slot"].get<size_t>();
    if (r.box < -1) throw SchemaError(where + " box must be -1 or a box index");
    return r;
}

} // namespace detail

inline WiringDiagram parse_wiring(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad diagram JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("diagram must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        (void)val;
        if (key != "outer" && key != "boxes" && key != "wires")
            throw SchemaError("diagram has unknown key: " + key);
    }
    if (!j.contains("outer") || !j.contains("boxes") || !j.contains("wires"))
        throw SchemaError("diagram needs outer, boxes, and wires");

    WiringDiagram d;
    const auto& outer = j["outer"];
    if (!outer.is_object() || !outer.contains("dom") || !outer.contains("cod"))
        throw SchemaError("outer needs dom and cod");
    for (const auto& [key, val] : outer.items()) {
        (void)val;
        if (key != "dom" && key != "cod") throw SchemaError("outer has unknown key: " + key);
    }
    d.outer_dom = detail::ty_from_json(outer["dom"], "outer dom");
    d.outer_cod = detail::ty_from_json(outer["cod"], "outer cod");

    if (!j["boxes"].is_array()) throw SchemaError("boxes must be an array");
    for (const auto& bj : j["boxes"]) {
        if (!bj.is_object()) throw SchemaError("each box must be an object");
        for (const auto& [key, val] : bj.items()) {
            (void)val;
            if (key != "name" && key != "dom" && key != "cod")
                throw SchemaError("box has unknown key: " + key);
        }
        if (!bj.contains("name") || !bj.contains("dom") || !bj.contains("cod"))
            throw SchemaError("each box needs name, dom, and cod");
        if (!bj["name"].is_string()) throw SchemaError("box name must be a string");
        WiringBox b;
        b.name = bj["name"].get<std::string>();
        b.dom = detail::ty_from_json(bj["dom"], "box '" + b.name + "' dom");
        b.cod = detail::ty_from_json(bj["cod"], "box '" + b.name + "' cod");
        d.boxes.push_back(std::move(b));
    }

    if (!j["wires"].is_array()) throw SchemaError("wires must be an array");
    for (const auto& wj : j["wires"]) {
        if (!wj.is_object()) throw SchemaError("each wire must be an object");
        for (const auto& [key, val] : wj.items()) {
            (void)val;
            if (key != "from" && key != "to") throw SchemaError("wire has unknown key: " + key);
        }
        if (!wj.contains("from") || !wj.contains("to"))
            throw SchemaError("each wire needs from and to");
        Wire w;
        w.from = detail::parse_slot_ref(wj["from"], "wire from");
        w.to = detail::parse_slot_ref(wj["to"], "wire to");
        d.wires.push_back(w);
    }
    return d;
}

inline WiringDiagram load_wiring(const std::string& path) { return parse_wiring(read_file(path)); }

inline std::string serialize_wiring(const WiringDiagram& d) {
    nlohmann::ordered_json j;
    j["outer"] = {{"dom", d.outer_dom}, {"cod", d.outer_cod}};
    j["boxes"] = nlohmann::ordered_json::array();
    for (const auto& b : d.boxes)
        j["boxes"].push_back({{"name", b.name}, {"dom", b.dom}, {"cod", b.cod}});
    j["wires"] = nlohmann::ordered_json::array();
    for (const auto& w : d.wires)
        j["wires"].push_back(
            {{"from", {{"box", w.from.box}, {"slot", w.from.slot}}},
             {"to", {{"box", w.to.box}, {"slot", w.to.slot}}}});
    return j.dump(2) + "\n";
}

} // namespace freeop
