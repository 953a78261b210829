#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeop/errors.hpp"
#include "freeop/io.hpp"
#include "freeop/types.hpp"

namespace freeop {

// A typed primitive operation. Loops (dom == cod) are fine; the only reserved
// combination is the name "id" together with dom == cod, which would shadow
// the structural identity.
struct Generator {
    std::string name;
    Ty dom;
    Ty cod;

    bool operator==(const Generator&) const = default;
};

// Finite presentation of the term language: base type names, the declared
// object set, and an ordered list of generators. Generator order is
// load-bearing downstream (it fixes weight vector indices), so it is kept
// exactly as declared.
struct Signature {
    std::vector<std::string> base_types;
    std::vector<Ty> objects;
    std::vector<Generator> generators;

    bool operator==(const Signature&) const = default;

    bool has_object(const Ty& ty) const {
        return std::find(objects.begin(), objects.end(), ty) != objects.end();
    }

    const Generator* find(const std::string& name) const {
        for (const auto& g : generators)
            if (g.name == name) return &g;
        return nullptr;
    }

    size_t generator_index(const std::string& name) const {
        for (size_t i = 0; i < generators.size(); ++i)
            if (generators[i].name == name) return i;
        throw UnboundGenerator("no generator named '" + name + "'");
    }
};

namespace detail {
inline void check_ty_factors(const Ty& ty, const std::vector<std::string>& bases,
                             const std::string& where) {
    for (const auto& f : ty) {
        if (std::find(bases.begin(), bases.end(), f) == bases.end())
            throw ValidationError(where + " uses undeclared base type '" + f + "'");
    }
}
} // namespace detail

// Checks well-formedness and grows the object set with the implicit length-1
// object for every base type, so each factor of a product is itself a vertex
// later on. Call once after construction or parsing.
inline void validate_signature(Signature& sig) {
    if (sig.base_types.empty())
        throw ValidationError("signature declares no base types");
    std::set<std::string> seen_bases;
    for (const auto& b : sig.base_types) {
        if (!is_identifier(b))
            throw ValidationError("base type name '" + b + "' is not an identifier");
        if (!seen_bases.insert(b).second)
            throw ValidationError("duplicate base type '" + b + "'");
    }

    for (const auto& obj : sig.objects)
        detail::check_ty_factors(obj, sig.base_types, "object " + print_ty(obj));
    for (const auto& b : sig.base_types) {
        Ty single{b};
        if (!sig.has_object(single)) sig.objects.push_back(single);
    }
    std::set<Ty> seen_objects;
    for (const auto& obj : sig.objects) {
        if (!seen_objects.insert(obj).second)
            throw ValidationError("duplicate object " + print_ty(obj));
    }
    if (sig.objects.empty())
        throw ValidationError("signature declares no objects");

    std::set<std::string> seen_names;
    for (const auto& g : sig.generators) {
        if (!is_identifier(g.name))
            throw ValidationError("generator name '" + g.name + "' is not an identifier");
        if (!seen_names.insert(g.name).second)
            throw ValidationError("duplicate generator '" + g.name + "'");
        if (g.name == "id" && g.dom == g.cod)
            throw ValidationError("generator 'id' with dom == cod shadows the identity");
        if (!sig.has_object(g.dom))
            throw ValidationError("generator '" + g.name + "' dom " + print_ty(g.dom) +
                                  " is not a declared object");
        if (!sig.has_object(g.cod))
            throw ValidationError("generator '" + g.name + "' cod " + print_ty(g.cod) +
                                  " is not a declared object");
    }
}

// --- file format ---------------------------------------------------------
//
// {
//   "base_types": ["R"],
//   "objects": [["R"], ["R","R"]],
//   "generators": [{"name": "inc", "dom": ["R"], "cod": ["R"]}, ...]
// }

namespace detail {
inline Ty ty_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + " must be an array of base type names");
    Ty out;
    for (const auto& e : j) {
        if (!e.is_string()) throw SchemaError(where + " entries must be strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}
} // namespace detail

inline Signature parse_signature(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("signature is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("signature document must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "base_types" && it.key() != "objects" && it.key() != "generators")
            throw SchemaError("unknown signature key '" + it.key() + "'");
    }

    Signature sig;
    if (!j.contains("base_types") || !j["base_types"].is_array())
        throw SchemaError("missing or non-array key 'base_types'");
    for (const auto& b : j["base_types"]) {
        if (!b.is_string()) throw SchemaError("'base_types' entries must be strings");
        sig.base_types.push_back(b.get<std::string>());
    }
    if (!j.contains("objects") || !j["objects"].is_array())
        throw SchemaError("missing or non-array key 'objects'");
    for (const auto& o : j["objects"])
        sig.objects.push_back(detail::ty_from_json(o, "object"));
    if (!j.contains("generators") || !j["generators"].is_array())
        throw SchemaError("missing or non-array key 'generators'");
    for (const auto& g : j["generators"]) {
        if (!g.is_object()) throw SchemaError("generator entries must be objects");
        for (auto it = g.begin(); it != g.end(); ++it) {
            if (it.key() != "name" && it.key() != "dom" && it.key() != "cod")
                throw SchemaError("unknown generator key '" + it.key() + "'");
        }
        if (!g.contains("name") || !g["name"].is_string())
            throw SchemaError("generator missing string key 'name'");
        Generator gen;
        gen.name = g["name"].get<std::string>();
        if (!g.contains("dom")) throw SchemaError("generator '" + gen.name + "' missing key 'dom'");
        if (!g.contains("cod")) throw SchemaError("generator '" + gen.name + "' missing key 'cod'");
        gen.dom = detail::ty_from_json(g["dom"], "generator '" + gen.name + "' dom");
        gen.cod = detail::ty_from_json(g["cod"], "generator '" + gen.name + "' cod");
        sig.generators.push_back(std::move(gen));
    }

    validate_signature(sig);
    return sig;
}

inline Signature load_signature(const std::string& path) {
    return parse_signature(read_file(path));
}

inline std::string serialize_signature(const Signature& sig) {
    nlohmann::ordered_json j;
    j["base_types"] = sig.base_types;
    j["objects"] = nlohmann::ordered_json::array();
    for (const auto& o : sig.objects) j["objects"].push_back(o);
    j["generators"] = nlohmann::ordered_json::array();
    for (const auto& g : sig.generators) {
        nlohmann::ordered_json e;
        e["name"] = g.name;
        e["dom"] = g.dom;
        e["cod"] = g.cod;
        j["generators"].push_back(e);
    }
    return j.dump(2) + "\n";
}

} // namespace freeop
