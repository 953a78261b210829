#pragma once

#include <string>
#include <vector>

#include "freeop/errors.hpp"

namespace freeop {

// An object of the symmetric monoidal category: an ordered list of base type
// names. The empty list is the monoidal unit.
using Ty = std::vector<std::string>;

inline bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

inline Ty tensor(const Ty& a, const Ty& b) {
    Ty out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Text form used by the term grammar and CLI flags: "[]", "[R]", "[R*R]".
inline std::string print_ty(const Ty& ty) {
    std::string out = "[";
    for (size_t i = 0; i < ty.size(); ++i) {
        if (i) out += "*";
        out += ty[i];
    }
    out += "]";
    return out;
}

inline Ty parse_ty(const std::string& text) {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']')
        throw ParseError("type must be bracketed, e.g. [R] or [R*R], got: " + text);
    std::string body = text.substr(1, text.size() - 2);
    Ty out;
    if (body.empty()) return out;
    size_t pos = 0;
    while (true) {
        size_t star = body.find('*', pos);
        std::string factor = body.substr(pos, star == std::string::npos ? star : star - pos);
        if (!is_identifier(factor))
            throw ParseError("bad type factor '" + factor + "' in " + text);
        out.push_back(factor);
        if (star == std::string::npos) break;
        pos = star + 1;
    }
    return out;
}

// Contiguous subsequence test; the empty list counts as a sublist.
inline bool is_sublist(const Ty& needle, const Ty& hay) {
    if (needle.empty()) return true;
    if (needle.size() > hay.size()) return false;
    for (size_t start = 0; start + needle.size() <= hay.size(); ++start) {
        bool hit = true;
        for (size_t k = 0; k < needle.size(); ++k) {
            if (hay[start + k] != needle[k]) { hit = false; break; }
        }
        if (hit) return true;
    }
    return false;
}

} // namespace freeop
