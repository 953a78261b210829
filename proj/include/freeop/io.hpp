#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "freeop/errors.hpp"

namespace freeop {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

// Shortest text that round-trips the double; used wherever floats end up in
// deterministic text output (CSV, reports).
inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace freeop
