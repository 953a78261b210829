#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeop/interp.hpp"
#include "freeop/io.hpp"
#include "freeop/signature.hpp"

namespace freeop {

// --- datasets ----------------------------------------------------------------
//
// CSV with header x1..xm,y1..yn (m may be zero), one record per line, plain
// finite decimal numbers.

struct Dataset {
    size_t in_arity = 0;
    size_t out_arity = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> outputs;

    size_t size() const { return outputs.size(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_strict_double(const std::string& field) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("bad numeric field: '" + field + "'");
    if (!std::isfinite(value)) throw ValidationError("dataset values must be finite");
    return value;
}

} // namespace detail

inline Dataset parse_dataset_csv(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        std::string line =
            nl == std::string::npos ? text.substr(start) : text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    if (lines.empty()) throw SchemaError("dataset has no header line");

    std::vector<std::string> header = detail::split_csv_line(lines[0]);
    size_t m = 0;
    while (m < header.size() && header[m] == "x" + std::to_string(m + 1)) ++m;
    size_t n = 0;
    while (m + n < header.size() && header[m + n] == "y" + std::to_string(n + 1)) ++n;
    if (n == 0 || m + n != header.size())
        throw SchemaError("dataset header must be x1..xm,y1..yn, got '" + lines[0] + "'");

    Dataset d;
    d.in_arity = m;
    d.out_arity = n;
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> fields = detail::split_csv_line(lines[i]);
        if (fields.size() != m + n)
            throw ValidationError("record " + std::to_string(i) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(m + n));
        std::vector<double> in, out;
        for (size_t k = 0; k < m; ++k) in.push_back(detail::parse_strict_double(fields[k]));
        for (size_t k = 0; k < n; ++k) out.push_back(detail::parse_strict_double(fields[m + k]));
        d.inputs.push_back(std::move(in));
        d.outputs.push_back(std::move(out));
    }
    if (d.size() == 0) throw ValidationError("dataset has no records");
    return d;
}

inline Dataset load_dataset(const std::string& path) {
    return parse_dataset_csv(read_file(path));
}

// --- built-in interpreters -----------------------------------------------------

inline Interpreter make_interpreter(const std::string& name) {
    Interpreter interp;
    auto unary = [](double (*f)(double)) {
        return Binding{1, 1, [f](const std::vector<double>& v) {
                           return std::vector<double>{f(v[0])};
                       }};
    };
    if (name == "arith") {
        interp.bindings["inc"] = unary([](double x) { return x + 1.0; });
        interp.bindings["dbl"] = unary([](double x) { return 2.0 * x; });
        interp.bindings["add"] = Binding{2, 1, [](const std::vector<double>& v) {
                                             return std::vector<double>{v[0] + v[1]};
                                         }};
        interp.bindings["dup"] = Binding{1, 2, [](const std::vector<double>& v) {
                                             return std::vector<double>{v[0], v[0]};
                                         }};
        return interp;
    }
    if (name == "wide") {
        interp.bindings["inc"] = unary([](double x) { return x + 1.0; });
        interp.bindings["add"] = Binding{2, 1, [](const std::vector<double>& v) {
                                             return std::vector<double>{v[0] + v[1]};
                                         }};
        interp.bindings["trip"] = Binding{1, 3, [](const std::vector<double>& v) {
                                              return std::vector<double>{v[0], v[0], v[0]};
                                          }};
        return interp;
    }
    throw ValidationError("unknown interpreter: " + name);
}

// --- likelihoods ---------------------------------------------------------------

enum class LikelihoodKind { Gaussian, Uniform };

struct LikelihoodSpec {
    LikelihoodKind kind = LikelihoodKind::Gaussian;
    double sigma = 0.1;       // gaussian scale
    double half_width = 1.0;  // uniform half width
};

inline double log_likelihood_record(const LikelihoodSpec& spec,
                                    const std::vector<double>& predicted,
                                    const std::vector<double>& observed) {
    if (predicted.size() != observed.size())
        throw ArityError("prediction arity " + std::to_string(predicted.size()) +
                         " does not match observation arity " + std::to_string(observed.size()));
    double lp = 0.0;
    for (size_t k = 0; k < observed.size(); ++k) {
        double y = observed[k];
        double yhat = predicted[k];
        if (!std::isfinite(yhat)) return -std::numeric_limits<double>::infinity();
        if (spec.kind == LikelihoodKind::Gaussian) {
            double z = (y - yhat) / spec.sigma;
            lp += -std::log(spec.sigma * std::sqrt(2.0 * M_PI)) - 0.5 * z * z;
        } else {
            if (std::abs(y - yhat) <= spec.half_width)
                lp += -std::log(2.0 * spec.half_width);
            else
                return -std::numeric_limits<double>::infinity();
        }
    }
    return lp;
}

// --- tasks ----------------------------------------------------------------------

struct Task {
    Signature sig;
    Dataset data;
    Interpreter interp;
    LikelihoodSpec lik;
};

inline double log_likelihood(const Task& task, const Term& term) {
    double total = 0.0;
    for (size_t i = 0; i < task.data.size(); ++i) {
        std::vector<double> predicted = evaluate(task.interp, term, task.data.inputs[i]);
        total += log_likelihood_record(task.lik, predicted, task.data.outputs[i]);
        if (std::isinf(total)) return -std::numeric_limits<double>::infinity();
    }
    return total;
}

namespace detail {

inline std::string join_path(const std::string& base_dir, const std::string& path) {
    if (path.empty()) throw ValidationError("empty path");
    if (path.front() == '/' || base_dir.empty()) return path;
    return base_dir + "/" + path;
}

inline std::string dirname_of(const std::string& path) {
    size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

} // namespace detail

inline LikelihoodSpec parse_likelihood(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw SchemaError("likelihood needs a string kind");
    LikelihoodSpec spec;
    std::string kind = j["kind"].get<std::string>();
    if (kind == "gaussian") {
        spec.kind = LikelihoodKind::Gaussian;
        for (const auto& [key, val] : j.items()) {
            (void)val;
            if (key != "kind" && key != "sigma")
                throw SchemaError("gaussian likelihood has unknown key: " + key);
        }
        if (!j.contains("sigma") || !j["sigma"].is_number())
            throw SchemaError("gaussian likelihood needs a numeric sigma");
        spec.sigma = j["sigma"].get<double>();
        if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma))
            throw ValidationError("sigma must be positive and finite");
    } else if (kind == "uniform") {
        spec.kind = LikelihoodKind::Uniform;
        for (const auto& [key, val] : j.items()) {
            (void)val;
            if (key != "kind" && key != "half_width")
                throw SchemaError("uniform likelihood has unknown key: " + key);
        }
        if (!j.contains("half_width") || !j["half_width"].is_number())
            throw SchemaError("uniform likelihood needs a numeric half_width");
        spec.half_width = j["half_width"].get<double>();
        if (!(spec.half_width > 0.0) || !std::isfinite(spec.half_width))
            throw ValidationError("half_width must be positive and finite");
    } else {
        throw SchemaError("unknown likelihood kind: " + kind);
    }
    return spec;
}

// Task files point at a signature and a dataset (paths resolved against the
// task file's directory), name a built-in interpreter, and fix a likelihood.
inline Task parse_task(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad task JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("task must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        (void)val;
        if (key != "signature" && key != "dataset" && key != "interpreter" &&
            key != "likelihood")
            throw SchemaError("task has unknown key: " + key);
    }
    for (const char* key : {"signature", "dataset", "interpreter", "likelihood"})
        if (!j.contains(key)) throw SchemaError(std::string("task needs key: ") + key);
    if (!j["signature"].is_string() || !j["dataset"].is_string() ||
        !j["interpreter"].is_string())
        throw SchemaError("signature, dataset, and interpreter must be strings");

    Task task;
    task.sig = load_signature(detail::join_path(base_dir, j["signature"].get<std::string>()));
    task.data = load_dataset(detail::join_path(base_dir, j["dataset"].get<std::string>()));
    task.interp = make_interpreter(j["interpreter"].get<std::string>());
    task.lik = parse_likelihood(j["likelihood"]);
    validate_interpreter(task.sig, task.interp);
    return task;
}

inline Task load_task(const std::string& path) {
    return parse_task(read_file(path), detail::dirname_of(path));
}

} // namespace freeop
