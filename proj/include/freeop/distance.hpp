#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "freeop/hypergraph.hpp"
#include "freeop/io.hpp"
#include "freeop/matexp.hpp"

namespace freeop {

// Negative log walk mass between type vertices: entry (i, j) is
// -log([exp(A)]_ij) for the adjacency matrix A. Small when many short walks
// connect i to j, +infinity when no walk at all does. Entries below the
// underflow floor are treated as unreachable rather than producing huge
// finite values from rounding noise.
struct DistanceMatrix {
    static constexpr double kUnderflowFloor = 1e-300;

    Eigen::MatrixXd values;

    double at(size_t i, size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

inline DistanceMatrix transition_distance(const OperadGraph& g, double tol = 1e-15) {
    Eigen::MatrixXd walks = matrix_exponential(g.adjacency().cast<double>(), tol);
    DistanceMatrix d;
    d.values.resize(walks.rows(), walks.cols());
    for (Eigen::Index i = 0; i < walks.rows(); ++i) {
        for (Eigen::Index j = 0; j < walks.cols(); ++j) {
            double w = walks(i, j);
            d.values(i, j) = (w <= DistanceMatrix::kUnderflowFloor)
                                 ? std::numeric_limits<double>::infinity()
                                 : -std::log(w);
        }
    }
    return d;
}

// CSV dump with vertex labels; unreachable entries print as "inf".
inline std::string distance_csv(const OperadGraph& g, const DistanceMatrix& d) {
    std::string out = "vertex";
    for (const auto& v : g.vertices) out += "," + print_ty(v);
    out += "\n";
    for (size_t i = 0; i < g.vertices.size(); ++i) {
        out += print_ty(g.vertices[i]);
        for (size_t j = 0; j < g.vertices.size(); ++j) {
            double x = d.at(i, j);
            out += ",";
            out += std::isinf(x) ? "inf" : format_double(x);
        }
        out += "\n";
    }
    return out;
}

} // namespace freeop
