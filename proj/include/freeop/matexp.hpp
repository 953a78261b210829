#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "freeop/errors.hpp"

namespace freeop {

// Dense matrix exponential by scaling and squaring around a truncated Taylor
// series. The argument is scaled by a power of two until its infinity norm is
// at most one half, the series order is chosen so the truncation remainder
//
//   sum_{k>m} theta^k / k!  <=  theta^(m+1)/(m+1)! * 1/(1 - theta/(m+2))
//
// falls below tol, and the result is squared back up. Arithmetic order is
// fixed, so identical inputs give identical bits.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a, double tol = 1e-15) {
    if (a.rows() != a.cols())
        throw DimensionError("matrix exponential needs a square matrix, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    if (!a.allFinite()) throw NonFiniteValue("matrix exponential of non-finite entries");

    const Eigen::Index n = a.rows();
    if (n == 0) return Eigen::MatrixXd(0, 0);

    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    double theta = norm;
    while (theta > 0.5) {
        theta *= 0.5;
        ++squarings;
    }
    Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);

    int order = 1;
    double term_bound = theta;  // theta^order / order!
    while (order < 64) {
        double tail = term_bound * (theta / (order + 1)) / (1.0 - theta / (order + 2));
        if (tail < tol) break;
        ++order;
        term_bound *= theta / order;
    }

    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= order; ++k) {
        term = (term * b) / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

} // namespace freeop
