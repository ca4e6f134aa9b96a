#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qdion {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for expectations over a standard normal variable:
/// E[f(X)] ~ sum_i w_i f(x_i), with sum_i w_i = 1. Nodes are obtained from
/// the symmetric Jacobi matrix of the probabilists' Hermite recurrence.
QuadratureRule gauss_hermite_normal(std::size_t n);

/// Trapezoidal integral of samples y over a (possibly non-uniform) grid x.
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace qdion
