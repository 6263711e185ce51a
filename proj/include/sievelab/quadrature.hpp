#pragma once

#include <Eigen/Dense>

namespace sievelab {

/// Nodes and weights of an n-point Gauss-Legendre rule on [0,1]; exact for
/// polynomials up to degree 2n-1.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

QuadratureRule gauss_legendre_unit(int n);

/// Integrates f over [0,1] with the given rule.
template <typename F>
double integrate(const QuadratureRule& rule, F&& f) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

}  // namespace sievelab
