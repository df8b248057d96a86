#pragma once

#include <Eigen/Dense>
#include <span>

namespace qoip {

/// Quadrature points in barycentric coordinates; weights sum to the
/// reference measure (1/2 for triangles, 1 for edges).
struct QuadratureRule {
  Eigen::MatrixXd points;   // npts x (dim+1)
  Eigen::VectorXd weights;  // npts
  int exactness = 0;
  int dim = 0;
};

inline constexpr int kMaxTriangleDegree = 20;
inline constexpr int kMaxEdgeDegree = 30;

/// Closed-form integral of prod_i lambda_i^alpha_i over an n-simplex of the
/// given measure: n! alpha! / (n + |alpha|)! * |C|.
double integrate_barycentric_monomial(std::span<const int> alpha, int simplex_dim, double measure);

const QuadratureRule& quad_rule_triangle(int degree);
const QuadratureRule& quad_rule_edge(int degree);

/// Gauss-Legendre nodes/weights on [0,1], exact up to degree 2n-1.
void gauss_legendre_01(int n, Eigen::VectorXd& points, Eigen::VectorXd& weights);

}  // namespace qoip
