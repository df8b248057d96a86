#pragma once

#include <Eigen/Dense>
#include <array>

#include "qoip/mesh.hpp"

namespace qoip {

/// Hsieh-Clough-Tocher macro element: C1 cubics on the 3-subtriangle split
/// of an element. The 12 local DOFs are ordered
///   [v0, v0_x, v0_y, v1, v1_x, v1_y, v2, v2_x, v2_y, e0, e1, e2]
/// where e_i is the normal derivative at the midpoint of the edge opposite
/// local vertex i, taken along the global face normal. Shape functions are
/// obtained from one dense local solve per element and cached.
class HctElementBasis {
 public:
  HctElementBasis(const Mesh& mesh, int k);

  int subtriangle_of(const Vec2& x) const;
  const std::array<std::array<Vec2, 3>, 3>& subtriangles() const { return sub_; }

  /// Values/gradients/second derivatives of all 12 shape functions at x.
  /// grads is 12x2, hess is 12x3 (xx, xy, yy). Null outputs are skipped.
  void eval(const Vec2& x, Eigen::VectorXd* vals, Eigen::MatrixXd* grads,
            Eigen::MatrixXd* hess) const;

  double solve_residual() const { return residual_; }

 private:
  Vec2 center_;
  double scale_ = 1.0;
  std::array<std::array<Vec2, 3>, 3> sub_;           // physical subtriangle vertices
  std::array<Eigen::Matrix<double, 3, 3>, 3> inv_;   // barycentric solvers per subtriangle
  std::array<Eigen::MatrixXd, 3> coeff_;             // 10 x 12 monomial coeffs (scaled frame)
  double residual_ = 0.0;
};

}  // namespace qoip
