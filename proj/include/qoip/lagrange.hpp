#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace qoip {

/// Lagrange basis of degree p on the reference triangle, nodes on the
/// barycentric lattice (i0/p, i1/p, i2/p). Reference coordinates are
/// (x, y) = (lambda1, lambda2).
class TriangleLagrange {
 public:
  explicit TriangleLagrange(int p);

  int degree() const { return p_; }
  int num_nodes() const { return static_cast<int>(lattice_.size()); }
  const std::array<int, 3>& lattice(int i) const { return lattice_[i]; }
  Eigen::Vector3d node_bary(int i) const;
  /// Local index of the lattice node (i0,i1,i2), or -1.
  int find_node(const std::array<int, 3>& lat) const;

  /// Basis values at barycentric points; result (num_nodes x npts).
  Eigen::MatrixXd values(const Eigen::MatrixXd& bary_pts) const;
  /// Reference-coordinate gradients, result[c](num_nodes x npts).
  std::array<Eigen::MatrixXd, 2> gradients(const Eigen::MatrixXd& bary_pts) const;
  /// Reference-coordinate second derivatives (xx, xy, yy).
  std::array<Eigen::MatrixXd, 3> hessians(const Eigen::MatrixXd& bary_pts) const;

 private:
  int p_;
  std::vector<std::array<int, 3>> lattice_;
  Eigen::MatrixXd coeff_;  // monomial coefficients, column per basis function
};

/// Lagrange basis of degree p on the reference edge [0,1]; nodes t = i/p
/// (single midpoint node for p = 0).
class EdgeLagrange {
 public:
  explicit EdgeLagrange(int p);
  int degree() const { return p_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  double node(int i) const { return nodes_[i]; }
  Eigen::MatrixXd values(const Eigen::VectorXd& t) const;
  Eigen::MatrixXd derivatives(const Eigen::VectorXd& t) const;

 private:
  int p_;
  std::vector<double> nodes_;
  Eigen::MatrixXd coeff_;
};

const TriangleLagrange& triangle_basis(int p);
const EdgeLagrange& edge_basis(int p);

}  // namespace qoip
