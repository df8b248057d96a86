#pragma once

#include <functional>
#include <memory>

#include "qoip/lagrange.hpp"
#include "qoip/mesh.hpp"

namespace qoip {

enum class SpaceKind { Broken, Lagrange, LagrangeZeroBC, CrouzeixRaviart, Hct };

class HctElementBasis;

/// Scalar data with optional derivatives; grad is required for HCT
/// interpolation, hess only for verification helpers.
struct ScalarField {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> grad;
  std::function<Eigen::Matrix2d(const Vec2&)> hess;
};

struct VectorField {
  std::function<Vec2(const Vec2&)> value;
};

/// Finite element space descriptor with element -> global DOF maps.
/// Immutable after construction; evaluation is pure.
class FeSpace {
 public:
  static std::shared_ptr<const FeSpace> broken(std::shared_ptr<const Mesh> mesh, int p);
  static std::shared_ptr<const FeSpace> lagrange(std::shared_ptr<const Mesh> mesh, int p,
                                                 bool zero_bc);
  static std::shared_ptr<const FeSpace> crouzeix_raviart(std::shared_ptr<const Mesh> mesh);
  static std::shared_ptr<const FeSpace> hct(std::shared_ptr<const Mesh> mesh);

  SpaceKind kind() const { return kind_; }
  int degree() const { return degree_; }
  int value_dim() const { return value_dim_; }
  int dof_count() const { return dof_count_; }
  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }

  /// Scalar local basis size per element (CR: 3 per component, vector DOFs
  /// are interleaved as 2*j + comp; HCT: 12).
  int local_count() const { return local_count_; }
  /// local dof -> global dof (-1 where constrained to zero).
  const std::vector<int>& element_dofs(int k) const { return element_dofs_[k]; }

  // --- Lagrange/Broken node machinery -------------------------------------
  int num_nodes() const { return num_nodes_; }
  Vec2 node_coord(int node) const { return node_coord_[node]; }
  bool node_is_boundary(int node) const { return node_boundary_[node]; }
  int node_to_dof(int node) const { return node_to_dof_[node]; }
  int dof_to_node(int dof) const { return dof_to_node_[dof]; }
  /// Adjacent element of smallest index containing the node, and the node's
  /// local lattice index there.
  int node_owner_element(int node) const { return node_owner_[node]; }
  int node_owner_local(int node) const { return node_owner_local_[node]; }
  /// global node of local lattice index i on element k.
  int element_node(int k, int i) const { return element_nodes_[k][i]; }

  // --- local basis evaluation at barycentric points ------------------------
  Eigen::MatrixXd values(int k, const Eigen::MatrixXd& bary) const;
  std::array<Eigen::MatrixXd, 2> gradients(int k, const Eigen::MatrixXd& bary) const;
  std::array<Eigen::MatrixXd, 3> hessians(int k, const Eigen::MatrixXd& bary) const;

  const HctElementBasis& hct_basis(int k) const;

  ~FeSpace();

 private:
  FeSpace() = default;
  void build_lagrange_nodes();

  SpaceKind kind_ = SpaceKind::Broken;
  int degree_ = 1;
  int value_dim_ = 1;
  int dof_count_ = 0;
  int local_count_ = 0;
  std::shared_ptr<const Mesh> mesh_;
  std::vector<std::vector<int>> element_dofs_;

  int num_nodes_ = 0;
  std::vector<Vec2> node_coord_;
  std::vector<bool> node_boundary_;
  std::vector<int> node_to_dof_, dof_to_node_;
  std::vector<int> node_owner_, node_owner_local_;
  std::vector<std::vector<int>> element_nodes_;

  std::vector<HctElementBasis> hct_;
};

/// Space handle plus coefficient vector.
struct FeFunction {
  std::shared_ptr<const FeSpace> space;
  Eigen::VectorXd coeffs;

  FeFunction() = default;
  explicit FeFunction(std::shared_ptr<const FeSpace> s)
      : space(std::move(s)), coeffs(Eigen::VectorXd::Zero(space->dof_count())) {}
  FeFunction(std::shared_ptr<const FeSpace> s, Eigen::VectorXd c)
      : space(std::move(s)), coeffs(std::move(c)) {}

  // scalar evaluation
  Eigen::VectorXd eval(int k, const Eigen::MatrixXd& bary) const;
  Eigen::MatrixXd eval_grad(int k, const Eigen::MatrixXd& bary) const;     // npts x 2
  Eigen::MatrixXd eval_hessian(int k, const Eigen::MatrixXd& bary) const;  // npts x (xx,xy,yy)
  // vector evaluation (CR)
  Eigen::MatrixXd eval_vec(int k, const Eigen::MatrixXd& bary) const;  // npts x 2
  /// gradients of both components; result[q](c,d) = d u_c / d x_d.
  std::vector<Eigen::Matrix2d> eval_grad_vec(int k, const Eigen::MatrixXd& bary) const;
};

enum class FaceMode { Jump, Average };

/// Barycentric coordinates, w.r.t. the element on the given side of face f,
/// of the points at edge parameters t (measured from face.verts[0]).
Eigen::MatrixXd face_points_in_element(const Mesh& mesh, int f, int side,
                                       const Eigen::VectorXd& t);

/// Integral over face f of q * [[fe]] or q * {fe}; q is given by
/// edge-Lagrange coefficients (degree = q_coeffs.size()-1, nodes from
/// face.verts[0] to verts[1]). Both modes return the trace integral on
/// boundary faces. For vector spaces, comp selects the component.
double face_moment(const FeFunction& fe, int f, const Eigen::VectorXd& q_coeffs, FaceMode mode,
                   int comp = 0, int quad_degree = -1);

/// Nodal/DOF interpolation into the space (point values; face means for CR;
/// value+gradient+midpoint normal derivative for HCT).
FeFunction interpolate(const std::shared_ptr<const FeSpace>& space, const ScalarField& u);
FeFunction interpolate_vector(const std::shared_ptr<const FeSpace>& space, const VectorField& u);

/// Exact re-interpolation of a conforming Lagrange function into a broken
/// space of degree >= its own on the same mesh.
FeFunction to_broken(const FeFunction& fn, const std::shared_ptr<const FeSpace>& broken_space);

}  // namespace qoip
