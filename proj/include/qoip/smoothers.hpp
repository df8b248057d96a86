#pragma once

#include <Eigen/Sparse>
#include <functional>

#include "qoip/spaces.hpp"

namespace qoip {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Weighted face projection Q_F: coefficients (edge-Lagrange, degree p-1) of
/// the polynomial q solving  int_F (q) r Phi_F = int_F v r  for r in P_{p-1}(F).
/// v is a function of the edge parameter t in [0,1] from verts[0] to verts[1].
Eigen::VectorXd qf_project(const Mesh& mesh, int face, int p,
                           const std::function<double(double)>& v);

/// Weighted element projection Q_K onto P_{p-2}(K) with weight Phi_K;
/// returns Lagrange coefficients of degree p-2 (a single constant for p = 2,
/// an empty vector for p = 1).
Eigen::VectorXd qk_project(const Mesh& mesh, int k, int p,
                           const std::function<double(const Vec2&)>& v);

/// Linear smoothing operator represented as a sparse matrix from the broken
/// coefficient space into a conforming zero-trace Lagrange space.
struct SmootherOp {
  std::shared_ptr<const FeSpace> domain;  // Broken(p)
  std::shared_ptr<const FeSpace> range;   // LagrangeZeroBC(p+1)
  SparseMat matrix;
};

/// Bubble smoother B_p = B_{F,p} + B_{M,p}(id - B_{F,p}).
SmootherOp build_bubble_smoother(const std::shared_ptr<const Mesh>& mesh, int p);
/// E_p = A_p + B_p(id - A_p), invariant on the degree-p Lagrange space.
SmootherOp build_smoother_ep(const std::shared_ptr<const Mesh>& mesh, int p);
/// E~_p = A_1 + B_p(id - A_1), p >= 2; invariant only on degree-1 Lagrange.
SmootherOp build_smoother_ep_tilde(const std::shared_ptr<const Mesh>& mesh, int p);

FeFunction apply_smoother(const SmootherOp& op, const FeFunction& sigma);

/// Simplified nodal averaging A_q on a broken input (one evaluation per DOF,
/// taken from the adjacent element of smallest index). q_avg in {1, p}.
FeFunction nodal_averaging(const FeFunction& sigma, int q_avg);

/// Componentwise E_1 for Crouzeix-Raviart vector fields.
struct VectorSmootherOp {
  std::shared_ptr<const FeSpace> cr;
  SmootherOp scalar;                    // Broken(1) -> LagrangeZeroBC(2)
  std::array<SparseMat, 2> cr_to_broken;
};
VectorSmootherOp build_smoother_e1_vector(const std::shared_ptr<const Mesh>& mesh);
std::array<FeFunction, 2> apply_smoother_e1_vector(const VectorSmootherOp& op,
                                                   const FeFunction& cr_fn);

/// HCT nodal averaging A_HCT of a continuous quadratic.
FeFunction hct_averaging(const FeFunction& sigma,
                         const std::shared_ptr<const FeSpace>& hct_space);

/// H^2_0-conforming degree-9 bubble dual to the face-mean normal derivative:
/// value c_F * ((x-m_F).n) * prod_z (lambda_z^{K1} lambda_z^{K2})^2 on the
/// patch K1 u K2, zero outside; c_F normalized so int_F dPhi/dn = 1.
class NormalBubble {
 public:
  NormalBubble(const Mesh& mesh, int face);
  int face() const { return face_; }
  double normalization() const { return c_; }
  const std::array<int, 2>& patch() const { return patch_; }
  double value(const Vec2& x) const;
  Vec2 grad(const Vec2& x) const;
  Eigen::Vector3d hess(const Vec2& x) const;  // (xx, xy, yy)

 private:
  int face_;
  double c_;
  std::array<int, 2> patch_;
  Vec2 nrm_, mid_;
  std::array<Vec2, 8> fg_;     // affine factor gradients
  std::array<double, 8> fb_;   // affine factor offsets
};

/// E_C0 = A_HCT + B_dn(id - A_HCT); output kept composite.
struct Ec0Smoother {
  std::shared_ptr<const FeSpace> domain;  // LagrangeZeroBC(2)
  std::shared_ptr<const FeSpace> hct_space;
  SparseMat w_hct;  // HCT dofs x domain dofs
  SparseMat w_bub;  // interior faces x domain dofs
  std::vector<NormalBubble> bubbles;
};
Ec0Smoother build_smoother_ec0(const std::shared_ptr<const Mesh>& mesh);

/// HCT part plus per-face normal-bubble coefficients; pointwise evaluable.
struct CompositeOutput {
  FeFunction hct;
  Eigen::VectorXd bubble;
  const std::vector<NormalBubble>* bubbles = nullptr;

  Eigen::VectorXd eval(int k, const Eigen::MatrixXd& bary) const;
  Eigen::MatrixXd eval_grad(int k, const Eigen::MatrixXd& bary) const;     // npts x 2
  Eigen::MatrixXd eval_hessian(int k, const Eigen::MatrixXd& bary) const;  // npts x 3
};
CompositeOutput apply_smoother_ec0(const Ec0Smoother& op, const FeFunction& sigma);

// Building blocks shared with the RHS assembly.
SparseMat averaging_matrix(const std::shared_ptr<const FeSpace>& broken,
                           const std::shared_ptr<const FeSpace>& lagrange_q);
SparseMat conforming_to_broken(const std::shared_ptr<const FeSpace>& lagrange_q,
                               const std::shared_ptr<const FeSpace>& broken);
SparseMat conforming_embedding(const std::shared_ptr<const FeSpace>& lagrange_q,
                               const std::shared_ptr<const FeSpace>& lagrange_r);

}  // namespace qoip
