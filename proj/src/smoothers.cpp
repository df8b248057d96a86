#include "qoip/smoothers.hpp"

#include <vector>

#include "qoip/error.hpp"
#include "qoip/hct.hpp"
#include "qoip/quadrature.hpp"

namespace qoip {

namespace {

using Triplet = Eigen::Triplet<double>;

int local_face_index(const Mesh& mesh, int k, int f) {
  for (int i = 0; i < 3; ++i)
    if (mesh.element_faces(k)[i] == f) return i;
  fail(ErrorCode::InvalidArgument, "face not on element");
}

// Values of a P_deg basis on the triangle at barycentric points (constant
// basis for deg = 0, Lagrange otherwise).
Eigen::MatrixXd tri_poly_values(int deg, const Eigen::MatrixXd& bary) {
  if (deg == 0) return Eigen::MatrixXd::Ones(1, bary.rows());
  return triangle_basis(deg).values(bary);
}

int tri_poly_size(int deg) { return (deg + 1) * (deg + 2) / 2; }

}  // namespace

Eigen::VectorXd qf_project(const Mesh& mesh, int face, int p,
                           const std::function<double(double)>& v) {
  require(p >= 1, ErrorCode::InvalidArgument, "qf_project needs p >= 1");
  const Face& F = mesh.face(face);
  const auto& eb = edge_basis(p - 1);
  const QuadratureRule& rule = quad_rule_edge(2 * p + 2);
  const Eigen::VectorXd t = rule.points.col(1);
  const Eigen::MatrixXd ev = eb.values(t);  // p x npts
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
  for (int q = 0; q < t.size(); ++q) {
    const double bubble = (1.0 - t[q]) * t[q];  // Phi_F restricted to F
    const double w = rule.weights[q] * F.length;
    G += w * bubble * ev.col(q) * ev.col(q).transpose();
    m += w * v(t[q]) * ev.col(q);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  require(ldlt.info() == Eigen::Success, ErrorCode::NumericalFailure,
          "singular weighted face Gram matrix");
  return ldlt.solve(m);
}

Eigen::VectorXd qk_project(const Mesh& mesh, int k, int p,
                           const std::function<double(const Vec2&)>& v) {
  require(p >= 1, ErrorCode::InvalidArgument, "qk_project needs p >= 1");
  if (p == 1) return Eigen::VectorXd();
  const int deg = p - 2, m_sz = tri_poly_size(deg);
  const QuadratureRule& rule = quad_rule_triangle(2 * p + 2);
  const Eigen::MatrixXd rv = tri_poly_values(deg, rule.points);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m_sz, m_sz);
  Eigen::VectorXd mom = Eigen::VectorXd::Zero(m_sz);
  for (int q = 0; q < rule.weights.size(); ++q) {
    const auto b = rule.points.row(q);
    const double bubble = b[0] * b[1] * b[2];
    const double w = 2.0 * mesh.area(k) * rule.weights[q];
    G += w * bubble * rv.col(q) * rv.col(q).transpose();
    mom += w * v(mesh.point(k, b.transpose())) * rv.col(q);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  require(ldlt.info() == Eigen::Success, ErrorCode::NumericalFailure,
          "singular weighted element Gram matrix");
  return ldlt.solve(mom);
}

SparseMat averaging_matrix(const std::shared_ptr<const FeSpace>& broken,
                           const std::shared_ptr<const FeSpace>& lagrange_q) {
  const int p = broken->degree(), q = lagrange_q->degree();
  require(q == 1 || q == p, ErrorCode::InvalidArgument, "averaging degree must be 1 or p");
  const auto& pb = triangle_basis(p);
  std::vector<Triplet> trips;
  for (int dof = 0; dof < lagrange_q->dof_count(); ++dof) {
    const int node = lagrange_q->dof_to_node(dof);
    const int kz = lagrange_q->node_owner_element(node);
    const auto& lat = triangle_basis(q).lattice(lagrange_q->node_owner_local(node));
    const std::array<int, 3> lat_p = {lat[0] * (p / q), lat[1] * (p / q), lat[2] * (p / q)};
    const int i = pb.find_node(lat_p);
    trips.emplace_back(dof, broken->element_dofs(kz)[i], 1.0);
  }
  SparseMat A(lagrange_q->dof_count(), broken->dof_count());
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SparseMat conforming_to_broken(const std::shared_ptr<const FeSpace>& lagrange_q,
                               const std::shared_ptr<const FeSpace>& broken) {
  const int p = broken->degree(), q = lagrange_q->degree();
  const auto& pb = triangle_basis(p);
  Eigen::MatrixXd bary(pb.num_nodes(), 3);
  for (int i = 0; i < pb.num_nodes(); ++i) bary.row(i) = pb.node_bary(i).transpose();
  const Eigen::MatrixXd vals = tri_poly_values(q, bary);  // nloc_q x nloc_p
  const Mesh& mesh = broken->mesh();
  std::vector<Triplet> trips;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& qdofs = lagrange_q->element_dofs(k);
    const auto& bdofs = broken->element_dofs(k);
    for (int i = 0; i < pb.num_nodes(); ++i)
      for (std::size_t j = 0; j < qdofs.size(); ++j)
        if (qdofs[j] >= 0 && vals(j, i) != 0.0) trips.emplace_back(bdofs[i], qdofs[j], vals(j, i));
  }
  SparseMat M(broken->dof_count(), lagrange_q->dof_count());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

SparseMat conforming_embedding(const std::shared_ptr<const FeSpace>& lagrange_q,
                               const std::shared_ptr<const FeSpace>& lagrange_r) {
  const int q = lagrange_q->degree();
  std::vector<Triplet> trips;
  for (int dof = 0; dof < lagrange_r->dof_count(); ++dof) {
    const int node = lagrange_r->dof_to_node(dof);
    const int k = lagrange_r->node_owner_element(node);
    const Eigen::MatrixXd bary =
        triangle_basis(lagrange_r->degree()).node_bary(lagrange_r->node_owner_local(node)).transpose();
    const Eigen::MatrixXd vals = tri_poly_values(q, bary);
    const auto& qdofs = lagrange_q->element_dofs(k);
    for (std::size_t j = 0; j < qdofs.size(); ++j)
      if (qdofs[j] >= 0 && std::abs(vals(j, 0)) > 1e-14)
        trips.emplace_back(dof, qdofs[j], vals(j, 0));
  }
  SparseMat M(lagrange_r->dof_count(), lagrange_q->dof_count());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

namespace {

// B_{F,p}: face-bubble part, conserving weighted face moments of averages.
SparseMat build_wf(const std::shared_ptr<const FeSpace>& broken,
                   const std::shared_ptr<const FeSpace>& range) {
  const Mesh& mesh = broken->mesh();
  const int p = broken->degree();
  const int nloc = broken->local_count();
  const auto& eb = edge_basis(p - 1);
  const auto& rb = triangle_basis(p + 1);
  const QuadratureRule& rule = quad_rule_edge(2 * p + 2);
  const Eigen::VectorXd t = rule.points.col(1);
  const Eigen::MatrixXd ev = eb.values(t);  // p x npts

  std::vector<Triplet> trips;
  for (int fidx : mesh.interior_faces()) {
    const Face& F = mesh.face(fidx);
    // weighted Gram and average moments
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, 2 * nloc);
    std::array<Eigen::MatrixXd, 2> trace_bary;
    for (int side = 0; side < 2; ++side) trace_bary[side] = face_points_in_element(mesh, fidx, side, t);
    for (int q = 0; q < t.size(); ++q) {
      const double w = rule.weights[q] * F.length;
      G += w * (1.0 - t[q]) * t[q] * ev.col(q) * ev.col(q).transpose();
    }
    for (int side = 0; side < 2; ++side) {
      const Eigen::MatrixXd psi = broken->values(F.elem[side], trace_bary[side]);  // nloc x npts
      for (int q = 0; q < t.size(); ++q)
        M.block(0, side * nloc, p, nloc) +=
            (0.5 * rule.weights[q] * F.length) * ev.col(q) * psi.col(q).transpose();
    }
    const Eigen::MatrixXd Q = G.ldlt().solve(M);  // p x 2nloc

    // scatter q_j Phi_z^{p-1} Phi_F into the degree-(p+1) nodes of the patch
    for (int side = 0; side < 2; ++side) {
      const int k = F.elem[side];
      const int iF = local_face_index(mesh, k, fidx);
      const int a = (iF + 1) % 3, b = (iF + 2) % 3;
      const int pos1 = mesh.element(k)[a] == F.verts[1] ? a : b;  // weight of verts[1]
      const int pos0 = pos1 == a ? b : a;
      for (int m = 0; m < rb.num_nodes(); ++m) {
        const auto& lat = rb.lattice(m);
        if (side == 1 && lat[iF] == 0) continue;  // node on F, handled from side 0
        const int dof = range->element_dofs(k)[m];
        if (dof < 0) continue;
        const Eigen::Vector3d y = rb.node_bary(m);
        const double phiF = y[pos0] * y[pos1];
        if (phiF == 0.0) continue;
        Eigen::VectorXd ext(p);  // values of the extension basis at y
        if (p == 1) {
          ext[0] = 1.0;
        } else {
          const Eigen::MatrixXd vals = triangle_basis(p - 1).values(y.transpose());
          for (int j = 0; j < p; ++j) {
            std::array<int, 3> latj = {0, 0, 0};
            latj[iF] = 0;
            latj[pos0] = (p - 1) - j;
            latj[pos1] = j;
            ext[j] = vals(triangle_basis(p - 1).find_node(latj), 0);
          }
        }
        for (int c = 0; c < 2 * nloc; ++c) {
          double val = 0.0;
          for (int j = 0; j < p; ++j) val += Q(j, c) * ext[j];
          val *= phiF;
          if (val == 0.0) continue;
          const int col =
              broken->element_dofs(F.elem[c / nloc])[c % nloc];
          trips.emplace_back(dof, col, val);
        }
      }
    }
  }
  SparseMat W(range->dof_count(), broken->dof_count());
  W.setFromTriplets(trips.begin(), trips.end());
  return W;
}

// B_{M,p}: element-bubble part. Input appears as broken part minus a
// conforming degree-(p+1) part, so two matrices are produced.
void build_wm(const std::shared_ptr<const FeSpace>& broken,
              const std::shared_ptr<const FeSpace>& range, SparseMat& wm_broken,
              SparseMat& wm_conf) {
  const Mesh& mesh = broken->mesh();
  const int p = broken->degree();
  const int nc = range->dof_count(), nb = broken->dof_count();
  if (p == 1) {
    wm_broken = SparseMat(nc, nb);
    wm_conf = SparseMat(nc, nc);
    return;
  }
  const int deg = p - 2, m_sz = tri_poly_size(deg);
  const auto& rb = triangle_basis(p + 1);
  const QuadratureRule& rule = quad_rule_triangle(2 * p + 2);
  const Eigen::MatrixXd rv = tri_poly_values(deg, rule.points);
  const Eigen::MatrixXd psi_p = triangle_basis(p).values(rule.points);
  const Eigen::MatrixXd psi_r = rb.values(rule.points);

  std::vector<Triplet> trips_b, trips_c;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m_sz, m_sz);
    Eigen::MatrixXd Mb = Eigen::MatrixXd::Zero(m_sz, psi_p.rows());
    Eigen::MatrixXd Mc = Eigen::MatrixXd::Zero(m_sz, psi_r.rows());
    for (int q = 0; q < rule.weights.size(); ++q) {
      const auto bpt = rule.points.row(q);
      const double w = 2.0 * mesh.area(k) * rule.weights[q];
      G += w * bpt[0] * bpt[1] * bpt[2] * rv.col(q) * rv.col(q).transpose();
      Mb += w * rv.col(q) * psi_p.col(q).transpose();
      Mc += w * rv.col(q) * psi_r.col(q).transpose();
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    const Eigen::MatrixXd Qb = ldlt.solve(Mb), Qc = ldlt.solve(Mc);
    for (int m = 0; m < rb.num_nodes(); ++m) {
      const auto& lat = rb.lattice(m);
      if (lat[0] == 0 || lat[1] == 0 || lat[2] == 0) continue;  // Phi_K vanishes
      const int dof = range->element_dofs(k)[m];
      const Eigen::Vector3d y = rb.node_bary(m);
      const double phiK = y[0] * y[1] * y[2];
      const Eigen::MatrixXd ry = tri_poly_values(deg, y.transpose());
      for (int c = 0; c < Qb.cols(); ++c) {
        const double val = phiK * ry.col(0).dot(Qb.col(c));
        if (val != 0.0) trips_b.emplace_back(dof, broken->element_dofs(k)[c], val);
      }
      for (int c = 0; c < Qc.cols(); ++c) {
        const int col = range->element_dofs(k)[c];
        if (col < 0) continue;
        const double val = phiK * ry.col(0).dot(Qc.col(c));
        if (val != 0.0) trips_c.emplace_back(dof, col, val);
      }
    }
  }
  wm_broken = SparseMat(nc, nb);
  wm_broken.setFromTriplets(trips_b.begin(), trips_b.end());
  wm_conf = SparseMat(nc, nc);
  wm_conf.setFromTriplets(trips_c.begin(), trips_c.end());
}

SmootherOp build_e(const std::shared_ptr<const Mesh>& mesh, int p, int q_avg) {
  require(p >= 1 && p <= 3, ErrorCode::InvalidArgument, "smoothers support p in {1,2,3}");
  SmootherOp op;
  op.domain = FeSpace::broken(mesh, p);
  op.range = FeSpace::lagrange(mesh, p + 1, /*zero_bc=*/true);
  const SparseMat WF = build_wf(op.domain, op.range);
  SparseMat WMb, WMc;
  build_wm(op.domain, op.range, WMb, WMc);
  if (q_avg == 0) {  // bubble smoother only
    op.matrix = WF + WMb - SparseMat(WMc * WF);
    return op;
  }
  const auto lagq = FeSpace::lagrange(mesh, q_avg, /*zero_bc=*/true);
  const SparseMat A = averaging_matrix(op.domain, lagq);
  const SparseMat C2B = conforming_to_broken(lagq, op.domain);
  const SparseMat Emb = conforming_embedding(lagq, op.range);
  SparseMat D(op.domain->dof_count(), op.domain->dof_count());
  D.setIdentity();
  D = D - SparseMat(C2B * A);
  const SparseMat WFD = WF * D;
  op.matrix = SparseMat(Emb * A) + WFD + SparseMat(WMb * D) - SparseMat(WMc * WFD);
  return op;
}

}  // namespace

SmootherOp build_bubble_smoother(const std::shared_ptr<const Mesh>& mesh, int p) {
  return build_e(mesh, p, 0);
}

SmootherOp build_smoother_ep(const std::shared_ptr<const Mesh>& mesh, int p) {
  return build_e(mesh, p, p);
}

SmootherOp build_smoother_ep_tilde(const std::shared_ptr<const Mesh>& mesh, int p) {
  require(p >= 2, ErrorCode::InvalidArgument,
          "first-order averaging variant needs p >= 2 (p = 1 is identical to E_1)");
  return build_e(mesh, p, 1);
}

FeFunction apply_smoother(const SmootherOp& op, const FeFunction& sigma) {
  require(sigma.space->kind() == op.domain->kind() &&
              sigma.space->degree() == op.domain->degree(),
          ErrorCode::InvalidArgument, "smoother input space mismatch");
  return FeFunction(op.range, op.matrix * sigma.coeffs);
}

FeFunction nodal_averaging(const FeFunction& sigma, int q_avg) {
  require(sigma.space->kind() == SpaceKind::Broken, ErrorCode::InvalidArgument,
          "nodal averaging expects a broken input");
  const auto lagq = FeSpace::lagrange(sigma.space->mesh_ptr(), q_avg, /*zero_bc=*/true);
  const SparseMat A = averaging_matrix(sigma.space, lagq);
  return FeFunction(lagq, A * sigma.coeffs);
}

VectorSmootherOp build_smoother_e1_vector(const std::shared_ptr<const Mesh>& mesh) {
  VectorSmootherOp op;
  op.cr = FeSpace::crouzeix_raviart(mesh);
  op.scalar = build_smoother_ep(mesh, 1);
  const auto& broken = op.scalar.domain;
  for (int comp = 0; comp < 2; ++comp) {
    std::vector<Triplet> trips;
    for (int k = 0; k < mesh->num_elements(); ++k) {
      const auto& bdofs = broken->element_dofs(k);
      const auto& crdofs = op.cr->element_dofs(k);
      for (int i = 0; i < 3; ++i)  // vertex lattice node i
        for (int j = 0; j < 3; ++j) {
          const int col = crdofs[2 * j + comp];
          if (col < 0) continue;
          trips.emplace_back(bdofs[i], col, i == j ? -1.0 : 1.0);
        }
    }
    op.cr_to_broken[comp] = SparseMat(broken->dof_count(), op.cr->dof_count());
    op.cr_to_broken[comp].setFromTriplets(trips.begin(), trips.end());
  }
  return op;
}

std::array<FeFunction, 2> apply_smoother_e1_vector(const VectorSmootherOp& op,
                                                   const FeFunction& cr_fn) {
  require(cr_fn.space->kind() == SpaceKind::CrouzeixRaviart, ErrorCode::InvalidArgument,
          "expected a Crouzeix-Raviart input");
  std::array<FeFunction, 2> out;
  for (int comp = 0; comp < 2; ++comp)
    out[comp] = FeFunction(op.scalar.range,
                           op.scalar.matrix * (op.cr_to_broken[comp] * cr_fn.coeffs));
  return out;
}

namespace {

SparseMat build_w_hct(const std::shared_ptr<const FeSpace>& s2,
                      const std::shared_ptr<const FeSpace>& hct) {
  const Mesh& mesh = s2->mesh();
  std::vector<Triplet> trips;
  // vertex DOF triples, laid out first in the HCT space
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& hdofs = hct->element_dofs(k);
    for (int i = 0; i < 3; ++i) {
      const int v = mesh.element(k)[i];
      if (hdofs[3 * i] < 0) continue;
      if (s2->node_owner_element(v) != k) continue;  // K_z: smallest element index
      // value
      trips.emplace_back(hdofs[3 * i], s2->node_to_dof(v), 1.0);
      // gradient of sigma|_{K_z} at z
      const Eigen::MatrixXd bary =
          triangle_basis(2).node_bary(s2->node_owner_local(v)).transpose();
      const auto g = s2->gradients(k, bary);
      const auto& sdofs = s2->element_dofs(k);
      for (std::size_t j = 0; j < sdofs.size(); ++j) {
        if (sdofs[j] < 0) continue;
        if (g[0](j, 0) != 0.0) trips.emplace_back(hdofs[3 * i + 1], sdofs[j], g[0](j, 0));
        if (g[1](j, 0) != 0.0) trips.emplace_back(hdofs[3 * i + 2], sdofs[j], g[1](j, 0));
      }
    }
    // face normal-derivative DOFs, K_F = lower adjacent element
    for (int i = 0; i < 3; ++i) {
      if (hct->element_dofs(k)[9 + i] < 0) continue;
      const int f = mesh.element_faces(k)[i];
      const Face& F = mesh.face(f);
      if (F.elem[0] != k) continue;
      const Eigen::MatrixXd bary = mesh.barycentric(k, F.midpoint).transpose();
      const auto g = s2->gradients(k, bary);
      const auto& sdofs = s2->element_dofs(k);
      for (std::size_t j = 0; j < sdofs.size(); ++j) {
        if (sdofs[j] < 0) continue;
        const double dn = F.normal.x() * g[0](j, 0) + F.normal.y() * g[1](j, 0);
        if (dn != 0.0) trips.emplace_back(hct->element_dofs(k)[9 + i], sdofs[j], dn);
      }
    }
  }
  SparseMat W(hct->dof_count(), s2->dof_count());
  W.setFromTriplets(trips.begin(), trips.end());
  return W;
}

}  // namespace

FeFunction hct_averaging(const FeFunction& sigma,
                         const std::shared_ptr<const FeSpace>& hct_space) {
  require(sigma.space->kind() == SpaceKind::LagrangeZeroBC && sigma.space->degree() == 2,
          ErrorCode::InvalidArgument, "HCT averaging expects a continuous quadratic");
  const SparseMat W = build_w_hct(sigma.space, hct_space);
  return FeFunction(hct_space, W * sigma.coeffs);
}

NormalBubble::NormalBubble(const Mesh& mesh, int face) : face_(face) {
  const Face& F = mesh.face(face);
  require(!F.boundary, ErrorCode::InvalidArgument, "normal bubble requires an interior face");
  patch_ = {F.elem[0], F.elem[1]};
  nrm_ = F.normal;
  mid_ = F.midpoint;
  int idx = 0;
  for (int side = 0; side < 2; ++side) {
    const int k = patch_[side];
    const auto& el = mesh.element(k);
    for (int vsel = 0; vsel < 2; ++vsel) {
      const int v = F.verts[vsel];
      int local = -1;
      for (int i = 0; i < 3; ++i)
        if (el[i] == v) local = i;
      const Vec2 g = mesh.bary_gradients(k)[local];
      const double b = 1.0 - g.dot(mesh.vertex(v));
      fg_[idx] = g;
      fb_[idx] = b;
      fg_[idx + 1] = g;
      fb_[idx + 1] = b;  // squared factor
      idx += 2;
    }
  }
  // normalize so that int_F dPhi/dn = int_F prod = 1
  c_ = 1.0;
  const QuadratureRule& rule = quad_rule_edge(10);
  const Vec2 a = mesh.vertex(F.verts[0]), bpt = mesh.vertex(F.verts[1]);
  double integral = 0.0;
  for (int q = 0; q < rule.weights.size(); ++q) {
    const double t = rule.points(q, 1);
    const Vec2 x = (1.0 - t) * a + t * bpt;
    double prod = 1.0;
    for (int i = 0; i < 8; ++i) prod *= fg_[i].dot(x) + fb_[i];
    integral += rule.weights[q] * F.length * prod;
  }
  require(std::abs(integral) > 1e-300, ErrorCode::NumericalFailure,
          "degenerate normal-bubble normalization");
  c_ = 1.0 / integral;
}

double NormalBubble::value(const Vec2& x) const {
  double prod = 1.0;
  for (int i = 0; i < 8; ++i) prod *= fg_[i].dot(x) + fb_[i];
  return c_ * (x - mid_).dot(nrm_) * prod;
}

Vec2 NormalBubble::grad(const Vec2& x) const {
  std::array<double, 8> f;
  double prod = 1.0;
  for (int i = 0; i < 8; ++i) {
    f[i] = fg_[i].dot(x) + fb_[i];
    prod *= f[i];
  }
  Vec2 gprod = Vec2::Zero();
  for (int i = 0; i < 8; ++i) {
    double rest = 1.0;
    for (int j = 0; j < 8; ++j)
      if (j != i) rest *= f[j];
    gprod += fg_[i] * rest;
  }
  const double zeta = (x - mid_).dot(nrm_);
  return c_ * (prod * nrm_ + zeta * gprod);
}

Eigen::Vector3d NormalBubble::hess(const Vec2& x) const {
  std::array<double, 8> f;
  for (int i = 0; i < 8; ++i) f[i] = fg_[i].dot(x) + fb_[i];
  Vec2 gprod = Vec2::Zero();
  Eigen::Matrix2d hprod = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 8; ++i) {
    double rest_i = 1.0;
    for (int j = 0; j < 8; ++j)
      if (j != i) rest_i *= f[j];
    gprod += fg_[i] * rest_i;
    for (int j = i + 1; j < 8; ++j) {
      double rest_ij = 1.0;
      for (int l = 0; l < 8; ++l)
        if (l != i && l != j) rest_ij *= f[l];
      hprod += rest_ij * (fg_[i] * fg_[j].transpose() + fg_[j] * fg_[i].transpose());
    }
  }
  const double zeta = (x - mid_).dot(nrm_);
  const Eigen::Matrix2d H =
      c_ * (nrm_ * gprod.transpose() + gprod * nrm_.transpose() + zeta * hprod);
  return Eigen::Vector3d(H(0, 0), 0.5 * (H(0, 1) + H(1, 0)), H(1, 1));
}

Ec0Smoother build_smoother_ec0(const std::shared_ptr<const Mesh>& mesh) {
  Ec0Smoother op;
  op.domain = FeSpace::lagrange(mesh, 2, /*zero_bc=*/true);
  op.hct_space = FeSpace::hct(mesh);
  op.w_hct = build_w_hct(op.domain, op.hct_space);

  const Mesh& m = *mesh;
  op.bubbles.reserve(m.num_interior_faces());
  for (int f : m.interior_faces()) op.bubbles.emplace_back(m, f);

  // rows: int_F {grad sigma}.n  minus the same moment of the HCT average
  const QuadratureRule& rule = quad_rule_edge(8);
  const Eigen::VectorXd t = rule.points.col(1);
  std::vector<Triplet> trips_m, trips_u;
  for (int fi = 0; fi < m.num_interior_faces(); ++fi) {
    const int f = m.interior_faces()[fi];
    const Face& F = m.face(f);
    for (int side = 0; side < 2; ++side) {
      const int k = F.elem[side];
      const Eigen::MatrixXd bary = face_points_in_element(m, f, side, t);
      const auto g = op.domain->gradients(k, bary);
      const auto& sdofs = op.domain->element_dofs(k);
      for (std::size_t j = 0; j < sdofs.size(); ++j) {
        if (sdofs[j] < 0) continue;
        double val = 0.0;
        for (int q = 0; q < t.size(); ++q)
          val += rule.weights[q] * (F.normal.x() * g[0](j, q) + F.normal.y() * g[1](j, q));
        val *= 0.5 * F.length;
        if (val != 0.0) trips_m.emplace_back(fi, sdofs[j], val);
      }
    }
    {  // int_F dn(HCT basis), evaluated from the lower element
      const int k = F.elem[0];
      const auto& hdofs = op.hct_space->element_dofs(k);
      const auto& hb = op.hct_space->hct_basis(k);
      Eigen::MatrixXd grads;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(12);
      const Vec2 a = m.vertex(F.verts[0]), b = m.vertex(F.verts[1]);
      for (int q = 0; q < t.size(); ++q) {
        const Vec2 x = (1.0 - t[q]) * a + t[q] * b;
        hb.eval(x, nullptr, &grads, nullptr);
        row += rule.weights[q] * (grads * Eigen::Vector2d(F.normal)).eval();
      }
      row *= F.length;
      for (int j = 0; j < 12; ++j)
        if (hdofs[j] >= 0 && row[j] != 0.0) trips_u.emplace_back(fi, hdofs[j], row[j]);
    }
  }
  SparseMat M(m.num_interior_faces(), op.domain->dof_count());
  M.setFromTriplets(trips_m.begin(), trips_m.end());
  SparseMat U(m.num_interior_faces(), op.hct_space->dof_count());
  U.setFromTriplets(trips_u.begin(), trips_u.end());
  op.w_bub = M - SparseMat(U * op.w_hct);
  return op;
}

CompositeOutput apply_smoother_ec0(const Ec0Smoother& op, const FeFunction& sigma) {
  require(sigma.space->kind() == SpaceKind::LagrangeZeroBC && sigma.space->degree() == 2,
          ErrorCode::InvalidArgument, "E_C0 expects a continuous quadratic");
  CompositeOutput out;
  out.hct = FeFunction(op.hct_space, op.w_hct * sigma.coeffs);
  out.bubble = op.w_bub * sigma.coeffs;
  out.bubbles = &op.bubbles;
  return out;
}

Eigen::VectorXd CompositeOutput::eval(int k, const Eigen::MatrixXd& bary) const {
  Eigen::VectorXd out = hct.eval(k, bary);
  const Mesh& mesh = hct.space->mesh();
  for (int i = 0; i < 3; ++i) {
    const int fi = mesh.interior_face_index(mesh.element_faces(k)[i]);
    if (fi < 0 || bubble[fi] == 0.0) continue;
    for (int q = 0; q < bary.rows(); ++q)
      out[q] += bubble[fi] * (*bubbles)[fi].value(mesh.point(k, bary.row(q).transpose()));
  }
  return out;
}

Eigen::MatrixXd CompositeOutput::eval_grad(int k, const Eigen::MatrixXd& bary) const {
  Eigen::MatrixXd out = hct.eval_grad(k, bary);
  const Mesh& mesh = hct.space->mesh();
  for (int i = 0; i < 3; ++i) {
    const int fi = mesh.interior_face_index(mesh.element_faces(k)[i]);
    if (fi < 0 || bubble[fi] == 0.0) continue;
    for (int q = 0; q < bary.rows(); ++q)
      out.row(q) +=
          bubble[fi] * (*bubbles)[fi].grad(mesh.point(k, bary.row(q).transpose())).transpose();
  }
  return out;
}

Eigen::MatrixXd CompositeOutput::eval_hessian(int k, const Eigen::MatrixXd& bary) const {
  Eigen::MatrixXd out = hct.eval_hessian(k, bary);
  const Mesh& mesh = hct.space->mesh();
  for (int i = 0; i < 3; ++i) {
    const int fi = mesh.interior_face_index(mesh.element_faces(k)[i]);
    if (fi < 0 || bubble[fi] == 0.0) continue;
    for (int q = 0; q < bary.rows(); ++q)
      out.row(q) +=
          bubble[fi] * (*bubbles)[fi].hess(mesh.point(k, bary.row(q).transpose())).transpose();
  }
  return out;
}

}  // namespace qoip
