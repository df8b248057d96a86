#include "qoip/spaces.hpp"

#include <algorithm>

#include "qoip/error.hpp"
#include "qoip/hct.hpp"
#include "qoip/quadrature.hpp"

namespace qoip {

FeSpace::~FeSpace() = default;

namespace {

int lattice_size(int p) { return (p + 1) * (p + 2) / 2; }

void check_inside(const Eigen::MatrixXd& bary) {
  require(bary.minCoeff() >= -1e-12, ErrorCode::InvalidArgument,
          "evaluation point outside element");
}

}  // namespace

std::shared_ptr<const FeSpace> FeSpace::broken(std::shared_ptr<const Mesh> mesh, int p) {
  require(p >= 1, ErrorCode::InvalidArgument, "broken space needs p >= 1");
  auto s = std::shared_ptr<FeSpace>(new FeSpace());
  s->kind_ = SpaceKind::Broken;
  s->degree_ = p;
  s->mesh_ = std::move(mesh);
  const Mesh& m = *s->mesh_;
  const int nloc = lattice_size(p);
  s->local_count_ = nloc;
  s->dof_count_ = m.num_elements() * nloc;
  s->num_nodes_ = s->dof_count_;
  const auto& basis = triangle_basis(p);
  s->element_dofs_.resize(m.num_elements());
  s->element_nodes_.resize(m.num_elements());
  s->node_coord_.resize(s->num_nodes_);
  s->node_boundary_.assign(s->num_nodes_, false);
  s->node_to_dof_.resize(s->num_nodes_);
  s->dof_to_node_.resize(s->num_nodes_);
  s->node_owner_.resize(s->num_nodes_);
  s->node_owner_local_.resize(s->num_nodes_);
  for (int k = 0; k < m.num_elements(); ++k) {
    s->element_dofs_[k].resize(nloc);
    s->element_nodes_[k].resize(nloc);
    for (int i = 0; i < nloc; ++i) {
      const int id = k * nloc + i;
      s->element_dofs_[k][i] = id;
      s->element_nodes_[k][i] = id;
      s->node_coord_[id] = m.point(k, basis.node_bary(i));
      s->node_to_dof_[id] = id;
      s->dof_to_node_[id] = id;
      s->node_owner_[id] = k;
      s->node_owner_local_[id] = i;
    }
  }
  return s;
}

void FeSpace::build_lagrange_nodes() {
  const Mesh& m = *mesh_;
  const int p = degree_;
  const int nv = m.num_vertices(), nf = m.num_faces(), ne = m.num_elements();
  const int per_edge = p - 1;
  const int per_elem = (p - 1) * (p - 2) / 2;
  num_nodes_ = nv + nf * per_edge + ne * per_elem;
  node_coord_.resize(num_nodes_);
  node_boundary_.assign(num_nodes_, false);
  node_owner_.assign(num_nodes_, -1);
  node_owner_local_.assign(num_nodes_, -1);

  for (int v = 0; v < nv; ++v) {
    node_coord_[v] = m.vertex(v);
    node_boundary_[v] = m.vertex_on_boundary(v);
  }
  for (int f = 0; f < nf; ++f) {
    const Face& face = m.face(f);
    for (int j = 1; j <= per_edge; ++j) {
      const int id = nv + f * per_edge + (j - 1);
      const double t = static_cast<double>(j) / p;
      node_coord_[id] = (1.0 - t) * m.vertex(face.verts[0]) + t * m.vertex(face.verts[1]);
      node_boundary_[id] = face.boundary;
    }
  }

  const auto& basis = triangle_basis(p);
  const int nloc = basis.num_nodes();
  local_count_ = nloc;

  // ordinal of interior lattice nodes, in lattice enumeration order
  std::vector<int> interior_ordinal(nloc, -1);
  {
    int ord = 0;
    for (int i = 0; i < nloc; ++i) {
      const auto& l = basis.lattice(i);
      if (l[0] > 0 && l[1] > 0 && l[2] > 0) interior_ordinal[i] = ord++;
    }
  }

  element_nodes_.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const auto& el = m.element(k);
    element_nodes_[k].resize(nloc);
    for (int i = 0; i < nloc; ++i) {
      const auto& l = basis.lattice(i);
      int zeros = 0, zero_pos = -1;
      for (int a = 0; a < 3; ++a)
        if (l[a] == 0) {
          ++zeros;
          zero_pos = a;
        }
      int id;
      if (zeros == 2) {  // vertex node
        int a = 0;
        while (l[a] == 0) ++a;
        id = el[a];
      } else if (zeros == 1) {  // edge node on the face opposite zero_pos
        const int f = m.element_faces(k)[zero_pos];
        const Face& face = m.face(f);
        // weight of face.verts[1] determines the position along the edge
        int lat1 = -1;
        for (int a = 0; a < 3; ++a)
          if (el[a] == face.verts[1]) lat1 = l[a];
        id = nv + f * per_edge + (lat1 - 1);
      } else {  // interior node, enumerated in element lattice order
        id = nv + nf * per_edge + k * per_elem + interior_ordinal[i];
        node_coord_[id] = m.point(k, basis.node_bary(i));
      }
      element_nodes_[k][i] = id;
      if (node_owner_[id] == -1 || k < node_owner_[id]) {
        node_owner_[id] = k;
        node_owner_local_[id] = i;
      }
    }
  }

  const bool zero_bc = kind_ == SpaceKind::LagrangeZeroBC;
  node_to_dof_.assign(num_nodes_, -1);
  dof_to_node_.clear();
  for (int id = 0; id < num_nodes_; ++id) {
    if (zero_bc && node_boundary_[id]) continue;
    node_to_dof_[id] = static_cast<int>(dof_to_node_.size());
    dof_to_node_.push_back(id);
  }
  dof_count_ = static_cast<int>(dof_to_node_.size());

  element_dofs_.resize(ne);
  for (int k = 0; k < ne; ++k) {
    element_dofs_[k].resize(nloc);
    for (int i = 0; i < nloc; ++i) element_dofs_[k][i] = node_to_dof_[element_nodes_[k][i]];
  }
}

std::shared_ptr<const FeSpace> FeSpace::lagrange(std::shared_ptr<const Mesh> mesh, int p,
                                                 bool zero_bc) {
  require(p >= 1, ErrorCode::InvalidArgument, "Lagrange space needs p >= 1");
  auto s = std::shared_ptr<FeSpace>(new FeSpace());
  s->kind_ = zero_bc ? SpaceKind::LagrangeZeroBC : SpaceKind::Lagrange;
  s->degree_ = p;
  s->mesh_ = std::move(mesh);
  s->build_lagrange_nodes();
  return s;
}

std::shared_ptr<const FeSpace> FeSpace::crouzeix_raviart(std::shared_ptr<const Mesh> mesh) {
  auto s = std::shared_ptr<FeSpace>(new FeSpace());
  s->kind_ = SpaceKind::CrouzeixRaviart;
  s->degree_ = 1;
  s->value_dim_ = 2;
  s->mesh_ = std::move(mesh);
  const Mesh& m = *s->mesh_;
  s->local_count_ = 6;
  s->dof_count_ = 2 * m.num_interior_faces();
  s->element_dofs_.resize(m.num_elements());
  for (int k = 0; k < m.num_elements(); ++k) {
    auto& dofs = s->element_dofs_[k];
    dofs.resize(6);
    for (int j = 0; j < 3; ++j) {
      const int fi = m.interior_face_index(m.element_faces(k)[j]);
      dofs[2 * j] = fi >= 0 ? 2 * fi : -1;
      dofs[2 * j + 1] = fi >= 0 ? 2 * fi + 1 : -1;
    }
  }
  return s;
}

std::shared_ptr<const FeSpace> FeSpace::hct(std::shared_ptr<const Mesh> mesh) {
  auto s = std::shared_ptr<FeSpace>(new FeSpace());
  s->kind_ = SpaceKind::Hct;
  s->degree_ = 3;
  s->mesh_ = std::move(mesh);
  const Mesh& m = *s->mesh_;
  s->local_count_ = 12;

  // 3 DOFs per interior vertex, then 1 per interior face.
  std::vector<int> vertex_dof(m.num_vertices(), -1);
  int next = 0;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!m.vertex_on_boundary(v)) {
      vertex_dof[v] = next;
      next += 3;
    }
  const int face_base = next;
  s->dof_count_ = face_base + m.num_interior_faces();

  s->element_dofs_.resize(m.num_elements());
  for (int k = 0; k < m.num_elements(); ++k) {
    auto& dofs = s->element_dofs_[k];
    dofs.assign(12, -1);
    const auto& el = m.element(k);
    for (int i = 0; i < 3; ++i)
      if (vertex_dof[el[i]] >= 0)
        for (int c = 0; c < 3; ++c) dofs[3 * i + c] = vertex_dof[el[i]] + c;
    for (int i = 0; i < 3; ++i) {
      const int fi = m.interior_face_index(m.element_faces(k)[i]);
      if (fi >= 0) dofs[9 + i] = face_base + fi;
    }
  }

  s->hct_.reserve(m.num_elements());
  for (int k = 0; k < m.num_elements(); ++k) s->hct_.emplace_back(m, k);
  return s;
}

const HctElementBasis& FeSpace::hct_basis(int k) const {
  require(kind_ == SpaceKind::Hct, ErrorCode::InvalidArgument, "not an HCT space");
  return hct_[k];
}

Eigen::MatrixXd FeSpace::values(int k, const Eigen::MatrixXd& bary) const {
  check_inside(bary);
  const int npts = static_cast<int>(bary.rows());
  switch (kind_) {
    case SpaceKind::Broken:
    case SpaceKind::Lagrange:
    case SpaceKind::LagrangeZeroBC:
      return triangle_basis(degree_).values(bary);
    case SpaceKind::CrouzeixRaviart: {
      Eigen::MatrixXd v(3, npts);
      for (int q = 0; q < npts; ++q)
        for (int j = 0; j < 3; ++j) v(j, q) = 1.0 - 2.0 * bary(q, j);
      return v;
    }
    case SpaceKind::Hct: {
      Eigen::MatrixXd v(12, npts);
      Eigen::VectorXd vals;
      for (int q = 0; q < npts; ++q) {
        hct_[k].eval(mesh_->point(k, bary.row(q).transpose()), &vals, nullptr, nullptr);
        v.col(q) = vals;
      }
      return v;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown space kind");
}

std::array<Eigen::MatrixXd, 2> FeSpace::gradients(int k, const Eigen::MatrixXd& bary) const {
  check_inside(bary);
  const int npts = static_cast<int>(bary.rows());
  switch (kind_) {
    case SpaceKind::Broken:
    case SpaceKind::Lagrange:
    case SpaceKind::LagrangeZeroBC: {
      const auto ref = triangle_basis(degree_).gradients(bary);
      const auto& el = mesh_->element(k);
      Eigen::Matrix2d J;
      J.col(0) = mesh_->vertex(el[1]) - mesh_->vertex(el[0]);
      J.col(1) = mesh_->vertex(el[2]) - mesh_->vertex(el[0]);
      const Eigen::Matrix2d Ji = J.inverse();
      return {Ji(0, 0) * ref[0] + Ji(1, 0) * ref[1], Ji(0, 1) * ref[0] + Ji(1, 1) * ref[1]};
    }
    case SpaceKind::CrouzeixRaviart: {
      const auto& bg = mesh_->bary_gradients(k);
      Eigen::MatrixXd gx(3, npts), gy(3, npts);
      for (int j = 0; j < 3; ++j) {
        gx.row(j).setConstant(-2.0 * bg[j].x());
        gy.row(j).setConstant(-2.0 * bg[j].y());
      }
      return {gx, gy};
    }
    case SpaceKind::Hct: {
      Eigen::MatrixXd gx(12, npts), gy(12, npts), g;
      for (int q = 0; q < npts; ++q) {
        hct_[k].eval(mesh_->point(k, bary.row(q).transpose()), nullptr, &g, nullptr);
        gx.col(q) = g.col(0);
        gy.col(q) = g.col(1);
      }
      return {gx, gy};
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown space kind");
}

std::array<Eigen::MatrixXd, 3> FeSpace::hessians(int k, const Eigen::MatrixXd& bary) const {
  check_inside(bary);
  const int npts = static_cast<int>(bary.rows());
  switch (kind_) {
    case SpaceKind::Broken:
    case SpaceKind::Lagrange:
    case SpaceKind::LagrangeZeroBC: {
      const auto ref = triangle_basis(degree_).hessians(bary);
      const auto& el = mesh_->element(k);
      Eigen::Matrix2d J;
      J.col(0) = mesh_->vertex(el[1]) - mesh_->vertex(el[0]);
      J.col(1) = mesh_->vertex(el[2]) - mesh_->vertex(el[0]);
      const Eigen::Matrix2d Ji = J.inverse();
      // H_x(a,b) = sum_{i,j} Ji(i,a) Href(i,j) Ji(j,b)
      auto combine = [&](int a, int b) {
        return Ji(0, a) * Ji(0, b) * ref[0] + (Ji(0, a) * Ji(1, b) + Ji(1, a) * Ji(0, b)) * ref[1] +
               Ji(1, a) * Ji(1, b) * ref[2];
      };
      return {combine(0, 0), combine(0, 1), combine(1, 1)};
    }
    case SpaceKind::CrouzeixRaviart:
      return {Eigen::MatrixXd::Zero(3, npts), Eigen::MatrixXd::Zero(3, npts),
              Eigen::MatrixXd::Zero(3, npts)};
    case SpaceKind::Hct: {
      Eigen::MatrixXd hxx(12, npts), hxy(12, npts), hyy(12, npts), h;
      for (int q = 0; q < npts; ++q) {
        hct_[k].eval(mesh_->point(k, bary.row(q).transpose()), nullptr, nullptr, &h);
        hxx.col(q) = h.col(0);
        hxy.col(q) = h.col(1);
        hyy.col(q) = h.col(2);
      }
      return {hxx, hxy, hyy};
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown space kind");
}

namespace {

Eigen::VectorXd local_coeffs(const FeFunction& fe, int k) {
  const auto& dofs = fe.space->element_dofs(k);
  Eigen::VectorXd c(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) c[i] = dofs[i] >= 0 ? fe.coeffs[dofs[i]] : 0.0;
  return c;
}

}  // namespace

Eigen::VectorXd FeFunction::eval(int k, const Eigen::MatrixXd& bary) const {
  require(space->value_dim() == 1, ErrorCode::InvalidArgument, "scalar eval on vector space");
  return space->values(k, bary).transpose() * local_coeffs(*this, k);
}

Eigen::MatrixXd FeFunction::eval_grad(int k, const Eigen::MatrixXd& bary) const {
  require(space->value_dim() == 1, ErrorCode::InvalidArgument, "scalar eval on vector space");
  const auto g = space->gradients(k, bary);
  const Eigen::VectorXd c = local_coeffs(*this, k);
  Eigen::MatrixXd out(bary.rows(), 2);
  out.col(0) = g[0].transpose() * c;
  out.col(1) = g[1].transpose() * c;
  return out;
}

Eigen::MatrixXd FeFunction::eval_hessian(int k, const Eigen::MatrixXd& bary) const {
  require(space->value_dim() == 1, ErrorCode::InvalidArgument, "scalar eval on vector space");
  const auto h = space->hessians(k, bary);
  const Eigen::VectorXd c = local_coeffs(*this, k);
  Eigen::MatrixXd out(bary.rows(), 3);
  for (int d = 0; d < 3; ++d) out.col(d) = h[d].transpose() * c;
  return out;
}

Eigen::MatrixXd FeFunction::eval_vec(int k, const Eigen::MatrixXd& bary) const {
  require(space->value_dim() == 2, ErrorCode::InvalidArgument, "vector eval on scalar space");
  const Eigen::MatrixXd psi = space->values(k, bary);  // 3 x npts
  const Eigen::VectorXd c = local_coeffs(*this, k);    // 6
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(bary.rows(), 2);
  for (int j = 0; j < 3; ++j)
    for (int comp = 0; comp < 2; ++comp) out.col(comp) += c[2 * j + comp] * psi.row(j).transpose();
  return out;
}

std::vector<Eigen::Matrix2d> FeFunction::eval_grad_vec(int k, const Eigen::MatrixXd& bary) const {
  require(space->value_dim() == 2, ErrorCode::InvalidArgument, "vector eval on scalar space");
  const auto g = space->gradients(k, bary);
  const Eigen::VectorXd c = local_coeffs(*this, k);
  std::vector<Eigen::Matrix2d> out(bary.rows(), Eigen::Matrix2d::Zero());
  for (int q = 0; q < bary.rows(); ++q)
    for (int j = 0; j < 3; ++j)
      for (int comp = 0; comp < 2; ++comp) {
        out[q](comp, 0) += c[2 * j + comp] * g[0](j, q);
        out[q](comp, 1) += c[2 * j + comp] * g[1](j, q);
      }
  return out;
}

Eigen::MatrixXd face_points_in_element(const Mesh& mesh, int f, int side,
                                       const Eigen::VectorXd& t) {
  const Face& face = mesh.face(f);
  const int k = face.elem[side];
  require(k >= 0, ErrorCode::InvalidArgument, "face has no element on requested side");
  const Vec2 a = mesh.vertex(face.verts[0]), b = mesh.vertex(face.verts[1]);
  Eigen::MatrixXd bary(t.size(), 3);
  for (int q = 0; q < t.size(); ++q) {
    const Vec2 x = (1.0 - t[q]) * a + t[q] * b;
    Vec3 bc = mesh.barycentric(k, x);
    for (int c = 0; c < 3; ++c) bc[c] = std::max(bc[c], 0.0);  // clamp roundoff
    bary.row(q) = bc.transpose();
  }
  return bary;
}

double face_moment(const FeFunction& fe, int f, const Eigen::VectorXd& q_coeffs, FaceMode mode,
                   int comp, int quad_degree) {
  const Mesh& mesh = fe.space->mesh();
  const Face& face = mesh.face(f);
  const int qdeg = static_cast<int>(q_coeffs.size()) - 1;
  if (quad_degree < 0) quad_degree = qdeg + fe.space->degree() + 6;
  const QuadratureRule& rule = quad_rule_edge(quad_degree);
  const Eigen::VectorXd t = rule.points.col(1);
  const Eigen::VectorXd qv = edge_basis(qdeg).values(t).transpose() * q_coeffs;

  auto trace = [&](int side) {
    const Eigen::MatrixXd bary = face_points_in_element(mesh, f, side, t);
    if (fe.space->value_dim() == 1) return Eigen::VectorXd(fe.eval(face.elem[side], bary));
    return Eigen::VectorXd(fe.eval_vec(face.elem[side], bary).col(comp));
  };

  Eigen::VectorXd v = trace(0);
  if (!face.boundary) {
    const Eigen::VectorXd v1 = trace(1);
    v = (mode == FaceMode::Jump) ? (v - v1).eval() : (0.5 * (v + v1)).eval();
  }
  return face.length * rule.weights.dot(qv.cwiseProduct(v));
}

FeFunction interpolate(const std::shared_ptr<const FeSpace>& space, const ScalarField& u) {
  FeFunction fn(space);
  switch (space->kind()) {
    case SpaceKind::Broken:
    case SpaceKind::Lagrange:
    case SpaceKind::LagrangeZeroBC:
      for (int id = 0; id < space->num_nodes(); ++id) {
        const int dof = space->node_to_dof(id);
        if (dof >= 0) fn.coeffs[dof] = u.value(space->node_coord(id));
      }
      return fn;
    case SpaceKind::Hct: {
      require(static_cast<bool>(u.grad), ErrorCode::InvalidArgument,
              "HCT interpolation needs a gradient callback");
      const Mesh& m = space->mesh();
      for (int k = 0; k < m.num_elements(); ++k) {
        const auto& dofs = space->element_dofs(k);
        const auto& el = m.element(k);
        for (int i = 0; i < 3; ++i) {
          if (dofs[3 * i] < 0) continue;
          const Vec2 x = m.vertex(el[i]);
          fn.coeffs[dofs[3 * i]] = u.value(x);
          const Vec2 g = u.grad(x);
          fn.coeffs[dofs[3 * i + 1]] = g.x();
          fn.coeffs[dofs[3 * i + 2]] = g.y();
        }
        for (int i = 0; i < 3; ++i) {
          if (dofs[9 + i] < 0) continue;
          const Face& face = m.face(m.element_faces(k)[i]);
          fn.coeffs[dofs[9 + i]] = face.normal.dot(u.grad(face.midpoint));
        }
      }
      return fn;
    }
    default:
      fail(ErrorCode::InvalidArgument, "scalar interpolation not defined for this space");
  }
}

FeFunction interpolate_vector(const std::shared_ptr<const FeSpace>& space, const VectorField& u) {
  require(space->kind() == SpaceKind::CrouzeixRaviart, ErrorCode::InvalidArgument,
          "vector interpolation is for the Crouzeix-Raviart space");
  FeFunction fn(space);
  const Mesh& m = space->mesh();
  const QuadratureRule& rule = quad_rule_edge(16);
  for (int fi = 0; fi < m.num_interior_faces(); ++fi) {
    const Face& face = m.face(m.interior_faces()[fi]);
    const Vec2 a = m.vertex(face.verts[0]), b = m.vertex(face.verts[1]);
    Vec2 mean = Vec2::Zero();
    for (int q = 0; q < rule.weights.size(); ++q) {
      const double t = rule.points(q, 1);
      mean += rule.weights[q] * u.value((1.0 - t) * a + t * b);
    }
    fn.coeffs[2 * fi] = mean.x();
    fn.coeffs[2 * fi + 1] = mean.y();
  }
  return fn;
}

FeFunction to_broken(const FeFunction& fn, const std::shared_ptr<const FeSpace>& broken_space) {
  require(broken_space->kind() == SpaceKind::Broken, ErrorCode::InvalidArgument,
          "target must be a broken space");
  require(fn.space->value_dim() == 1, ErrorCode::InvalidArgument, "scalar functions only");
  require(fn.space->degree() <= broken_space->degree(), ErrorCode::InvalidArgument,
          "target degree too low for exact re-interpolation");
  const Mesh& m = broken_space->mesh();
  const auto& basis = triangle_basis(broken_space->degree());
  Eigen::MatrixXd bary(basis.num_nodes(), 3);
  for (int i = 0; i < basis.num_nodes(); ++i) bary.row(i) = basis.node_bary(i).transpose();
  FeFunction out(broken_space);
  for (int k = 0; k < m.num_elements(); ++k) {
    const Eigen::VectorXd vals = fn.eval(k, bary);
    const auto& dofs = broken_space->element_dofs(k);
    for (int i = 0; i < basis.num_nodes(); ++i) out.coeffs[dofs[i]] = vals[i];
  }
  return out;
}

}  // namespace qoip
