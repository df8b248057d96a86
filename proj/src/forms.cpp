#include "qoip/forms.hpp"

#include <vector>

#include "qoip/error.hpp"
#include "qoip/hct.hpp"
#include "qoip/quadrature.hpp"

namespace qoip {

namespace {

using Triplet = Eigen::Triplet<double>;

void scatter(std::vector<Triplet>& trips, const std::vector<int>& rows,
             const std::vector<int>& cols, const Eigen::MatrixXd& local) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0) continue;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] < 0 || local(i, j) == 0.0) continue;
      trips.emplace_back(rows[i], cols[j], local(i, j));
    }
  }
}

SparseMat finalize(std::vector<Triplet>& trips, int n) {
  SparseMat B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

// Combined trace data of a broken/Lagrange scalar space on one face: values
// and normal derivatives from both sides (side 1 absent on the boundary).
struct FaceTraces {
  std::vector<int> dofs;              // side-0 dofs then side-1 dofs
  Eigen::MatrixXd jump;               // ndof x npts
  Eigen::MatrixXd avg;                // ndof x npts
  Eigen::MatrixXd jump_dn, avg_dn;    // normal derivative traces
};

FaceTraces face_traces(const std::shared_ptr<const FeSpace>& space, int f,
                       const Eigen::VectorXd& t) {
  const Mesh& mesh = space->mesh();
  const Face& F = mesh.face(f);
  const int nloc = space->local_count();
  const int nsides = F.boundary ? 1 : 2;
  const int npts = static_cast<int>(t.size());
  FaceTraces tr;
  tr.dofs.resize(nsides * nloc);
  tr.jump.setZero(nsides * nloc, npts);
  tr.avg.setZero(nsides * nloc, npts);
  tr.jump_dn.setZero(nsides * nloc, npts);
  tr.avg_dn.setZero(nsides * nloc, npts);
  for (int side = 0; side < nsides; ++side) {
    const int k = F.elem[side];
    const Eigen::MatrixXd bary = face_points_in_element(mesh, f, side, t);
    const Eigen::MatrixXd vals = space->values(k, bary);
    const auto grads = space->gradients(k, bary);
    const Eigen::MatrixXd dn = F.normal.x() * grads[0] + F.normal.y() * grads[1];
    const double jsign = side == 0 ? 1.0 : -1.0;
    const double afac = F.boundary ? 1.0 : 0.5;
    for (int i = 0; i < nloc; ++i) {
      tr.dofs[side * nloc + i] = space->element_dofs(k)[i];
      tr.jump.row(side * nloc + i) = jsign * vals.row(i);
      tr.avg.row(side * nloc + i) = afac * vals.row(i);
      tr.jump_dn.row(side * nloc + i) = jsign * dn.row(i);
      tr.avg_dn.row(side * nloc + i) = afac * dn.row(i);
    }
  }
  if (F.boundary) {  // jump = average = trace
    tr.jump = tr.avg;
    tr.jump_dn = tr.avg_dn;
  }
  return tr;
}

void warn_if_below_threshold(const PenaltyConfig& cfg) {
  if (cfg.eta_star_estimate > 0.0 && cfg.eta <= cfg.eta_star_estimate)
    cfg.coercivity_warning = true;
}

}  // namespace

SparseMat assemble_poisson_dg(const std::shared_ptr<const FeSpace>& space,
                              const PenaltyConfig& cfg, DgVariant variant) {
  require(space->kind() == SpaceKind::Broken, ErrorCode::InvalidArgument,
          "DG assembly expects a broken space");
  require(cfg.eta > 0.0, ErrorCode::InvalidArgument, "penalty parameter must be positive");
  if (variant == DgVariant::Sip) warn_if_below_threshold(cfg);
  const Mesh& mesh = space->mesh();
  const int p = space->degree();
  const int nloc = space->local_count();
  std::vector<Triplet> trips;

  const QuadratureRule& vol = quad_rule_triangle(2 * p + 2);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto g = space->gradients(k, vol.points);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int q = 0; q < vol.weights.size(); ++q) {
      const double w = 2.0 * mesh.area(k) * vol.weights[q];
      local += w * (g[0].col(q) * g[0].col(q).transpose() + g[1].col(q) * g[1].col(q).transpose());
    }
    scatter(trips, space->element_dofs(k), space->element_dofs(k), local);
  }

  const QuadratureRule& edge = quad_rule_edge(2 * p + 2);
  const Eigen::VectorXd t = edge.points.col(1);
  const double flip = variant == DgVariant::Nip ? -1.0 : 1.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& F = mesh.face(f);
    const FaceTraces tr = face_traces(space, f, t);
    const int n = static_cast<int>(tr.dofs.size());
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
    for (int q = 0; q < edge.weights.size(); ++q) {
      const double w = edge.weights[q] * F.length;
      // row = test i, col = trial j:
      //   -{grad j}.n [i]  -/+ [j] {grad i}.n  + (eta/h)[j][i]
      local -= w * tr.jump.col(q) * tr.avg_dn.col(q).transpose();
      local -= flip * w * tr.avg_dn.col(q) * tr.jump.col(q).transpose();
      local += (cfg.eta / F.length) * w * tr.jump.col(q) * tr.jump.col(q).transpose();
    }
    scatter(trips, tr.dofs, tr.dofs, local);
  }
  return finalize(trips, space->dof_count());
}

namespace {

SparseMat assemble_cr_elasticity(const std::shared_ptr<const FeSpace>& space,
                                 const PenaltyConfig& cfg, const LameCoefficients& lame) {
  const Mesh& mesh = space->mesh();
  std::vector<Triplet> trips;
  // volume terms: constant strains on each element
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& bg = mesh.bary_gradients(k);
    // local vector basis: dof 2j+c  ->  psi_j e_c with grad psi_j = -2 grad lambda_j
    Eigen::MatrixXd eps(6, 3);  // rows: local dofs, cols: (e11, e22, sqrt-free e12)
    Eigen::VectorXd div(6);
    for (int j = 0; j < 3; ++j) {
      const Vec2 gpsi = -2.0 * bg[j];
      eps.row(2 * j + 0) << gpsi.x(), 0.0, 0.5 * gpsi.y();
      eps.row(2 * j + 1) << 0.0, gpsi.y(), 0.5 * gpsi.x();
      div[2 * j + 0] = gpsi.x();
      div[2 * j + 1] = gpsi.y();
    }
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        const double ee =
            eps(i, 0) * eps(j, 0) + eps(i, 1) * eps(j, 1) + 2.0 * eps(i, 2) * eps(j, 2);
        local(i, j) = mesh.area(k) * (2.0 * lame.mu * ee + lame.lambda * div[i] * div[j]);
      }
    scatter(trips, space->element_dofs(k), space->element_dofs(k), local);
  }
  // eta/h vector-jump penalty over all faces
  const QuadratureRule& edge = quad_rule_edge(4);
  const Eigen::VectorXd t = edge.points.col(1);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& F = mesh.face(f);
    const int nsides = F.boundary ? 1 : 2;
    std::vector<int> dofs(nsides * 6);
    Eigen::MatrixXd jump[2];  // per component: ndof x npts
    jump[0].setZero(nsides * 6, t.size());
    jump[1].setZero(nsides * 6, t.size());
    for (int side = 0; side < nsides; ++side) {
      const int k = F.elem[side];
      const Eigen::MatrixXd bary = face_points_in_element(mesh, f, side, t);
      const Eigen::MatrixXd psi = space->values(k, bary);  // 3 x npts
      const double jsign = (side == 0 || F.boundary) ? 1.0 : -1.0;
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 2; ++c) {
          dofs[side * 6 + 2 * j + c] = space->element_dofs(k)[2 * j + c];
          jump[c].row(side * 6 + 2 * j + c) = jsign * psi.row(j);
        }
    }
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nsides * 6, nsides * 6);
    for (int q = 0; q < edge.weights.size(); ++q) {
      const double w = edge.weights[q] * F.length * cfg.eta / F.length;
      local += w * (jump[0].col(q) * jump[0].col(q).transpose() +
                    jump[1].col(q) * jump[1].col(q).transpose());
    }
    scatter(trips, dofs, dofs, local);
  }
  return finalize(trips, space->dof_count());
}

SparseMat assemble_h2_product(const std::shared_ptr<const FeSpace>& space,
                              const PenaltyConfig& cfg, bool with_consistency) {
  const Mesh& mesh = space->mesh();
  const int p = space->degree();
  const int nloc = space->local_count();
  std::vector<Triplet> trips;
  const QuadratureRule& vol = quad_rule_triangle(2 * p + 2);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto h = space->hessians(k, vol.points);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int q = 0; q < vol.weights.size(); ++q) {
      const double w = 2.0 * mesh.area(k) * vol.weights[q];
      local += w * (h[0].col(q) * h[0].col(q).transpose() +
                    2.0 * h[1].col(q) * h[1].col(q).transpose() +
                    h[2].col(q) * h[2].col(q).transpose());
    }
    scatter(trips, space->element_dofs(k), space->element_dofs(k), local);
  }
  const QuadratureRule& edge = quad_rule_edge(2 * p + 2);
  const Eigen::VectorXd t = edge.points.col(1);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& F = mesh.face(f);
    const int nsides = F.boundary ? 1 : 2;
    const int n = nsides * nloc;
    std::vector<int> dofs(n);
    Eigen::MatrixXd jump_dn = Eigen::MatrixXd::Zero(n, t.size());
    Eigen::MatrixXd avg_d2n = Eigen::MatrixXd::Zero(n, t.size());
    for (int side = 0; side < nsides; ++side) {
      const int k = F.elem[side];
      const Eigen::MatrixXd bary = face_points_in_element(mesh, f, side, t);
      const auto g = space->gradients(k, bary);
      const auto h = space->hessians(k, bary);
      const double nx = F.normal.x(), ny = F.normal.y();
      const Eigen::MatrixXd dn = nx * g[0] + ny * g[1];
      const Eigen::MatrixXd d2n = nx * nx * h[0] + 2.0 * nx * ny * h[1] + ny * ny * h[2];
      const double jsign = (side == 0 || F.boundary) ? 1.0 : -1.0;
      const double afac = F.boundary ? 1.0 : 0.5;
      for (int i = 0; i < nloc; ++i) {
        dofs[side * nloc + i] = space->element_dofs(k)[i];
        jump_dn.row(side * nloc + i) = jsign * dn.row(i);
        avg_d2n.row(side * nloc + i) = afac * d2n.row(i);
      }
    }
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
    for (int q = 0; q < edge.weights.size(); ++q) {
      const double w = edge.weights[q] * F.length;
      local += (cfg.eta / F.length) * w * jump_dn.col(q) * jump_dn.col(q).transpose();
      if (with_consistency) {
        local -= w * jump_dn.col(q) * avg_d2n.col(q).transpose();
        local -= w * avg_d2n.col(q) * jump_dn.col(q).transpose();
      }
    }
    scatter(trips, dofs, dofs, local);
  }
  return finalize(trips, space->dof_count());
}

}  // namespace

SparseMat assemble_extended_product(const std::shared_ptr<const FeSpace>& space,
                                    const PenaltyConfig& cfg, int order,
                                    const LameCoefficients* lame) {
  require(cfg.eta > 0.0, ErrorCode::InvalidArgument, "penalty parameter must be positive");
  if (order == 2) {
    require(space->kind() == SpaceKind::LagrangeZeroBC && space->degree() == 2,
            ErrorCode::InvalidArgument, "order-2 product requires continuous quadratics");
    return assemble_h2_product(space, cfg, /*with_consistency=*/false);
  }
  require(order == 1, ErrorCode::InvalidArgument, "order must be 1 or 2");
  if (space->kind() == SpaceKind::CrouzeixRaviart) {
    require(lame != nullptr, ErrorCode::InvalidArgument,
            "vector CR product needs Lame coefficients");
    return assemble_cr_elasticity(space, cfg, *lame);
  }
  // scalar order-1 product: grad-grad plus jump penalties
  const Mesh& mesh = space->mesh();
  const int p = space->degree();
  const int nloc = space->local_count();
  std::vector<Triplet> trips;
  const QuadratureRule& vol = quad_rule_triangle(2 * p + 2);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto g = space->gradients(k, vol.points);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int q = 0; q < vol.weights.size(); ++q) {
      const double w = 2.0 * mesh.area(k) * vol.weights[q];
      local += w * (g[0].col(q) * g[0].col(q).transpose() + g[1].col(q) * g[1].col(q).transpose());
    }
    scatter(trips, space->element_dofs(k), space->element_dofs(k), local);
  }
  if (space->kind() == SpaceKind::Broken) {
    const QuadratureRule& edge = quad_rule_edge(2 * p + 2);
    const Eigen::VectorXd t = edge.points.col(1);
    for (int f = 0; f < mesh.num_faces(); ++f) {
      const Face& F = mesh.face(f);
      const FaceTraces tr = face_traces(space, f, t);
      const int n = static_cast<int>(tr.dofs.size());
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
      for (int q = 0; q < edge.weights.size(); ++q) {
        const double w = edge.weights[q] * F.length;
        local += (cfg.eta / F.length) * w * tr.jump.col(q) * tr.jump.col(q).transpose();
      }
      scatter(trips, tr.dofs, tr.dofs, local);
    }
  }
  return finalize(trips, space->dof_count());
}

SparseMat assemble_elasticity_hl(const std::shared_ptr<const FeSpace>& cr,
                                 const PenaltyConfig& cfg, const LameCoefficients& lame) {
  require(cr->kind() == SpaceKind::CrouzeixRaviart, ErrorCode::InvalidArgument,
          "elasticity assembly expects the Crouzeix-Raviart space");
  require(lame.mu > 0.0 && lame.lambda > 0.0, ErrorCode::InvalidArgument,
          "Lame coefficients must be positive");
  require(cfg.eta > 0.0, ErrorCode::InvalidArgument, "penalty parameter must be positive");
  return assemble_cr_elasticity(cr, cfg, lame);
}

SparseMat assemble_biharmonic_c0(const std::shared_ptr<const FeSpace>& s2,
                                 const PenaltyConfig& cfg) {
  require(s2->kind() == SpaceKind::LagrangeZeroBC && s2->degree() == 2,
          ErrorCode::InvalidArgument, "C0-IP assembly expects continuous quadratics");
  require(cfg.eta > 0.0, ErrorCode::InvalidArgument, "penalty parameter must be positive");
  warn_if_below_threshold(cfg);
  return assemble_h2_product(s2, cfg, /*with_consistency=*/true);
}

namespace {

// Load vector over a scalar conforming Lagrange space.
Eigen::VectorXd conforming_load_vector(const LoadFunctional& load,
                                       const std::shared_ptr<const FeSpace>& space, int comp) {
  const Mesh& mesh = space->mesh();
  const QuadratureRule& vol = quad_rule_triangle(std::min(load.quad_degree, kMaxTriangleDegree));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space->dof_count());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const Eigen::MatrixXd vals = space->values(k, vol.points);
    std::array<Eigen::MatrixXd, 2> grads;
    if (load.has_flux()) grads = space->gradients(k, vol.points);
    const auto& dofs = space->element_dofs(k);
    for (int q = 0; q < vol.weights.size(); ++q) {
      const double w = 2.0 * mesh.area(k) * vol.weights[q];
      const Vec2 x = mesh.point(k, vol.points.row(q).transpose());
      double g0v = 0.0;
      Vec2 gv = Vec2::Zero();
      if (load.value_dim == 1) {
        if (load.g0) g0v = load.g0(x);
        if (load.g) gv = load.g(x);
      } else {
        if (load.g0v) g0v = load.g0v(x)[comp];
        if (load.gv) gv = load.gv(x).row(comp).transpose();
      }
      for (std::size_t i = 0; i < dofs.size(); ++i) {
        if (dofs[i] < 0) continue;
        double v = g0v * vals(i, q);
        if (load.has_flux()) v += gv.x() * grads[0](i, q) + gv.y() * grads[1](i, q);
        rhs[dofs[i]] += w * v;
      }
    }
  }
  return rhs;
}

Eigen::VectorXd classical_rhs(const LoadFunctional& load,
                              const std::shared_ptr<const FeSpace>& space) {
  const Mesh& mesh = space->mesh();
  const bool conforming =
      space->kind() == SpaceKind::Lagrange || space->kind() == SpaceKind::LagrangeZeroBC;
  if (load.has_flux() && !conforming)
    fail(ErrorCode::UndefinedPairing,
         "classical pairing of an H^-1 flux load with a discontinuous test space is undefined; "
         "use a smoothing operator");
  if (conforming) return conforming_load_vector(load, space, 0);
  const QuadratureRule& vol = quad_rule_triangle(std::min(load.quad_degree, kMaxTriangleDegree));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space->dof_count());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const Eigen::MatrixXd vals = space->values(k, vol.points);
    const auto& dofs = space->element_dofs(k);
    for (int q = 0; q < vol.weights.size(); ++q) {
      const double w = 2.0 * mesh.area(k) * vol.weights[q];
      const Vec2 x = mesh.point(k, vol.points.row(q).transpose());
      if (space->kind() == SpaceKind::CrouzeixRaviart) {
        const Vec2 f = load.g0v ? Vec2(load.g0v(x)) : Vec2::Zero();
        for (int j = 0; j < 3; ++j)
          for (int c = 0; c < 2; ++c) {
            const int dof = dofs[2 * j + c];
            if (dof >= 0) rhs[dof] += w * f[c] * vals(j, q);
          }
      } else {
        const double f = load.g0 ? load.g0(x) : 0.0;
        for (std::size_t i = 0; i < dofs.size(); ++i)
          if (dofs[i] >= 0) rhs[dofs[i]] += w * f * vals(i, q);
      }
    }
  }
  return rhs;
}

Eigen::VectorXd ec0_rhs(const LoadFunctional& load, const std::shared_ptr<const FeSpace>& space) {
  const auto mesh = space->mesh_ptr();
  const Ec0Smoother op = build_smoother_ec0(mesh);
  const QuadratureRule& vol = quad_rule_triangle(std::min(load.quad_degree, kMaxTriangleDegree));

  // load against the HCT nodal basis, integrated per subtriangle
  Eigen::VectorXd L_hct = Eigen::VectorXd::Zero(op.hct_space->dof_count());
  for (int k = 0; k < mesh->num_elements(); ++k) {
    const auto& hb = op.hct_space->hct_basis(k);
    const auto& dofs = op.hct_space->element_dofs(k);
    Eigen::VectorXd vals;
    Eigen::MatrixXd grads;
    for (const auto& tri : hb.subtriangles()) {
      const double a2 = std::abs((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() -
                                 (tri[1] - tri[0]).y() * (tri[2] - tri[0]).x());
      for (int q = 0; q < vol.weights.size(); ++q) {
        const auto b = vol.points.row(q);
        const Vec2 x = b[0] * tri[0] + b[1] * tri[1] + b[2] * tri[2];
        const double w = a2 * vol.weights[q];
        hb.eval(x, &vals, load.has_flux() ? &grads : nullptr, nullptr);
        const double g0v = load.g0 ? load.g0(x) : 0.0;
        for (int j = 0; j < 12; ++j) {
          if (dofs[j] < 0) continue;
          double v = g0v * vals[j];
          if (load.has_flux() && load.g) v += load.g(x).dot(grads.row(j).transpose());
          L_hct[dofs[j]] += w * v;
        }
      }
    }
  }

  // load against the normal bubbles, integrated over both patch elements
  Eigen::VectorXd L_bub = Eigen::VectorXd::Zero(mesh->num_interior_faces());
  for (int fi = 0; fi < mesh->num_interior_faces(); ++fi) {
    const NormalBubble& nb = op.bubbles[fi];
    double acc = 0.0;
    for (int k : nb.patch())
      for (int q = 0; q < vol.weights.size(); ++q) {
        const Vec2 x = mesh->point(k, vol.points.row(q).transpose());
        const double w = 2.0 * mesh->area(k) * vol.weights[q];
        double v = (load.g0 ? load.g0(x) : 0.0) * nb.value(x);
        if (load.has_flux() && load.g) v += load.g(x).dot(nb.grad(x));
        acc += w * v;
      }
    L_bub[fi] = acc;
  }

  return op.w_hct.transpose() * L_hct + op.w_bub.transpose() * L_bub;
}

}  // namespace

Eigen::VectorXd assemble_rhs(const LoadFunctional& load,
                             const std::shared_ptr<const FeSpace>& space, RhsSmoother smoother) {
  switch (smoother) {
    case RhsSmoother::Identity:
      return classical_rhs(load, space);
    case RhsSmoother::Ep:
    case RhsSmoother::EpTilde: {
      require(space->kind() == SpaceKind::Broken, ErrorCode::InvalidArgument,
              "E_p smoothing applies to broken spaces");
      const SmootherOp op = smoother == RhsSmoother::Ep
                                ? build_smoother_ep(space->mesh_ptr(), space->degree())
                                : build_smoother_ep_tilde(space->mesh_ptr(), space->degree());
      const Eigen::VectorXd L = conforming_load_vector(load, op.range, 0);
      return op.matrix.transpose() * L;
    }
    case RhsSmoother::E1Vector: {
      require(space->kind() == SpaceKind::CrouzeixRaviart, ErrorCode::InvalidArgument,
              "componentwise E_1 applies to the Crouzeix-Raviart space");
      const VectorSmootherOp op = build_smoother_e1_vector(space->mesh_ptr());
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space->dof_count());
      for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd L = conforming_load_vector(load, op.scalar.range, c);
        rhs += op.cr_to_broken[c].transpose() * (op.scalar.matrix.transpose() * L);
      }
      return rhs;
    }
    case RhsSmoother::Ec0:
      require(space->kind() == SpaceKind::LagrangeZeroBC && space->degree() == 2,
              ErrorCode::InvalidArgument, "E_C0 applies to continuous quadratics");
      return ec0_rhs(load, space);
  }
  fail(ErrorCode::InvalidArgument, "unknown smoother");
}

double estimate_eta_star(const Mesh& mesh, int p, int order) {
  require(order == 1 || order == 2, ErrorCode::InvalidArgument, "order must be 1 or 2");
  require(p >= 1, ErrorCode::InvalidArgument, "degree must be >= 1");

  // element-centered monomial exponents, constants (and linears for order 2)
  // removed so the volume Gram is nonsingular
  std::vector<std::array<int, 2>> mono;
  for (int total = order; total <= p; ++total)
    for (int a = total; a >= 0; --a) mono.push_back({a, total - a});
  const int nm = static_cast<int>(mono.size());
  if (nm == 0) return 0.0;

  auto ipow = [](double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  };

  const QuadratureRule& vol = quad_rule_triangle(2 * p + 2);
  const QuadratureRule& edge = quad_rule_edge(2 * p + 2);
  double eta_star = 0.0;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const Vec2 center = mesh.centroid(k);
    const double h = mesh.diameter(k);
    auto grad_m = [&](int j, const Vec2& x) {
      const Vec2 xi = (x - center) / h;
      const int a = mono[j][0], b = mono[j][1];
      return Vec2((a > 0 ? a * ipow(xi.x(), a - 1) * ipow(xi.y(), b) : 0.0) / h,
                  (b > 0 ? b * ipow(xi.x(), a) * ipow(xi.y(), b - 1) : 0.0) / h);
    };
    auto hess_m = [&](int j, const Vec2& x) {
      const Vec2 xi = (x - center) / h;
      const int a = mono[j][0], b = mono[j][1];
      Eigen::Matrix2d H;
      H(0, 0) = a > 1 ? a * (a - 1) * ipow(xi.x(), a - 2) * ipow(xi.y(), b) : 0.0;
      H(0, 1) = H(1, 0) = (a > 0 && b > 0) ? a * b * ipow(xi.x(), a - 1) * ipow(xi.y(), b - 1) : 0.0;
      H(1, 1) = b > 1 ? b * (b - 1) * ipow(xi.x(), a) * ipow(xi.y(), b - 2) : 0.0;
      return Eigen::Matrix2d(H / (h * h));
    };

    Eigen::MatrixXd MK = Eigen::MatrixXd::Zero(nm, nm);
    for (int q = 0; q < vol.weights.size(); ++q) {
      const Vec2 x = mesh.point(k, vol.points.row(q).transpose());
      const double w = 2.0 * mesh.area(k) * vol.weights[q];
      for (int i = 0; i < nm; ++i)
        for (int j = 0; j < nm; ++j)
          MK(i, j) += w * (order == 1 ? grad_m(i, x).dot(grad_m(j, x))
                                      : (hess_m(i, x).array() * hess_m(j, x).array()).sum());
    }
    for (int fidx : mesh.element_faces(k)) {
      const Face& F = mesh.face(fidx);
      const Vec2 a = mesh.vertex(F.verts[0]), b = mesh.vertex(F.verts[1]);
      Eigen::MatrixXd MF = Eigen::MatrixXd::Zero(nm, nm);
      for (int q = 0; q < edge.weights.size(); ++q) {
        const double t = edge.points(q, 1);
        const Vec2 x = (1.0 - t) * a + t * b;
        const double w = edge.weights[q] * F.length;
        Eigen::VectorXd tr(nm);
        for (int i = 0; i < nm; ++i)
          tr[i] = order == 1 ? F.normal.dot(grad_m(i, x))
                             : F.normal.dot(hess_m(i, x) * F.normal);
        MF += w * tr * tr.transpose();
      }
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(MF, MK);
      require(es.info() == Eigen::Success, ErrorCode::NumericalFailure,
              "local trace eigenproblem failed");
      eta_star = std::max(eta_star, 3.0 * F.length * es.eigenvalues().maxCoeff());
    }
  }
  return eta_star;
}

}  // namespace qoip
