#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <random>

#include "qoip/error.hpp"
#include "qoip/forms.hpp"
#include "qoip/hct.hpp"
#include "qoip/quadrature.hpp"
#include "qoip/smoothers.hpp"

using namespace qoip;

namespace {

std::shared_ptr<const Mesh> square(int n) {
  return std::make_shared<Mesh>(build_structured_unit_square(n));
}

FeFunction random_fn(const std::shared_ptr<const FeSpace>& space, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  FeFunction fn(space);
  for (int i = 0; i < fn.coeffs.size(); ++i) fn.coeffs[i] = unif(rng);
  return fn;
}

double rel(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// int_K r * fn over element k by quadrature.
template <class Fn>
double element_moment(const Mesh& mesh, int k, const Fn& fn, const Eigen::VectorXd& r_vals_unused,
                      int r_deg, int r_idx, int quad_degree = 14) {
  const QuadratureRule& rule = quad_rule_triangle(quad_degree);
  const Eigen::MatrixXd rv = r_deg == 0 ? Eigen::MatrixXd::Ones(1, rule.points.rows())
                                        : triangle_basis(r_deg).values(rule.points);
  double acc = 0.0;
  for (int q = 0; q < rule.weights.size(); ++q)
    acc += 2.0 * mesh.area(k) * rule.weights[q] * rv(r_idx, q) * fn(k, rule.points.row(q));
  return acc;
}

}  // namespace

TEST_CASE("qf_project closed forms") {
  auto mesh = square(1);
  const int f = mesh->interior_faces()[0];
  // p=1, v == c: Q_F v = 6c since int_F Phi_F = |F|/6
  for (double c : {1.0, -2.5}) {
    const Eigen::VectorXd q = qf_project(*mesh, f, 1, [c](double) { return c; });
    REQUIRE(q.size() == 1);
    CHECK(q[0] == doctest::Approx(6.0 * c).epsilon(1e-12));
  }
  // p=2, odd input stays odd
  const Eigen::VectorXd q = qf_project(*mesh, f, 2, [](double t) { return (1 - t) - t; });
  REQUIRE(q.size() == 2);
  CHECK(q[0] == doctest::Approx(-q[1]).epsilon(1e-12));

  // defining moment: int_F (Q_F v) r Phi_F = int_F v r for r in P_{p-1}
  const QuadratureRule& rule = quad_rule_edge(12);
  for (int p : {1, 2, 3}) {
    auto v = [](double t) { return 0.3 + t * t - 0.8 * t * t * t; };
    const Eigen::VectorXd qc = qf_project(*mesh, f, p, v);
    const Eigen::MatrixXd ev = edge_basis(p - 1).values(rule.points.col(1));
    const double len = mesh->face(f).length;
    for (int j = 0; j < p; ++j) {
      double lhs = 0.0, rhs = 0.0;
      for (int s = 0; s < rule.weights.size(); ++s) {
        const double t = rule.points(s, 1);
        const double qv = ev.col(s).dot(qc);
        lhs += rule.weights[s] * len * qv * ev(j, s) * (1 - t) * t;
        rhs += rule.weights[s] * len * v(t) * ev(j, s);
      }
      CHECK(rel(lhs, rhs) <= 1e-12);
    }
  }
}

TEST_CASE("qk_project closed forms") {
  auto mesh = square(1);
  CHECK(qk_project(*mesh, 0, 1, [](const Vec2&) { return 1.0; }).size() == 0);
  for (double c : {1.0, 3.25}) {
    const Eigen::VectorXd q = qk_project(*mesh, 0, 2, [c](const Vec2&) { return c; });
    REQUIRE(q.size() == 1);
    CHECK(q[0] == doctest::Approx(60.0 * c).epsilon(1e-12));
  }
  // moment check with r = 1 for random quadratic v
  auto v = [](const Vec2& x) { return 0.2 + x.x() * x.y() - 0.5 * x.y() * x.y(); };
  const Eigen::VectorXd q = qk_project(*mesh, 1, 2, v);
  const QuadratureRule& rule = quad_rule_triangle(10);
  double lhs = 0.0, rhs = 0.0;
  for (int s = 0; s < rule.weights.size(); ++s) {
    const auto b = rule.points.row(s);
    const double w = 2.0 * mesh->area(1) * rule.weights[s];
    lhs += w * q[0] * b[0] * b[1] * b[2];
    rhs += w * v(mesh->point(1, b.transpose()));
  }
  CHECK(rel(lhs, rhs) <= 1e-12);
}

TEST_CASE("bubble smoother conserves face and element moments") {
  auto mesh = square(2);
  for (int p = 1; p <= 3; ++p) {
    auto op = build_bubble_smoother(mesh, p);
    const FeFunction sigma = random_fn(op.domain, 100 + p);
    const FeFunction e = apply_smoother(op, sigma);

    for (int f : mesh->interior_faces())
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
        q[j] = 1.0;
        const double lhs = face_moment(e, f, q, FaceMode::Average);
        const double rhs = face_moment(sigma, f, q, FaceMode::Average);
        CHECK(rel(lhs, rhs) <= 1e-11);
      }
    if (p >= 2) {
      const int m = p == 2 ? 1 : 3;
      for (int k = 0; k < mesh->num_elements(); ++k)
        for (int j = 0; j < m; ++j) {
          auto ee = [&](int kk, const auto& b) { return e.eval(kk, Eigen::MatrixXd(b))[0]; };
          auto se = [&](int kk, const auto& b) { return sigma.eval(kk, Eigen::MatrixXd(b))[0]; };
          const double lhs = element_moment(*mesh, k, ee, {}, p - 2, j);
          const double rhs = element_moment(*mesh, k, se, {}, p - 2, j);
          CHECK(rel(lhs, rhs) <= 1e-11);
        }
    }
    // zero in, zero out
    CHECK(apply_smoother(op, FeFunction(op.domain)).coeffs.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("bubble smoother of an element indicator") {
  auto mesh = square(1);
  auto op = build_bubble_smoother(mesh, 1);
  const int f = mesh->interior_faces()[0];
  const Face& F = mesh->face(f);
  FeFunction sigma(op.domain);
  for (int i = 0; i < 3; ++i) sigma.coeffs[op.domain->element_dofs(F.elem[0])[i]] = 1.0;
  const FeFunction e = apply_smoother(op, sigma);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  CHECK(face_moment(e, f, one, FaceMode::Average) ==
        doctest::Approx(0.5 * F.length).epsilon(1e-12));
}

TEST_CASE("nodal averaging") {
  auto mesh = square(2);
  for (int p = 1; p <= 3; ++p) {
    auto broken = FeSpace::broken(mesh, p);
    auto lag = FeSpace::lagrange(mesh, p, true);
    // projection property: conforming input reproduced exactly
    const FeFunction s = random_fn(lag, 200 + p);
    const FeFunction sb = to_broken(s, broken);
    const FeFunction a = nodal_averaging(sb, p);
    CHECK((a.coeffs - s.coeffs).cwiseAbs().maxCoeff() <= 1e-14);
    // continuity at a node implies the nodal value is kept (same check at
    // the remaining nodes via the projection above); determinism:
    const FeFunction a2 = nodal_averaging(sb, p);
    CHECK((a.coeffs - a2.coeffs).cwiseAbs().maxCoeff() == 0.0);
  }
  // indicator: averaged values are 0 or 1 according to the K_z choice
  auto broken = FeSpace::broken(mesh, 1);
  FeFunction ind(broken);
  for (int i = 0; i < 3; ++i) ind.coeffs[broken->element_dofs(2)[i]] = 1.0;
  const FeFunction a = nodal_averaging(ind, 1);
  for (int i = 0; i < a.coeffs.size(); ++i)
    CHECK((a.coeffs[i] == 0.0 || a.coeffs[i] == 1.0));
}

TEST_CASE("E_p: invariance, moment conservation, stability ratio") {
  for (int n : {2, 4}) {
    auto mesh = square(n);
    for (int p = 1; p <= 3; ++p) {
      auto op = build_smoother_ep(mesh, p);
      auto lag = FeSpace::lagrange(mesh, p, true);

      // invariance on the conforming Lagrange space
      const FeFunction s = random_fn(lag, 300 + p);
      const FeFunction es = apply_smoother(op, to_broken(s, op.domain));
      const QuadratureRule& vol = quad_rule_triangle(8);
      double worst = 0.0;
      for (int k = 0; k < mesh->num_elements(); ++k) {
        const Eigen::VectorXd a = es.eval(k, vol.points);
        const Eigen::VectorXd b = s.eval(k, vol.points);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
      }
      CHECK(worst <= 1e-11);

      // face and element moment conservation on a random broken input
      const FeFunction sigma = random_fn(op.domain, 400 + p);
      const FeFunction e = apply_smoother(op, sigma);
      for (int f : mesh->interior_faces())
        for (int j = 0; j < p; ++j) {
          Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
          q[j] = 1.0;
          CHECK(rel(face_moment(e, f, q, FaceMode::Average),
                    face_moment(sigma, f, q, FaceMode::Average)) <= 1e-11);
        }
      if (p >= 2) {
        const int m = p == 2 ? 1 : 3;
        for (int k = 0; k < mesh->num_elements(); ++k)
          for (int j = 0; j < m; ++j) {
            auto ee = [&](int kk, const auto& b) { return e.eval(kk, Eigen::MatrixXd(b))[0]; };
            auto se = [&](int kk, const auto& b) {
              return sigma.eval(kk, Eigen::MatrixXd(b))[0];
            };
            CHECK(rel(element_moment(*mesh, k, ee, {}, p - 2, j),
                      element_moment(*mesh, k, se, {}, p - 2, j)) <= 1e-11);
          }
      }
    }
  }
}

TEST_CASE("E_1 stability ratio stays bounded across refinements") {
  // C_{d,gamma,p} is unquantified in theory; 50 is the recorded regression
  // ceiling for random inputs on these meshes.
  for (int n : {2, 4, 8}) {
    auto mesh = square(n);
    auto op = build_smoother_ep(mesh, 1);
    const FeFunction sigma = random_fn(op.domain, 500 + n);
    const FeFunction e = apply_smoother(op, sigma);

    const QuadratureRule& vol = quad_rule_triangle(8);
    double num2 = 0.0;
    for (int k = 0; k < mesh->num_elements(); ++k) {
      const Eigen::MatrixXd gs = sigma.eval_grad(k, vol.points);
      const Eigen::MatrixXd ge = e.eval_grad(k, vol.points);
      for (int q = 0; q < vol.weights.size(); ++q)
        num2 += 2.0 * mesh->area(k) * vol.weights[q] *
                (gs.row(q) - ge.row(q)).squaredNorm();
    }
    const QuadratureRule& edge = quad_rule_edge(8);
    const Eigen::VectorXd t = edge.points.col(1);
    double den2 = 0.0;
    for (int f = 0; f < mesh->num_faces(); ++f) {
      const Face& F = mesh->face(f);
      Eigen::VectorXd jump =
          sigma.eval(F.elem[0], face_points_in_element(*mesh, f, 0, t));
      if (!F.boundary)
        jump -= sigma.eval(F.elem[1], face_points_in_element(*mesh, f, 1, t));
      double acc = 0.0;
      for (int q = 0; q < t.size(); ++q) acc += edge.weights[q] * jump[q] * jump[q];
      den2 += acc;  // (1/h_F) * |F| * mean = mean since |F| = h_F
    }
    CHECK(std::sqrt(num2 / den2) <= 50.0);
  }
}

TEST_CASE("E_p tilde: first-order averaging variant") {
  auto mesh = square(2);
  CHECK_THROWS_AS(build_smoother_ep_tilde(mesh, 1), Error);
  for (int p : {2, 3}) {
    auto op = build_smoother_ep_tilde(mesh, p);
    // moment conservation
    const FeFunction sigma = random_fn(op.domain, 600 + p);
    const FeFunction e = apply_smoother(op, sigma);
    for (int f : mesh->interior_faces())
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
        q[j] = 1.0;
        CHECK(rel(face_moment(e, f, q, FaceMode::Average),
                  face_moment(sigma, f, q, FaceMode::Average)) <= 1e-11);
      }
    const int m = p == 2 ? 1 : 3;
    for (int k = 0; k < mesh->num_elements(); ++k)
      for (int j = 0; j < m; ++j) {
        auto ee = [&](int kk, const auto& b) { return e.eval(kk, Eigen::MatrixXd(b))[0]; };
        auto se = [&](int kk, const auto& b) { return sigma.eval(kk, Eigen::MatrixXd(b))[0]; };
        CHECK(rel(element_moment(*mesh, k, ee, {}, p - 2, j),
                  element_moment(*mesh, k, se, {}, p - 2, j)) <= 1e-11);
      }

    // invariant on P1 conforming functions
    auto lag1 = FeSpace::lagrange(mesh, 1, true);
    const FeFunction s1 = random_fn(lag1, 700 + p);
    const FeFunction es1 = apply_smoother(op, to_broken(s1, op.domain));
    const QuadratureRule& vol = quad_rule_triangle(8);
    double worst = 0.0;
    for (int k = 0; k < mesh->num_elements(); ++k)
      worst = std::max(worst,
                       (es1.eval(k, vol.points) - s1.eval(k, vol.points)).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-11);
  }

  // In d = 2 the composition happens to fix conforming quadratics as well:
  // a conforming v vanishing at vertices has trace 4 v(m_F) mu1 mu2 on each
  // face, Q_F recovers the constant exactly, and the remainder is an element
  // bubble that B_{M,p} reproduces. Only invariance on P1 is guaranteed by
  // construction; the stronger identity below is a property of this setting.
  auto op2 = build_smoother_ep_tilde(mesh, 2);
  auto lag2 = FeSpace::lagrange(mesh, 2, true);
  ScalarField u{[](const Vec2& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); }, nullptr,
                nullptr};
  const FeFunction s2 = interpolate(lag2, u);
  const FeFunction es2 = apply_smoother(op2, to_broken(s2, op2.domain));
  const QuadratureRule& vol = quad_rule_triangle(8);
  double diff = 0.0;
  for (int k = 0; k < mesh->num_elements(); ++k)
    diff = std::max(diff,
                    (es2.eval(k, vol.points) - s2.eval(k, vol.points)).cwiseAbs().maxCoeff());
  CHECK(diff <= 1e-12);
}

TEST_CASE("smoother linearity and locality") {
  auto mesh = square(2);
  const int p = 2;
  auto op = build_smoother_ep(mesh, p);
  const FeFunction s1 = random_fn(op.domain, 801), s2 = random_fn(op.domain, 802);
  FeFunction combo(op.domain, Eigen::VectorXd(0.7 * s1.coeffs - 1.3 * s2.coeffs));
  const Eigen::VectorXd lhs = apply_smoother(op, combo).coeffs;
  const Eigen::VectorXd rhs =
      0.7 * apply_smoother(op, s1).coeffs - 1.3 * apply_smoother(op, s2).coeffs;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);

  // E_p Psi_{K,z} vanishes outside the star of z
  const auto& basis = triangle_basis(p);
  for (int k : {0, 3}) {
    for (int i = 0; i < basis.num_nodes(); ++i) {
      FeFunction psi(op.domain);
      psi.coeffs[op.domain->element_dofs(k)[i]] = 1.0;
      const Vec2 z = mesh->point(k, basis.node_bary(i));
      // star elements
      std::vector<bool> in_star(mesh->num_elements(), false);
      for (int kk = 0; kk < mesh->num_elements(); ++kk)
        in_star[kk] = mesh->barycentric(kk, z).minCoeff() >= -1e-12;
      const FeFunction e = apply_smoother(op, psi);
      for (int d = 0; d < op.range->dof_count(); ++d) {
        if (std::abs(e.coeffs[d]) <= 1e-13) continue;
        const Vec2 y = op.range->node_coord(op.range->dof_to_node(d));
        bool ok = false;
        for (int kk = 0; kk < mesh->num_elements(); ++kk)
          if (in_star[kk] && mesh->barycentric(kk, y).minCoeff() >= -1e-10) ok = true;
        CHECK(ok);
      }
    }
  }
}

TEST_CASE("componentwise E_1 on Crouzeix-Raviart fields") {
  auto mesh = square(2);
  auto op = build_smoother_e1_vector(mesh);

  // zero and conforming reproduction
  FeFunction zero(op.cr);
  auto out0 = apply_smoother_e1_vector(op, zero);
  CHECK(out0[0].coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out0[1].coeffs.cwiseAbs().maxCoeff() == 0.0);

  // conforming P1 vector field (zero boundary): reproduced exactly
  auto lag1 = FeSpace::lagrange(mesh, 1, true);
  const FeFunction w = random_fn(lag1, 900);  // scalar; use as both components
  VectorField field{[&](const Vec2& x) {
    // evaluate w at x by locating an element
    for (int k = 0; k < 8; ++k) {
      const Vec3 b = mesh->barycentric(k, x);
      if (b.minCoeff() >= -1e-12)
        return Vec2(w.eval(k, b.transpose())[0], -2.0 * w.eval(k, b.transpose())[0]);
    }
    return Vec2(0.0, 0.0);
  }};
  const FeFunction crw = interpolate_vector(op.cr, field);
  auto out = apply_smoother_e1_vector(op, crw);
  const QuadratureRule& vol = quad_rule_triangle(6);
  for (int k = 0; k < mesh->num_elements(); ++k) {
    const Eigen::VectorXd werr =
        out[0].eval(k, vol.points) - w.eval(k, vol.points);
    const Eigen::VectorXd werr2 =
        out[1].eval(k, vol.points) + 2.0 * w.eval(k, vol.points);
    CHECK(werr.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(werr2.cwiseAbs().maxCoeff() <= 1e-12);
  }

  // mean conservation on interior faces for a random CR field
  const FeFunction sigma = random_fn(op.cr, 901);
  auto e = apply_smoother_e1_vector(op, sigma);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (int f : mesh->interior_faces())
    for (int comp = 0; comp < 2; ++comp) {
      const double lhs = face_moment(e[comp], f, one, FaceMode::Average);
      const double rhs = face_moment(sigma, f, one, FaceMode::Average, comp);
      CHECK(rel(lhs, rhs) <= 1e-12);
    }
}

TEST_CASE("normal bubble duality and vanishing") {
  for (int n : {1, 2}) {
    auto mesh = square(n);
    for (int f : mesh->interior_faces()) {
      const NormalBubble nb(*mesh, f);
      // duality against every interior face sharing a patch element
      const QuadratureRule& edge = quad_rule_edge(12);
      for (int fp : mesh->interior_faces()) {
        const Face& Fp = mesh->face(fp);
        bool shares = false;
        for (int k : nb.patch())
          shares |= (Fp.elem[0] == k || Fp.elem[1] == k);
        if (!shares) continue;
        double acc = 0.0;
        const Vec2 a = mesh->vertex(Fp.verts[0]), b = mesh->vertex(Fp.verts[1]);
        for (int q = 0; q < edge.weights.size(); ++q) {
          const double t = edge.points(q, 1);
          const Vec2 x = (1.0 - t) * a + t * b;
          acc += edge.weights[q] * Fp.length * nb.grad(x).dot(Fp.normal);
        }
        CHECK(std::abs(acc - (fp == f ? 1.0 : 0.0)) <= 1e-11);
      }
      // value and gradient vanish on the patch boundary
      const Face& F = mesh->face(f);
      for (int k : nb.patch())
        for (int i : mesh->element_faces(k)) {
          if (i == f) continue;
          const Face& G = mesh->face(i);
          for (double t : {0.05, 0.3, 0.5, 0.7, 0.95}) {
            const Vec2 x = (1.0 - t) * mesh->vertex(G.verts[0]) + t * mesh->vertex(G.verts[1]);
            CHECK(std::abs(nb.value(x)) <= 1e-12);
            CHECK(nb.grad(x).norm() <= 1e-12);
          }
        }
      // c_F |F| = 630, not the 30 of the unsquared product
      CHECK(nb.normalization() * F.length == doctest::Approx(630.0).epsilon(1e-11));
    }
    if (n == 1) {
      // boundary face is rejected
      int bf = -1;
      for (int f2 = 0; f2 < mesh->num_faces(); ++f2)
        if (mesh->face(f2).boundary) bf = f2;
      CHECK_THROWS_AS(NormalBubble(*mesh, bf), Error);
    }
  }
}

TEST_CASE("E_C0: gradient mean conservation and conformity") {
  auto mesh = square(2);
  auto op = build_smoother_ec0(mesh);
  const FeFunction sigma = random_fn(op.domain, 1000);
  const CompositeOutput e = apply_smoother_ec0(op, sigma);

  const QuadratureRule& edge = quad_rule_edge(12);
  const Eigen::VectorXd t = edge.points.col(1);
  for (int f : mesh->interior_faces()) {
    const Face& F = mesh->face(f);
    // normal component: int_F grad(E sigma).n = int_F {grad sigma}.n
    Vec2 mean_e = Vec2::Zero(), mean_avg = Vec2::Zero();
    const Eigen::MatrixXd b0 = face_points_in_element(*mesh, f, 0, t);
    const Eigen::MatrixXd b1 = face_points_in_element(*mesh, f, 1, t);
    const Eigen::MatrixXd ge = e.eval_grad(F.elem[0], b0);
    const Eigen::MatrixXd g0 = sigma.eval_grad(F.elem[0], b0);
    const Eigen::MatrixXd g1 = sigma.eval_grad(F.elem[1], b1);
    for (int q = 0; q < t.size(); ++q) {
      mean_e += edge.weights[q] * F.length * Vec2(ge.row(q).transpose());
      mean_avg += edge.weights[q] * F.length * 0.5 *
                  Vec2((g0.row(q) + g1.row(q)).transpose());
    }
    CHECK(std::abs((mean_e - mean_avg).dot(F.normal)) <= 1e-10);
    // tangential component equals the endpoint difference of sigma
    const Vec2 tangent = (mesh->vertex(F.verts[1]) - mesh->vertex(F.verts[0])) / F.length;
    const double sa = sigma.eval(F.elem[0], Eigen::MatrixXd(mesh->barycentric(
                                                F.elem[0], mesh->vertex(F.verts[0]))
                                                .transpose()))[0];
    const double sb = sigma.eval(F.elem[0], Eigen::MatrixXd(mesh->barycentric(
                                                F.elem[0], mesh->vertex(F.verts[1]))
                                                .transpose()))[0];
    CHECK(std::abs(mean_e.dot(tangent) - (sb - sa)) <= 1e-10);

    // H^2 conformity: value and gradient traces agree across the face
    const Eigen::VectorXd v0 = e.eval(F.elem[0], b0);
    const Eigen::VectorXd v1 = e.eval(F.elem[1], b1);
    const Eigen::MatrixXd ge1 = e.eval_grad(F.elem[1], b1);
    CHECK((v0 - v1).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((ge - ge1).cwiseAbs().maxCoeff() <= 1e-10);
  }

  // vertex interpolation: E sigma(z) = sigma(z) at interior vertices
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    if (mesh->vertex_on_boundary(v)) continue;
    for (int k = 0; k < mesh->num_elements(); ++k) {
      const Vec3 b = mesh->barycentric(k, mesh->vertex(v));
      if (b.minCoeff() < -1e-12) continue;
      CHECK(std::abs(e.eval(k, Eigen::MatrixXd(b.transpose()))[0] -
                     sigma.eval(k, Eigen::MatrixXd(b.transpose()))[0]) <= 1e-11);
      break;
    }
  }

  // zero input gives the zero composite
  const CompositeOutput z = apply_smoother_ec0(op, FeFunction(op.domain));
  CHECK(z.hct.coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.bubble.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("HCT averaging interpolates vertex data") {
  auto mesh = square(2);
  auto hct = FeSpace::hct(mesh);
  auto s2 = FeSpace::lagrange(mesh, 2, true);
  const FeFunction sigma = random_fn(s2, 1100);
  const FeFunction a = hct_averaging(sigma, hct);
  // single interior vertex (0.5, 0.5): value DOF is coefficient 0
  const int v = [&] {
    for (int i = 0; i < mesh->num_vertices(); ++i)
      if (!mesh->vertex_on_boundary(i)) return i;
    return -1;
  }();
  const int kz = s2->node_owner_element(v);
  const Eigen::MatrixXd bary = mesh->barycentric(kz, mesh->vertex(v)).transpose();
  CHECK(a.coeffs[0] == doctest::Approx(sigma.eval(kz, bary)[0]).epsilon(1e-13));
  const Eigen::MatrixXd g = sigma.eval_grad(kz, bary);
  CHECK(a.coeffs[1] == doctest::Approx(g(0, 0)).epsilon(1e-13));
  CHECK(a.coeffs[2] == doctest::Approx(g(0, 1)).epsilon(1e-13));
  // zero map
  CHECK(hct_averaging(FeFunction(s2), hct).coeffs.cwiseAbs().maxCoeff() == 0.0);
}

// The defining consequence of moment conservation: pairing a broken function
// with a smoothed test function in the extended product collapses to the
// integration-by-parts form with averages against jumps.
TEST_CASE("smoothed pairing identity for the gradient product") {
  auto mesh = square(2);
  const QuadratureRule& vol = quad_rule_triangle(10);
  const QuadratureRule& edge = quad_rule_edge(10);
  const Eigen::VectorXd t = edge.points.col(1);
  for (int p = 1; p <= 3; ++p) {
    const auto op = build_smoother_ep(mesh, p);
    for (int trial = 0; trial < 5; ++trial) {
      const FeFunction s = random_fn(op.domain, 2000 + 10 * p + trial);
      const FeFunction sigma = random_fn(op.domain, 3000 + 10 * p + trial);
      const FeFunction e = apply_smoother(op, sigma);

      // (s, E sigma)_{1;eta}: the jump terms vanish because E sigma conforms
      // and has zero trace
      double lhs = 0.0;
      for (int k = 0; k < mesh->num_elements(); ++k) {
        const Eigen::MatrixXd gs = s.eval_grad(k, vol.points);
        const Eigen::MatrixXd ge = e.eval_grad(k, vol.points);
        for (int q = 0; q < vol.weights.size(); ++q)
          lhs += 2.0 * mesh->area(k) * vol.weights[q] * gs.row(q).dot(ge.row(q));
      }

      double rhs = 0.0;
      for (int k = 0; k < mesh->num_elements(); ++k) {
        const Eigen::MatrixXd gs = s.eval_grad(k, vol.points);
        const Eigen::MatrixXd go = sigma.eval_grad(k, vol.points);
        for (int q = 0; q < vol.weights.size(); ++q)
          rhs += 2.0 * mesh->area(k) * vol.weights[q] * gs.row(q).dot(go.row(q));
      }
      for (int f = 0; f < mesh->num_faces(); ++f) {
        const Face& F = mesh->face(f);
        const int nsides = F.boundary ? 1 : 2;
        Eigen::VectorXd avg_dn = Eigen::VectorXd::Zero(t.size());
        Eigen::VectorXd jump = Eigen::VectorXd::Zero(t.size());
        for (int side = 0; side < nsides; ++side) {
          const Eigen::MatrixXd bary = face_points_in_element(*mesh, f, side, t);
          const Eigen::MatrixXd g = s.eval_grad(F.elem[side], bary);
          const double afac = F.boundary ? 1.0 : 0.5;
          const double jsign = side == 0 ? 1.0 : -1.0;
          avg_dn += afac * (g * Eigen::Vector2d(F.normal));
          jump += jsign * sigma.eval(F.elem[side], bary);
        }
        for (int q = 0; q < t.size(); ++q)
          rhs -= edge.weights[q] * F.length * avg_dn[q] * jump[q];
      }
      CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("smoothed pairing identity for elasticity on CR fields") {
  // with Crouzeix-Raviart fields the average-stress consistency term has
  // constant face values against zero-mean jumps, so the identity collapses
  // to the plain energy pairing
  auto mesh = square(2);
  const auto op = build_smoother_e1_vector(mesh);
  const LameCoefficients lame{1.4, 3.7};
  const QuadratureRule& vol = quad_rule_triangle(6);
  for (int trial = 0; trial < 5; ++trial) {
    const FeFunction s = random_fn(op.cr, 4000 + trial);
    const FeFunction sigma = random_fn(op.cr, 5000 + trial);
    const auto e = apply_smoother_e1_vector(op, sigma);

    double lhs = 0.0, rhs = 0.0;
    for (int k = 0; k < mesh->num_elements(); ++k) {
      const auto gs = s.eval_grad_vec(k, vol.points);
      const auto go = sigma.eval_grad_vec(k, vol.points);
      const Eigen::MatrixXd ge0 = e[0].eval_grad(k, vol.points);
      const Eigen::MatrixXd ge1 = e[1].eval_grad(k, vol.points);
      for (int q = 0; q < vol.weights.size(); ++q) {
        const double w = 2.0 * mesh->area(k) * vol.weights[q];
        Eigen::Matrix2d gev;
        gev.row(0) = ge0.row(q);
        gev.row(1) = ge1.row(q);
        const Eigen::Matrix2d es = 0.5 * (gs[q] + gs[q].transpose());
        const Eigen::Matrix2d ee = 0.5 * (gev + gev.transpose());
        const Eigen::Matrix2d eo = 0.5 * (go[q] + go[q].transpose());
        lhs += w * (2.0 * lame.mu * (es.array() * ee.array()).sum() +
                    lame.lambda * gs[q].trace() * gev.trace());
        rhs += w * (2.0 * lame.mu * (es.array() * eo.array()).sum() +
                    lame.lambda * gs[q].trace() * go[q].trace());
      }
    }
    CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("smoothed pairing identity for the Hessian product") {
  auto mesh = square(2);
  const auto op = build_smoother_ec0(mesh);
  const QuadratureRule& vol = quad_rule_triangle(14);
  const QuadratureRule& edge = quad_rule_edge(10);
  const Eigen::VectorXd t = edge.points.col(1);
  for (int trial = 0; trial < 5; ++trial) {
    const FeFunction s = random_fn(op.domain, 6000 + trial);
    const FeFunction sigma = random_fn(op.domain, 7000 + trial);
    const CompositeOutput e = apply_smoother_ec0(op, sigma);

    // int D2 s : D2(E sigma), integrated per HCT subtriangle for exactness
    double lhs = 0.0;
    for (int k = 0; k < mesh->num_elements(); ++k) {
      const auto& sub = op.hct_space->hct_basis(k).subtriangles();
      for (const auto& tri : sub) {
        const double a2 = std::abs((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() -
                                   (tri[1] - tri[0]).y() * (tri[2] - tri[0]).x());
        Eigen::MatrixXd bary(vol.points.rows(), 3);
        for (int q = 0; q < vol.points.rows(); ++q) {
          const Vec2 x = vol.points(q, 0) * tri[0] + vol.points(q, 1) * tri[1] +
                         vol.points(q, 2) * tri[2];
          bary.row(q) = mesh->barycentric(k, x).transpose();
        }
        const Eigen::MatrixXd hs = s.eval_hessian(k, bary);
        const Eigen::MatrixXd he = e.eval_hessian(k, bary);
        for (int q = 0; q < vol.weights.size(); ++q)
          lhs += a2 * vol.weights[q] *
                 (hs(q, 0) * he(q, 0) + 2.0 * hs(q, 1) * he(q, 1) + hs(q, 2) * he(q, 2));
      }
    }

    double rhs = 0.0;
    for (int k = 0; k < mesh->num_elements(); ++k) {
      const Eigen::MatrixXd hs = s.eval_hessian(k, vol.points);
      const Eigen::MatrixXd ho = sigma.eval_hessian(k, vol.points);
      for (int q = 0; q < vol.weights.size(); ++q)
        rhs += 2.0 * mesh->area(k) * vol.weights[q] *
               (hs(q, 0) * ho(q, 0) + 2.0 * hs(q, 1) * ho(q, 1) + hs(q, 2) * ho(q, 2));
    }
    for (int f = 0; f < mesh->num_faces(); ++f) {
      const Face& F = mesh->face(f);
      const int nsides = F.boundary ? 1 : 2;
      const double nx = F.normal.x(), ny = F.normal.y();
      Eigen::VectorXd avg_d2n = Eigen::VectorXd::Zero(t.size());
      Eigen::VectorXd jump_dn = Eigen::VectorXd::Zero(t.size());
      for (int side = 0; side < nsides; ++side) {
        const Eigen::MatrixXd bary = face_points_in_element(*mesh, f, side, t);
        const Eigen::MatrixXd h = s.eval_hessian(F.elem[side], bary);
        const Eigen::MatrixXd g = sigma.eval_grad(F.elem[side], bary);
        const double afac = F.boundary ? 1.0 : 0.5;
        const double jsign = side == 0 ? 1.0 : -1.0;
        avg_d2n += afac * (nx * nx * h.col(0) + 2 * nx * ny * h.col(1) + ny * ny * h.col(2));
        jump_dn += jsign * (g * Eigen::Vector2d(F.normal));
      }
      for (int q = 0; q < t.size(); ++q)
        rhs -= edge.weights[q] * F.length * avg_d2n[q] * jump_dn[q];
    }
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}
