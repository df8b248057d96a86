#include "qoip/hct.hpp"

#include <array>
#include <vector>

#include "qoip/error.hpp"

namespace qoip {

namespace {

// Cubic monomial exponents in the scaled element frame.
constexpr std::array<std::array<int, 2>, 10> kMono = {{{0, 0},
                                                       {1, 0},
                                                       {0, 1},
                                                       {2, 0},
                                                       {1, 1},
                                                       {0, 2},
                                                       {3, 0},
                                                       {2, 1},
                                                       {1, 2},
                                                       {0, 3}}};

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

Eigen::RowVectorXd mono_vals(const Vec2& p) {
  Eigen::RowVectorXd r(10);
  for (int j = 0; j < 10; ++j) r[j] = ipow(p.x(), kMono[j][0]) * ipow(p.y(), kMono[j][1]);
  return r;
}

Eigen::RowVectorXd mono_dx(const Vec2& p) {
  Eigen::RowVectorXd r(10);
  for (int j = 0; j < 10; ++j) {
    const int a = kMono[j][0], b = kMono[j][1];
    r[j] = a > 0 ? a * ipow(p.x(), a - 1) * ipow(p.y(), b) : 0.0;
  }
  return r;
}

Eigen::RowVectorXd mono_dy(const Vec2& p) {
  Eigen::RowVectorXd r(10);
  for (int j = 0; j < 10; ++j) {
    const int a = kMono[j][0], b = kMono[j][1];
    r[j] = b > 0 ? b * ipow(p.x(), a) * ipow(p.y(), b - 1) : 0.0;
  }
  return r;
}

}  // namespace

HctElementBasis::HctElementBasis(const Mesh& mesh, int k) {
  const auto& el = mesh.element(k);
  const std::array<Vec2, 3> v = {mesh.vertex(el[0]), mesh.vertex(el[1]), mesh.vertex(el[2])};
  center_ = (v[0] + v[1] + v[2]) / 3.0;
  scale_ = mesh.diameter(k);

  for (int i = 0; i < 3; ++i) {
    sub_[i] = {center_, v[(i + 1) % 3], v[(i + 2) % 3]};
    Eigen::Matrix3d M;
    for (int c = 0; c < 3; ++c) M.col(c) << 1.0, sub_[i][c].x(), sub_[i][c].y();
    inv_[i] = M.inverse();
  }

  auto xi = [&](const Vec2& x) { return Vec2((x - center_) / scale_); };

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(33, 30);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(33, 12);
  int row = 0;

  // C0 + C1 matching across the three internal edges (center -> vertex j),
  // shared by subtriangles j+1 and j+2. Point samples pin the cubic (4) and
  // its quadratic normal derivative (3) along each edge.
  for (int j = 0; j < 3; ++j) {
    const int ta = (j + 1) % 3, tb = (j + 2) % 3;
    const Vec2 dir = xi(v[j]);
    const Vec2 nrm = Vec2(-dir.y(), dir.x()).normalized();
    for (double s : {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}) {
      const Vec2 pt = s * dir;
      A.block(row, 10 * ta, 1, 10) = mono_vals(pt);
      A.block(row, 10 * tb, 1, 10) -= mono_vals(pt);
      ++row;
    }
    for (double s : {0.0, 0.5, 1.0}) {
      const Vec2 pt = s * dir;
      const Eigen::RowVectorXd dn = nrm.x() * mono_dx(pt) + nrm.y() * mono_dy(pt);
      A.block(row, 10 * ta, 1, 10) = dn;
      A.block(row, 10 * tb, 1, 10) -= dn;
      ++row;
    }
  }

  // Vertex value + scaled-gradient DOFs; vertex i lives in subtriangle i+1.
  for (int i = 0; i < 3; ++i) {
    const int t = (i + 1) % 3;
    const Vec2 pt = xi(v[i]);
    A.block(row, 10 * t, 1, 10) = mono_vals(pt);
    B(row, 3 * i) = 1.0;
    ++row;
    A.block(row, 10 * t, 1, 10) = mono_dx(pt);
    B(row, 3 * i + 1) = 1.0;
    ++row;
    A.block(row, 10 * t, 1, 10) = mono_dy(pt);
    B(row, 3 * i + 2) = 1.0;
    ++row;
  }

  // Midpoint normal-derivative DOFs along the global face normals; the edge
  // opposite vertex i is an exterior edge of subtriangle i.
  for (int i = 0; i < 3; ++i) {
    const Face& f = mesh.face(mesh.element_faces(k)[i]);
    const Vec2 pt = xi(f.midpoint);
    const Eigen::RowVectorXd dn = f.normal.x() * mono_dx(pt) + f.normal.y() * mono_dy(pt);
    A.block(row, 10 * i, 1, 10) = dn;
    B(row, 9 + i) = 1.0;
    ++row;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd X = qr.solve(B);
  residual_ = (A * X - B).cwiseAbs().maxCoeff();
  require(residual_ <= 1e-8, ErrorCode::NumericalFailure,
          "HCT local solve failed on element " + std::to_string(k));

  // Nodal basis w.r.t. physical derivative DOFs: rescale those columns.
  for (int i = 0; i < 3; ++i) {
    X.col(3 * i + 1) *= scale_;
    X.col(3 * i + 2) *= scale_;
    X.col(9 + i) *= scale_;
  }
  for (int t = 0; t < 3; ++t) coeff_[t] = X.block(10 * t, 0, 10, 12);
}

int HctElementBasis::subtriangle_of(const Vec2& x) const {
  int best = 0;
  double best_min = -1e30;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d b = inv_[i] * Eigen::Vector3d(1.0, x.x(), x.y());
    const double mn = b.minCoeff();
    if (mn > best_min) {
      best_min = mn;
      best = i;
    }
  }
  return best;
}

void HctElementBasis::eval(const Vec2& x, Eigen::VectorXd* vals, Eigen::MatrixXd* grads,
                           Eigen::MatrixXd* hess) const {
  const int t = subtriangle_of(x);
  const Vec2 xi((x - center_) / scale_);
  const Eigen::MatrixXd& C = coeff_[t];
  if (vals) *vals = (mono_vals(xi) * C).transpose();
  if (grads) {
    grads->resize(12, 2);
    grads->col(0) = (mono_dx(xi) * C).transpose() / scale_;
    grads->col(1) = (mono_dy(xi) * C).transpose() / scale_;
  }
  if (hess) {
    Eigen::RowVectorXd hxx(10), hxy(10), hyy(10);
    for (int j = 0; j < 10; ++j) {
      const int a = kMono[j][0], b = kMono[j][1];
      hxx[j] = a > 1 ? a * (a - 1) * ipow(xi.x(), a - 2) * ipow(xi.y(), b) : 0.0;
      hxy[j] = (a > 0 && b > 0) ? a * b * ipow(xi.x(), a - 1) * ipow(xi.y(), b - 1) : 0.0;
      hyy[j] = b > 1 ? b * (b - 1) * ipow(xi.x(), a) * ipow(xi.y(), b - 2) : 0.0;
    }
    const double s2 = scale_ * scale_;
    hess->resize(12, 3);
    hess->col(0) = (hxx * C).transpose() / s2;
    hess->col(1) = (hxy * C).transpose() / s2;
    hess->col(2) = (hyy * C).transpose() / s2;
  }
}

}  // namespace qoip
