#include "qoip/lagrange.hpp"

#include <mutex>

#include "qoip/error.hpp"

namespace qoip {

namespace {

// Monomial exponents (a,b) for x^a y^b with a+b <= p, fixed order.
std::vector<std::array<int, 2>> monomials(int p) {
  std::vector<std::array<int, 2>> m;
  for (int total = 0; total <= p; ++total)
    for (int a = total; a >= 0; --a) m.push_back({a, total - a});
  return m;
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

TriangleLagrange::TriangleLagrange(int p) : p_(p) {
  require(p >= 1, ErrorCode::InvalidArgument, "Lagrange degree must be >= 1");
  for (int i2 = 0; i2 <= p; ++i2)
    for (int i1 = 0; i1 + i2 <= p; ++i1) lattice_.push_back({p - i1 - i2, i1, i2});
  const auto mono = monomials(p);
  const int n = num_nodes();
  using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  MatLD vand(n, n);
  for (int i = 0; i < n; ++i) {
    const long double x = static_cast<long double>(lattice_[i][1]) / p;
    const long double y = static_cast<long double>(lattice_[i][2]) / p;
    for (int j = 0; j < n; ++j) {
      long double v = 1.0L;
      for (int a = 0; a < mono[j][0]; ++a) v *= x;
      for (int b = 0; b < mono[j][1]; ++b) v *= y;
      vand(i, j) = v;
    }
  }
  coeff_ = vand.fullPivLu().inverse().cast<double>();  // column i = coeffs of basis i
}

Eigen::Vector3d TriangleLagrange::node_bary(int i) const {
  const auto& l = lattice_[i];
  return Eigen::Vector3d(l[0], l[1], l[2]) / static_cast<double>(p_);
}

int TriangleLagrange::find_node(const std::array<int, 3>& lat) const {
  for (int i = 0; i < num_nodes(); ++i)
    if (lattice_[i] == lat) return i;
  return -1;
}

Eigen::MatrixXd TriangleLagrange::values(const Eigen::MatrixXd& bary_pts) const {
  const auto mono = monomials(p_);
  const int n = num_nodes(), npts = static_cast<int>(bary_pts.rows());
  Eigen::MatrixXd mvals(n, npts);
  for (int q = 0; q < npts; ++q) {
    const double x = bary_pts(q, 1), y = bary_pts(q, 2);
    for (int j = 0; j < n; ++j) mvals(j, q) = ipow(x, mono[j][0]) * ipow(y, mono[j][1]);
  }
  return coeff_.transpose() * mvals;
}

std::array<Eigen::MatrixXd, 2> TriangleLagrange::gradients(const Eigen::MatrixXd& bary_pts) const {
  const auto mono = monomials(p_);
  const int n = num_nodes(), npts = static_cast<int>(bary_pts.rows());
  Eigen::MatrixXd dx(n, npts), dy(n, npts);
  for (int q = 0; q < npts; ++q) {
    const double x = bary_pts(q, 1), y = bary_pts(q, 2);
    for (int j = 0; j < n; ++j) {
      const int a = mono[j][0], b = mono[j][1];
      dx(j, q) = a > 0 ? a * ipow(x, a - 1) * ipow(y, b) : 0.0;
      dy(j, q) = b > 0 ? b * ipow(x, a) * ipow(y, b - 1) : 0.0;
    }
  }
  return {coeff_.transpose() * dx, coeff_.transpose() * dy};
}

std::array<Eigen::MatrixXd, 3> TriangleLagrange::hessians(const Eigen::MatrixXd& bary_pts) const {
  const auto mono = monomials(p_);
  const int n = num_nodes(), npts = static_cast<int>(bary_pts.rows());
  Eigen::MatrixXd dxx(n, npts), dxy(n, npts), dyy(n, npts);
  for (int q = 0; q < npts; ++q) {
    const double x = bary_pts(q, 1), y = bary_pts(q, 2);
    for (int j = 0; j < n; ++j) {
      const int a = mono[j][0], b = mono[j][1];
      dxx(j, q) = a > 1 ? a * (a - 1) * ipow(x, a - 2) * ipow(y, b) : 0.0;
      dxy(j, q) = (a > 0 && b > 0) ? a * b * ipow(x, a - 1) * ipow(y, b - 1) : 0.0;
      dyy(j, q) = b > 1 ? b * (b - 1) * ipow(x, a) * ipow(y, b - 2) : 0.0;
    }
  }
  return {coeff_.transpose() * dxx, coeff_.transpose() * dxy, coeff_.transpose() * dyy};
}

EdgeLagrange::EdgeLagrange(int p) : p_(p) {
  require(p >= 0, ErrorCode::InvalidArgument, "edge degree must be >= 0");
  if (p == 0) {
    nodes_ = {0.5};
    coeff_ = Eigen::MatrixXd::Ones(1, 1);
    return;
  }
  for (int i = 0; i <= p; ++i) nodes_.push_back(static_cast<double>(i) / p);
  const int n = p + 1;
  Eigen::MatrixXd vand(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) vand(i, j) = ipow(nodes_[i], j);
  coeff_ = vand.fullPivLu().inverse();
}

Eigen::MatrixXd EdgeLagrange::values(const Eigen::VectorXd& t) const {
  const int n = num_nodes(), npts = static_cast<int>(t.size());
  Eigen::MatrixXd mvals(n, npts);
  for (int q = 0; q < npts; ++q)
    for (int j = 0; j < n; ++j) mvals(j, q) = ipow(t[q], j);
  return coeff_.transpose() * mvals;
}

Eigen::MatrixXd EdgeLagrange::derivatives(const Eigen::VectorXd& t) const {
  const int n = num_nodes(), npts = static_cast<int>(t.size());
  Eigen::MatrixXd mvals(n, npts);
  for (int q = 0; q < npts; ++q)
    for (int j = 0; j < n; ++j) mvals(j, q) = j > 0 ? j * ipow(t[q], j - 1) : 0.0;
  return coeff_.transpose() * mvals;
}

const TriangleLagrange& triangle_basis(int p) {
  constexpr int kMax = 8;
  require(p >= 1 && p <= kMax, ErrorCode::UnsupportedDegree, "triangle Lagrange degree 1..8");
  static std::vector<TriangleLagrange> cache = [] {
    std::vector<TriangleLagrange> c;
    for (int d = 1; d <= kMax; ++d) c.emplace_back(d);
    return c;
  }();
  return cache[p - 1];
}

const EdgeLagrange& edge_basis(int p) {
  constexpr int kMax = 8;
  require(p >= 0 && p <= kMax, ErrorCode::UnsupportedDegree, "edge Lagrange degree 0..8");
  static std::vector<EdgeLagrange> cache = [] {
    std::vector<EdgeLagrange> c;
    for (int d = 0; d <= kMax; ++d) c.emplace_back(d);
    return c;
  }();
  return cache[p];
}

}  // namespace qoip
