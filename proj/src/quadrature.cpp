#include "qoip/quadrature.hpp"

#include <cmath>
#include <mutex>
#include <vector>

#include "qoip/error.hpp"

namespace qoip {

double integrate_barycentric_monomial(std::span<const int> alpha, int simplex_dim,
                                      double measure) {
  require(simplex_dim == 1 || simplex_dim == 2, ErrorCode::InvalidArgument,
          "simplex dimension must be 1 or 2");
  require(static_cast<int>(alpha.size()) == simplex_dim + 1, ErrorCode::InvalidArgument,
          "multi-index length must be simplex_dim + 1");
  int total = 0;
  for (int a : alpha) {
    require(a >= 0, ErrorCode::InvalidArgument, "multi-index entries must be nonnegative");
    total += a;
  }
  // n! alpha! / (n+|alpha|)!  ==  prod_i alpha_i! / prod_{k=n+1}^{n+|alpha|} k
  double value = measure;
  int k = simplex_dim;
  for (int a : alpha)
    for (int j = 2; j <= a; ++j) value *= j;
  for (int j = 1; j <= total; ++j) value /= ++k;
  return value;
}

void gauss_legendre_01(int n, Eigen::VectorXd& points, Eigen::VectorXd& weights) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one point");
  points.resize(n);
  weights.resize(n);
  // Newton iteration on P_n over [-1,1], then map to [0,1].
  for (int i = 0; i < n / 2 + n % 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    points[i] = 0.5 * (1.0 - x);  // descending x -> ascending t
    weights[i] = 0.5 * w;
    points[n - 1 - i] = 0.5 * (1.0 + x);
    weights[n - 1 - i] = 0.5 * w;
  }
}

namespace {

QuadratureRule make_edge_rule(int degree) {
  const int n = degree / 2 + 1;
  Eigen::VectorXd t, w;
  gauss_legendre_01(n, t, w);
  QuadratureRule rule;
  rule.dim = 1;
  rule.exactness = degree;
  rule.points.resize(n, 2);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.points(i, 0) = 1.0 - t[i];
    rule.points(i, 1) = t[i];
    rule.weights[i] = w[i];
  }
  return rule;
}

// Collapsed tensor rule via the Duffy map (u,v) -> (u(1-v), v); the extra
// Jacobian factor (1-v) raises the v-degree by one, so plain Gauss-Legendre
// in both directions is still exact for polynomials.
QuadratureRule make_triangle_rule(int degree) {
  const int nu = degree / 2 + 1;
  const int nv = (degree + 1) / 2 + 1;
  Eigen::VectorXd tu, wu, tv, wv;
  gauss_legendre_01(nu, tu, wu);
  gauss_legendre_01(nv, tv, wv);
  QuadratureRule rule;
  rule.dim = 2;
  rule.exactness = degree;
  rule.points.resize(nu * nv, 3);
  rule.weights.resize(nu * nv);
  int idx = 0;
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j, ++idx) {
      const double x = tu[i] * (1.0 - tv[j]);
      const double y = tv[j];
      rule.points(idx, 0) = 1.0 - x - y;
      rule.points(idx, 1) = x;
      rule.points(idx, 2) = y;
      rule.weights[idx] = wu[i] * wv[j] * (1.0 - tv[j]);
    }
  return rule;
}

}  // namespace

const QuadratureRule& quad_rule_triangle(int degree) {
  require(degree >= 0, ErrorCode::InvalidArgument, "degree must be nonnegative");
  require(degree <= kMaxTriangleDegree, ErrorCode::UnsupportedDegree,
          "triangle quadrature supports degree <= " + std::to_string(kMaxTriangleDegree));
  static std::vector<QuadratureRule> cache(kMaxTriangleDegree + 1);
  static std::once_flag once;
  std::call_once(once, [] {
    for (int d = 0; d <= kMaxTriangleDegree; ++d) cache[d] = make_triangle_rule(d);
  });
  return cache[degree];
}

const QuadratureRule& quad_rule_edge(int degree) {
  require(degree >= 0, ErrorCode::InvalidArgument, "degree must be nonnegative");
  require(degree <= kMaxEdgeDegree, ErrorCode::UnsupportedDegree,
          "edge quadrature supports degree <= " + std::to_string(kMaxEdgeDegree));
  static std::vector<QuadratureRule> cache(kMaxEdgeDegree + 1);
  static std::once_flag once;
  std::call_once(once, [] {
    for (int d = 0; d <= kMaxEdgeDegree; ++d) cache[d] = make_edge_rule(d);
  });
  return cache[degree];
}

}  // namespace qoip
