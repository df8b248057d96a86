#include <cmath>
#include <map>

#include "qoip/error.hpp"
#include "qoip/experiments.hpp"

namespace qoip {

namespace {

// q(t) = t^2 (1-t)^2 and derivatives; building block of MS-E1 and MS-B1.
double qf(double t) { return t * t * (1.0 - t) * (1.0 - t); }
double qp(double t) { return 2.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }
double qpp(double t) { return 2.0 - 12.0 * t + 12.0 * t * t; }
double qppp(double t) { return -12.0 + 24.0 * t; }
constexpr double qpppp = 24.0;

ManufacturedSolution make_ms_p1() {
  ManufacturedSolution ms;
  ms.name = "MS-P1";
  ms.problem = Problem::Poisson;
  const double pi = M_PI;
  ms.u.value = [pi](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  ms.u.grad = [pi](const Vec2& x) {
    return Vec2(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
  };
  ms.u.hess = [pi](const Vec2& x) {
    const double ss = std::sin(pi * x.x()) * std::sin(pi * x.y());
    const double cc = std::cos(pi * x.x()) * std::cos(pi * x.y());
    Eigen::Matrix2d H;
    H << -pi * pi * ss, pi * pi * cc, pi * pi * cc, -pi * pi * ss;
    return H;
  };
  ms.load.g0 = [pi](const Vec2& x) {
    return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
  };
  return ms;
}

ManufacturedSolution make_ms_p2() {
  ManufacturedSolution ms;
  ms.name = "MS-P2";
  ms.problem = Problem::Poisson;
  ms.regularity = "kink";
  ms.requires_aligned_mesh = true;
  // u = min(x, 1-x) y(1-y); f has a line distribution on x = 1/2, so the
  // load is given in flux form g = grad u, g0 = 0.
  ms.u.value = [](const Vec2& x) { return std::min(x.x(), 1.0 - x.x()) * x.y() * (1.0 - x.y()); };
  ms.u.grad = [](const Vec2& x) {
    const double y = x.y(), yy = y * (1.0 - y), dy = 1.0 - 2.0 * y;
    if (x.x() <= 0.5) return Vec2(yy, x.x() * dy);
    return Vec2(-yy, (1.0 - x.x()) * dy);
  };
  ms.u.hess = [](const Vec2& x) {
    const double m = std::min(x.x(), 1.0 - x.x());
    const double s = x.x() <= 0.5 ? 1.0 : -1.0;
    Eigen::Matrix2d H;
    H << 0.0, s * (1.0 - 2.0 * x.y()), s * (1.0 - 2.0 * x.y()), -2.0 * m;
    return H;
  };
  ms.load.g = ms.u.grad;
  ms.load.quad_degree = 12;
  return ms;
}

ManufacturedSolution make_ms_e1() {
  ManufacturedSolution ms;
  ms.name = "MS-E1";
  ms.problem = Problem::Elasticity;
  // u = curl psi, psi = (xy(1-x)(1-y))^2; divergence free, load for mu = 1.
  ms.uv.value = [](const Vec2& x) { return Vec2(qf(x.x()) * qp(x.y()), -qp(x.x()) * qf(x.y())); };
  ms.uv_grad = [](const Vec2& x) {
    Eigen::Matrix2d G;
    G.row(0) << qp(x.x()) * qp(x.y()), qf(x.x()) * qpp(x.y());
    G.row(1) << -qpp(x.x()) * qf(x.y()), -qp(x.x()) * qp(x.y());
    return G;
  };
  ms.uv_laplacian = [](const Vec2& x) {
    return Vec2(qpp(x.x()) * qp(x.y()) + qf(x.x()) * qppp(x.y()),
                -qppp(x.x()) * qf(x.y()) - qp(x.x()) * qpp(x.y()));
  };
  ms.load.value_dim = 2;
  ms.load.g0v = [](const Vec2& x) {
    return Vec2(-(qpp(x.x()) * qp(x.y()) + qf(x.x()) * qppp(x.y())),
                qppp(x.x()) * qf(x.y()) + qp(x.x()) * qpp(x.y()));
  };
  return ms;
}

ManufacturedSolution make_ms_b1() {
  ManufacturedSolution ms;
  ms.name = "MS-B1";
  ms.problem = Problem::Biharmonic;
  ms.u.value = [](const Vec2& x) { return qf(x.x()) * qf(x.y()); };
  ms.u.grad = [](const Vec2& x) {
    return Vec2(qp(x.x()) * qf(x.y()), qf(x.x()) * qp(x.y()));
  };
  ms.u.hess = [](const Vec2& x) {
    Eigen::Matrix2d H;
    H << qpp(x.x()) * qf(x.y()), qp(x.x()) * qp(x.y()), qp(x.x()) * qp(x.y()),
        qf(x.x()) * qpp(x.y());
    return H;
  };
  ms.load.g0 = [](const Vec2& x) {
    return qpppp * qf(x.y()) + 2.0 * qpp(x.x()) * qpp(x.y()) + qf(x.x()) * qpppp;
  };
  return ms;
}

}  // namespace

const ManufacturedSolution& manufactured_solution(const std::string& name) {
  static const std::map<std::string, ManufacturedSolution> catalog = [] {
    std::map<std::string, ManufacturedSolution> c;
    for (auto&& ms : {make_ms_p1(), make_ms_p2(), make_ms_e1(), make_ms_b1()})
      c.emplace(ms.name, ms);
    return c;
  }();
  const auto it = catalog.find(name);
  require(it != catalog.end(), ErrorCode::InvalidArgument,
          "unknown manufactured solution: " + name);
  return it->second;
}

std::vector<std::string> manufactured_names() { return {"MS-P1", "MS-P2", "MS-E1", "MS-B1"}; }

}  // namespace qoip
