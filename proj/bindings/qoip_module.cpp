#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

#include "qoip/error.hpp"
#include "qoip/experiments.hpp"
#include "qoip/quadrature.hpp"

namespace py = pybind11;
using namespace qoip;

namespace {

Problem problem_from(const std::string& s) {
  if (s == "poisson") return Problem::Poisson;
  if (s == "elasticity") return Problem::Elasticity;
  if (s == "biharmonic") return Problem::Biharmonic;
  fail(ErrorCode::InvalidArgument, "unknown problem: " + s);
}

Variant variant_from(const std::string& s) {
  if (s == "sip") return Variant::Sip;
  if (s == "nip") return Variant::Nip;
  if (s == "hl") return Variant::Hl;
  if (s == "c0ip") return Variant::C0ip;
  fail(ErrorCode::InvalidArgument, "unknown variant: " + s);
}

Smoothing smoothing_from(const std::string& s) {
  if (s == "full") return Smoothing::Full;
  if (s == "tilde") return Smoothing::Tilde;
  if (s == "identity") return Smoothing::Identity;
  fail(ErrorCode::InvalidArgument, "unknown smoother: " + s);
}

py::dict row_to_dict(const ConvergenceRow& r) {
  py::dict d;
  d["level"] = r.level;
  d["h"] = r.h;
  d["dofs"] = r.dofs;
  d["energy_error"] = r.energy_error;
  d["best_error"] = r.best_error;
  d["ratio"] = r.ratio;
  d["eoc"] = r.eoc;
  return d;
}

py::dict study(const std::string& problem, const std::string& variant, int p, double eta,
               const std::string& smoother, const std::string& load, int base_n, int levels,
               double mu, double lambda, const std::string& out, const std::string& format) {
  StudyConfig config;
  config.problem = problem_from(problem);
  config.variant = variant_from(variant);
  config.p = p;
  config.eta = eta;
  config.smoother = smoothing_from(smoother);
  config.load = load;
  config.base_n = base_n;
  config.levels = levels;
  config.lame = {mu, lambda};
  const StudyResult res = convergence_study(config);
  if (!out.empty()) {
    if (format == "json")
      write_json(res, out);
    else
      write_csv(res, out);
  }
  py::dict meta;
  meta["problem"] = problem;
  meta["variant"] = variant;
  meta["p"] = p;
  meta["eta"] = res.eta_used;
  meta["eta_star"] = res.eta_star;
  meta["smoother"] = smoother;
  meta["load"] = load;
  meta["gamma"] = res.gamma;
  py::list rows;
  for (const auto& r : res.rows) rows.append(row_to_dict(r));
  py::dict d;
  d["metadata"] = meta;
  d["rows"] = rows;
  return d;
}

py::dict run_single(const std::string& problem, const std::string& variant, int p, double eta,
                    const std::string& smoother, const std::string& load, int n, double mu,
                    double lambda) {
  const ManufacturedSolution& ms = manufactured_solution(load);
  auto mesh = std::make_shared<Mesh>(build_structured_unit_square(n));
  const Problem prob = problem_from(problem);
  const LameCoefficients lame{mu, lambda};
  double eta_star = 0.0;
  if (prob == Problem::Biharmonic) eta_star = estimate_eta_star(*mesh, 2, 2);
  if (eta <= 0.0)
    eta = prob == Problem::Poisson ? 10.0 * p * p
                                   : (prob == Problem::Elasticity ? 10.0 : 4.0 * eta_star);
  PenaltyConfig cfg{eta, eta_star, false};
  const RunResult run = run_method(prob, variant_from(variant), p, cfg, smoothing_from(smoother),
                                   ms, mesh, &lame);
  const double err = energy_error(ms, run.U, cfg, &lame);
  const FeFunction best = best_approximation(ms, run.U.space, cfg, &lame);
  const double best_err = energy_error(ms, best, cfg, &lame);
  py::dict d;
  d["dofs"] = run.U.space->dof_count();
  d["h"] = mesh->h_max();
  d["eta"] = eta;
  d["energy_error"] = err;
  d["best_error"] = best_err;
  d["ratio"] = qopt_ratio(err, best_err);
  d["solver_residual"] = run.report.rel_residual;
  return d;
}

// Moment-conservation and invariance residuals of E_p on random inputs;
// mirrors the check-smoothers CLI subcommand.
py::dict smoother_check(int n, int p, int seed) {
  auto mesh = std::make_shared<Mesh>(build_structured_unit_square(n));
  const SmootherOp op = build_smoother_ep(mesh, p);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  FeFunction sigma(op.domain);
  for (int i = 0; i < sigma.coeffs.size(); ++i) sigma.coeffs[i] = unif(rng);
  const FeFunction e = apply_smoother(op, sigma);
  double moment = 0.0;
  for (int f : mesh->interior_faces())
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
      q[j] = 1.0;
      const double lhs = face_moment(e, f, q, FaceMode::Average);
      const double rhs = face_moment(sigma, f, q, FaceMode::Average);
      moment = std::max(moment, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }

  auto lag = FeSpace::lagrange(mesh, p, true);
  FeFunction s(lag);
  for (int i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] = unif(rng);
  const FeFunction es = apply_smoother(op, to_broken(s, op.domain));
  double inv = 0.0;
  const QuadratureRule& vol = quad_rule_triangle(8);
  for (int k = 0; k < mesh->num_elements(); ++k)
    inv = std::max(inv, (es.eval(k, vol.points) - s.eval(k, vol.points)).cwiseAbs().maxCoeff());

  py::dict d;
  d["face_moment_residual"] = moment;
  d["invariance_defect"] = inv;
  return d;
}

py::tuple lagrange_eval(int p, int node, const std::array<double, 3>& bary) {
  const TriangleLagrange& basis = triangle_basis(p);
  require(node >= 0 && node < basis.num_nodes(), ErrorCode::InvalidArgument,
          "node index out of range");
  Eigen::MatrixXd pts(1, 3);
  pts << bary[0], bary[1], bary[2];
  const Eigen::MatrixXd vals = basis.values(pts);
  const auto grads = basis.gradients(pts);
  return py::make_tuple(vals(node, 0), py::make_tuple(grads[0](node, 0), grads[1](node, 0)));
}

}  // namespace

PYBIND11_MODULE(_qoip, m) {
  m.doc() = "Quasi-optimal interior penalty finite element methods";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::UnsupportedDegree:
          PyErr_SetString(PyExc_ValueError, e.what());
          break;
        default:
          PyErr_SetString(PyExc_RuntimeError, e.what());
      }
    }
  });

  py::class_<Mesh, std::shared_ptr<Mesh>>(m, "Mesh")
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_elements", &Mesh::num_elements)
      .def_property_readonly("num_faces", &Mesh::num_faces)
      .def_property_readonly("num_interior_faces", &Mesh::num_interior_faces)
      .def_property_readonly("gamma", &Mesh::gamma)
      .def_property_readonly("h_max", &Mesh::h_max)
      .def_property_readonly("total_area", &Mesh::total_area)
      .def("vertices",
           [](const Mesh& mesh) {
             Eigen::MatrixXd v(mesh.num_vertices(), 2);
             for (int i = 0; i < mesh.num_vertices(); ++i) v.row(i) = mesh.vertex(i).transpose();
             return v;
           })
      .def("elements",
           [](const Mesh& mesh) {
             Eigen::MatrixXi e(mesh.num_elements(), 3);
             for (int k = 0; k < mesh.num_elements(); ++k)
               for (int c = 0; c < 3; ++c) e(k, c) = mesh.element(k)[c];
             return e;
           })
      .def("validate", [](const Mesh& mesh) { return validate(mesh); });

  m.def(
      "build_structured_unit_square",
      [](int n) { return std::make_shared<Mesh>(build_structured_unit_square(n)); },
      py::arg("n"));
  m.def(
      "refine_uniform",
      [](const Mesh& mesh) { return std::make_shared<Mesh>(refine_uniform(mesh)); },
      py::arg("mesh"));
  m.def(
      "load_mesh",
      [](const std::string& path) {
        std::vector<std::string> warnings;
        auto mesh = std::make_shared<Mesh>(load_mesh(path, &warnings));
        return py::make_tuple(mesh, warnings);
      },
      py::arg("path"));
  m.def(
      "save_mesh", [](const Mesh& mesh, const std::string& path) { save_mesh(mesh, path); },
      py::arg("mesh"), py::arg("path"));

  m.def(
      "integrate_barycentric_monomial",
      [](const std::vector<int>& alpha, int dim, double measure) {
        return integrate_barycentric_monomial(alpha, dim, measure);
      },
      py::arg("alpha"), py::arg("simplex_dim"), py::arg("measure") = 1.0);
  m.def(
      "quadrature_rule",
      [](const std::string& domain, int degree) {
        const QuadratureRule& rule =
            domain == "triangle" ? quad_rule_triangle(degree) : quad_rule_edge(degree);
        return py::make_tuple(rule.points, rule.weights);
      },
      py::arg("domain"), py::arg("degree"));
  m.def("lagrange_eval", &lagrange_eval, py::arg("p"), py::arg("node"), py::arg("bary"));

  m.def(
      "estimate_eta_star",
      [](const Mesh& mesh, int p, int order) { return estimate_eta_star(mesh, p, order); },
      py::arg("mesh"), py::arg("p"), py::arg("order") = 1);

  m.def("convergence_study", &study, py::arg("problem"), py::arg("variant"), py::arg("p") = 1,
        py::arg("eta") = -1.0, py::arg("smoother") = "full", py::arg("load") = "MS-P1",
        py::arg("base_n") = 2, py::arg("levels") = 4, py::arg("mu") = 1.0,
        py::arg("lam") = 1.0, py::arg("out") = std::string(),
        py::arg("format") = std::string("csv"));
  m.def("run_single", &run_single, py::arg("problem"), py::arg("variant"), py::arg("p") = 1,
        py::arg("eta") = -1.0, py::arg("smoother") = "full", py::arg("load") = "MS-P1",
        py::arg("n") = 4, py::arg("mu") = 1.0, py::arg("lam") = 1.0);
  m.def(
      "compare_variants",
      [](const std::string& load, int base_n, int levels, double eta, double mu, double lam) {
        py::list out;
        for (const auto& r : compare_variants(load, base_n, levels, eta, {mu, lam})) {
          py::dict d;
          d["level"] = r.level;
          d["h"] = r.h;
          d["diff_norm"] = r.diff_norm;
          d["eoc"] = r.eoc;
          out.append(d);
        }
        return out;
      },
      py::arg("load") = "MS-E1", py::arg("base_n") = 2, py::arg("levels") = 3,
      py::arg("eta") = 10.0, py::arg("mu") = 1.0, py::arg("lam") = 1.0);
  m.def("smoother_check", &smoother_check, py::arg("n") = 2, py::arg("p") = 1,
        py::arg("seed") = 7);
  m.def("manufactured_names", &manufactured_names);
}
