// Command-line driver for the interior penalty methods: convergence runs,
// smoother checks, trace-constant estimation, and RHS-variant comparison.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>

#include "qoip/error.hpp"
#include "qoip/experiments.hpp"
#include "qoip/quadrature.hpp"

namespace {

using namespace qoip;

std::shared_ptr<const Mesh> parse_mesh(const std::string& spec, int* builtin_n) {
  if (spec.rfind("builtin:square:", 0) == 0) {
    const int n = std::stoi(spec.substr(15));
    if (builtin_n) *builtin_n = n;
    return std::make_shared<Mesh>(build_structured_unit_square(n));
  }
  if (builtin_n) *builtin_n = -1;
  std::vector<std::string> warnings;
  auto mesh = std::make_shared<Mesh>(load_mesh(spec, &warnings));
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return mesh;
}

Problem parse_problem(const std::string& s) {
  if (s == "poisson") return Problem::Poisson;
  if (s == "elasticity") return Problem::Elasticity;
  if (s == "biharmonic") return Problem::Biharmonic;
  fail(ErrorCode::InvalidArgument, "unknown problem: " + s);
}

Variant parse_variant(const std::string& s) {
  if (s == "sip") return Variant::Sip;
  if (s == "nip") return Variant::Nip;
  if (s == "hl") return Variant::Hl;
  if (s == "c0ip") return Variant::C0ip;
  fail(ErrorCode::InvalidArgument, "unknown variant: " + s);
}

Smoothing parse_smoothing(const std::string& s) {
  if (s == "full") return Smoothing::Full;
  if (s == "tilde") return Smoothing::Tilde;
  if (s == "identity") return Smoothing::Identity;
  fail(ErrorCode::InvalidArgument, "unknown smoother: " + s);
}

int cmd_run(const std::string& problem, const std::string& variant, int p, double eta,
            const std::string& smoother, const std::string& load, const std::string& mesh_spec,
            int levels, const std::string& out, const std::string& format, double lambda,
            double mu) {
  StudyConfig config;
  config.problem = parse_problem(problem);
  config.variant = parse_variant(variant);
  config.p = p;
  config.eta = eta;
  config.smoother = parse_smoothing(smoother);
  config.load = load;
  config.levels = levels;
  config.lame = {mu, lambda};
  if (mesh_spec.rfind("builtin:square:", 0) == 0)
    config.base_n = std::stoi(mesh_spec.substr(15));
  else
    config.mesh_file = mesh_spec;

  const StudyResult result = convergence_study(config);
  std::printf("# %s %s p=%d eta=%.6g smoother=%s load=%s gamma=%.4f eta*=%.6g\n",
              problem.c_str(), variant.c_str(), result.config.p, result.eta_used,
              smoother.c_str(), load.c_str(), result.gamma, result.eta_star);
  std::printf("level        h     dofs   energy_error     best_error    ratio    eoc\n");
  for (const auto& r : result.rows)
    std::printf("%5d %8.5f %8d %14.6e %14.6e %8.4f %6.3f\n", r.level, r.h, r.dofs,
                r.energy_error, r.best_error, r.ratio, r.eoc);
  if (!out.empty()) {
    if (format == "json")
      write_json(result, out);
    else
      write_csv(result, out);
    std::printf("wrote %s\n", out.c_str());
  }

  bool ok = true;
  for (const auto& r : result.rows) ok = ok && r.ratio >= 1.0 - 1e-6 && r.energy_error >= 0.0;
  // hard solver failures throw inside run_method; reports here are informational
  if (!ok) std::printf("FAIL: ratio or solver contract violated\n");
  return ok ? 0 : 1;
}

int cmd_check_smoothers(const std::string& mesh_spec, int seed) {
  auto mesh = parse_mesh(mesh_spec, nullptr);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int failures = 0;
  auto report = [&](const std::string& name, double residual, double tol) {
    const bool ok = residual <= tol;
    if (!ok) ++failures;
    std::printf("%-52s %10.3e  [%s]\n", name.c_str(), residual, ok ? "pass" : "FAIL");
  };

  for (int p = 1; p <= 3; ++p) {
    const auto broken = FeSpace::broken(mesh, p);
    const auto op = build_smoother_ep(mesh, p);
    FeFunction sigma(broken);
    for (int i = 0; i < sigma.coeffs.size(); ++i) sigma.coeffs[i] = unif(rng);
    const FeFunction e = apply_smoother(op, sigma);

    double worst = 0.0;
    for (int f : mesh->interior_faces())
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
        q[j] = 1.0;
        const double lhs = face_moment(e, f, q, FaceMode::Average);
        const double rhs = face_moment(sigma, f, q, FaceMode::Average);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
      }
    report("E_" + std::to_string(p) + " face moment conservation", worst, 1e-10);

    const auto lag = FeSpace::lagrange(mesh, p, true);
    FeFunction s(lag);
    for (int i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] = unif(rng);
    const FeFunction sb = to_broken(s, broken);
    const FeFunction es = apply_smoother(op, sb);
    // compare at the range nodes
    const FeFunction s_in_range = to_broken(s, FeSpace::broken(mesh, p + 1));
    double inv = 0.0;
    const auto range = op.range;
    for (int d = 0; d < range->dof_count(); ++d) {
      const int node = range->dof_to_node(d);
      const int k = range->node_owner_element(node);
      const Eigen::MatrixXd bary =
          triangle_basis(p + 1).node_bary(range->node_owner_local(node)).transpose();
      inv = std::max(inv, std::abs(es.coeffs[d] - s.eval(k, bary)[0]));
    }
    report("E_" + std::to_string(p) + " invariance on Lagrange space", inv, 1e-10);
  }
  std::printf("%s\n", failures == 0 ? "all smoother checks passed" : "smoother checks FAILED");
  return failures == 0 ? 0 : 1;
}

int cmd_eta_star(const std::string& mesh_spec, int p, int order) {
  auto mesh = parse_mesh(mesh_spec, nullptr);
  const double v = estimate_eta_star(*mesh, p, order);
  std::printf("eta_star(p=%d, order=%d) = %.12g\n", p, order, v);
  return v > 0.0 ? 0 : 1;
}

int cmd_compare_variants(const std::string& load, int base_n, int levels, double eta,
                         double lambda, double mu) {
  const auto rows = compare_variants(load, base_n, levels, eta, {mu, lambda});
  std::printf("level        h      ||U-Uhat||      eoc\n");
  for (const auto& r : rows)
    std::printf("%5d %8.5f %14.6e %8.3f\n", r.level, r.h, r.diff_norm, r.eoc);
  const bool ok = rows.back().eoc >= 0.9;
  std::printf("%s\n", ok ? "difference decays at first order" : "FAIL: expected O(h) decay");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-optimal interior penalty methods (DG / Crouzeix-Raviart / C0-IP)"};
  app.require_subcommand(1);

  std::string problem = "poisson", variant = "sip", smoother = "full", load = "MS-P1";
  std::string mesh_spec = "builtin:square:2", out, format = "csv";
  int p = 1, levels = 4, order = 1, seed = 7, base_n = 2;
  double eta = -1.0, lambda = 1.0, mu = 1.0;

  auto* run = app.add_subcommand("run", "run a convergence study");
  run->add_option("--problem", problem, "poisson|elasticity|biharmonic");
  run->add_option("--variant", variant, "sip|nip|hl|c0ip");
  run->add_option("--p", p, "polynomial degree (Poisson)");
  run->add_option("--eta", eta, "penalty parameter (negative = default)");
  run->add_option("--smoother", smoother, "full|tilde|identity");
  run->add_option("--load", load, "manufactured solution name");
  run->add_option("--mesh", mesh_spec, "builtin:square:N or a mesh file");
  run->add_option("--levels", levels, "number of uniform refinements");
  run->add_option("--out", out, "output file");
  run->add_option("--format", format, "csv|json");
  run->add_option("--lambda", lambda, "Lame lambda");
  run->add_option("--mu", mu, "Lame mu");

  auto* chk = app.add_subcommand("check-smoothers", "run moment/invariance suites");
  chk->add_option("--mesh", mesh_spec, "builtin:square:N or a mesh file");
  chk->add_option("--seed", seed, "random seed");

  auto* eta_cmd = app.add_subcommand("eta-star", "estimate the trace-inverse threshold");
  eta_cmd->add_option("--mesh", mesh_spec, "builtin:square:N or a mesh file");
  eta_cmd->add_option("--p", p, "polynomial degree");
  eta_cmd->add_option("--order", order, "1 (gradient traces) or 2 (Hessian traces)");

  auto* cmp = app.add_subcommand("compare-variants", "smoothed vs classical elasticity RHS");
  cmp->add_option("--load", load, "manufactured solution name (elasticity)");
  cmp->add_option("--base-n", base_n, "coarsest builtin square");
  cmp->add_option("--levels", levels, "number of refinements");
  cmp->add_option("--eta", eta, "penalty parameter");
  cmp->add_option("--lambda", lambda, "Lame lambda");
  cmp->add_option("--mu", mu, "Lame mu");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(problem, variant, p, eta, smoother, load, mesh_spec, levels, out, format,
                     lambda, mu);
    if (chk->parsed()) return cmd_check_smoothers(mesh_spec, seed);
    if (eta_cmd->parsed()) return cmd_eta_star(mesh_spec, p, order);
    if (cmp->parsed())
      return cmd_compare_variants(load, base_n, levels, eta < 0 ? 10.0 : eta, lambda, mu);
  } catch (const qoip::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
