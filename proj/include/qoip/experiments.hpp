#pragma once

#include <string>
#include <vector>

#include "qoip/forms.hpp"
#include "qoip/solver.hpp"

namespace qoip {

enum class Problem { Poisson, Elasticity, Biharmonic };
enum class Variant { Sip, Nip, Hl, C0ip };
enum class Smoothing { Full, Tilde, Identity };

/// Exact solution, derivatives, and matching load. Scalar problems populate
/// u; elasticity populates uv/uv_grad/uv_laplacian. The load of MS-E1 is
/// normalized to mu = 1.
struct ManufacturedSolution {
  std::string name;
  Problem problem = Problem::Poisson;
  std::string regularity = "smooth";
  bool requires_aligned_mesh = false;
  ScalarField u;
  VectorField uv;
  std::function<Eigen::Matrix2d(const Vec2&)> uv_grad;
  std::function<Vec2(const Vec2&)> uv_laplacian;
  LoadFunctional load;
};

const ManufacturedSolution& manufactured_solution(const std::string& name);
std::vector<std::string> manufactured_names();

/// Extended energy norm of u - U (jumps of the exact solution vanish).
double energy_error(const ManufacturedSolution& ms, const FeFunction& U,
                    const PenaltyConfig& cfg, const LameCoefficients* lame = nullptr);

/// a~-orthogonal projection of the exact solution onto the space.
FeFunction best_approximation(const ManufacturedSolution& ms,
                              const std::shared_ptr<const FeSpace>& space,
                              const PenaltyConfig& cfg, const LameCoefficients* lame = nullptr);

struct RunResult {
  FeFunction U;
  SolveReport report;
};

RunResult run_method(Problem problem, Variant variant, int p, const PenaltyConfig& cfg,
                     Smoothing smoother, const ManufacturedSolution& ms,
                     const std::shared_ptr<const Mesh>& mesh,
                     const LameCoefficients* lame = nullptr);

/// ||u - U|| / ||u - R_S u||; requires the denominator to clear 10x the
/// solver tolerance.
double qopt_ratio(double energy_err, double best_err, double solver_tol = 1e-12);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  double energy_error = 0.0;
  double best_error = 0.0;
  double ratio = 0.0;
  double eoc = 0.0;  // log2(e_{k-1}/e_k); 0 on the first row
};

struct StudyConfig {
  Problem problem = Problem::Poisson;
  Variant variant = Variant::Sip;
  int p = 1;
  double eta = -1.0;  // negative: default (10p^2 Poisson, 10 elasticity, 4 eta_* biharmonic)
  Smoothing smoother = Smoothing::Full;
  std::string load = "MS-P1";
  int base_n = 2;
  int levels = 4;  // refinements; rows = levels + 1
  LameCoefficients lame{1.0, 1.0};
  std::string mesh_file;  // optional starting mesh
};

struct StudyResult {
  StudyConfig config;
  std::vector<ConvergenceRow> rows;
  double eta_used = 0.0;
  double eta_star = 0.0;
  double gamma = 0.0;
  std::vector<SolveReport> reports;
};

StudyResult convergence_study(const StudyConfig& config);

/// || U - U_hat ||_{lambda;eta} between the smoothed and the classical
/// right-hand side on the shared elasticity system.
struct VariantComparisonRow {
  int level = 0;
  double h = 0.0;
  double diff_norm = 0.0;
  double eoc = 0.0;
};
std::vector<VariantComparisonRow> compare_variants(const std::string& load, int base_n,
                                                   int levels, double eta,
                                                   const LameCoefficients& lame);

void write_csv(const StudyResult& result, const std::string& path);
void write_json(const StudyResult& result, const std::string& path);

std::string problem_name(Problem p);
std::string variant_name(Variant v);
std::string smoothing_name(Smoothing s);

}  // namespace qoip
