#include "qoip/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "qoip/error.hpp"

namespace qoip {

namespace {

double residual(const SpSystem& B, const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return (B * x).norm();
  return (B * x - r).norm() / rn;
}

void check_symmetric(const SpSystem& B) {
  const SpSystem Bt = SpSystem(B.transpose());
  double scale = 0.0, diff = 0.0;
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpSystem::InnerIterator it(B, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  const SpSystem D = B - Bt;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SpSystem::InnerIterator it(D, k); it; ++it) diff = std::max(diff, std::abs(it.value()));
  require(diff <= 1e-12 * std::max(1.0, scale), ErrorCode::InvalidArgument,
          "SPD solve requires a symmetric matrix");
}

template <class Factorization>
std::pair<Eigen::VectorXd, SolveReport> direct_solve(const SpSystem& B, const Eigen::VectorXd& r,
                                                     double tol, const char* name,
                                                     ErrorCode on_numerical_issue) {
  require(B.rows() == B.cols(), ErrorCode::InvalidArgument, "matrix must be square");
  require(B.rows() == r.size(), ErrorCode::InvalidArgument, "dimension mismatch");
  Eigen::SparseMatrix<double> A(B);  // factorizations want column-major
  Factorization fact;
  fact.compute(A);
  if (fact.info() != Eigen::Success)
    fail(on_numerical_issue, std::string(name) + ": factorization failed");
  Eigen::VectorXd x = fact.solve(r);
  if (fact.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "solve failed");
  // one step of iterative refinement if the direct residual misses the contract
  double res = residual(B, x, r);
  for (int it = 0; it < 2 && res > tol; ++it) {
    x += fact.solve((r - B * x).eval());
    res = residual(B, x, r);
  }
  SolveReport rep{name, 0, res, res <= tol};
  return {std::move(x), rep};
}

}  // namespace

std::pair<Eigen::VectorXd, SolveReport> solve_spd(const SpSystem& B, const Eigen::VectorXd& r,
                                                  double tol) {
  check_symmetric(B);
  return direct_solve<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(
      B, r, tol, "cholesky", ErrorCode::IndefiniteMatrix);
}

std::pair<Eigen::VectorXd, SolveReport> solve_general(const SpSystem& B, const Eigen::VectorXd& r,
                                                      double tol) {
  return direct_solve<Eigen::SparseLU<Eigen::SparseMatrix<double>>>(B, r, tol, "lu",
                                                                    ErrorCode::SingularSystem);
}

std::pair<Eigen::VectorXd, SolveReport> solve_cg(const SpSystem& B, const Eigen::VectorXd& r,
                                                 double tol) {
  Eigen::ConjugateGradient<SpSystem, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(10000);
  cg.compute(B);
  const Eigen::VectorXd x = cg.solve(r);
  const double res = residual(B, x, r);
  return {x, SolveReport{"cg", static_cast<int>(cg.iterations()), res, res <= tol * 10}};
}

std::pair<Eigen::VectorXd, SolveReport> solve_bicgstab(const SpSystem& B,
                                                       const Eigen::VectorXd& r, double tol) {
  Eigen::BiCGSTAB<SpSystem> solver;
  solver.setTolerance(tol);
  solver.setMaxIterations(10000);
  solver.compute(B);
  const Eigen::VectorXd x = solver.solve(r);
  const double res = residual(B, x, r);
  return {x, SolveReport{"gmres-like", static_cast<int>(solver.iterations()), res, res <= tol * 10}};
}

}  // namespace qoip
