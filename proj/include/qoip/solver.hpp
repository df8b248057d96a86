#pragma once

#include <Eigen/Sparse>
#include <string>
#include <utility>

namespace qoip {

struct SolveReport {
  std::string method;
  int iterations = 0;
  double rel_residual = 0.0;
  bool success = false;
};

using SpSystem = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Sparse Cholesky; throws indefinite-matrix on a nonpositive pivot (this is
/// the SIP coercivity probe) and singular-system on breakdown.
std::pair<Eigen::VectorXd, SolveReport> solve_spd(const SpSystem& B, const Eigen::VectorXd& r,
                                                  double tol = 1e-12);

/// Sparse LU for general nondegenerate systems.
std::pair<Eigen::VectorXd, SolveReport> solve_general(const SpSystem& B, const Eigen::VectorXd& r,
                                                      double tol = 1e-12);

// Iterative paths, kept for regression only.
std::pair<Eigen::VectorXd, SolveReport> solve_cg(const SpSystem& B, const Eigen::VectorXd& r,
                                                 double tol = 1e-12);
std::pair<Eigen::VectorXd, SolveReport> solve_bicgstab(const SpSystem& B,
                                                       const Eigen::VectorXd& r,
                                                       double tol = 1e-12);

}  // namespace qoip
