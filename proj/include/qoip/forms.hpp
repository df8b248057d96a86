#pragma once

#include <functional>

#include "qoip/smoothers.hpp"

namespace qoip {

struct PenaltyConfig {
  double eta = 10.0;
  double eta_star_estimate = 0.0;  // 0 = not computed
  mutable bool coercivity_warning = false;
};

struct LameCoefficients {
  double mu = 1.0;
  double lambda = 1.0;
};

/// Load pair (g0, g) with <f, v> = int g0.v + int g:grad v; covers L^2 and
/// H^-1 loads. g may jump across mesh-aligned lines only (it is evaluated at
/// element-interior points).
struct LoadFunctional {
  int value_dim = 1;
  int quad_degree = 16;
  std::function<double(const Vec2&)> g0;
  std::function<Vec2(const Vec2&)> g;  // flux part
  std::function<Vec2(const Vec2&)> g0v;
  std::function<Eigen::Matrix2d(const Vec2&)> gv;  // row c = flux of component c
  bool has_flux() const { return static_cast<bool>(g) || static_cast<bool>(gv); }
};

enum class DgVariant { Sip, Nip };
enum class RhsSmoother { Ep, EpTilde, E1Vector, Ec0, Identity };

/// SIP/NIP bilinear form on a broken space; skeleton sums run over all faces
/// with the jump = average = trace convention on the boundary.
SparseMat assemble_poisson_dg(const std::shared_ptr<const FeSpace>& space,
                              const PenaltyConfig& cfg, DgVariant variant);

/// Gram matrix of the extended scalar product: order 1 is grad-grad plus
/// eta/h jump penalties (with 2mu eps:eps + lambda div div for vector CR
/// when lame is given); order 2 is hess:hess plus normal-gradient-jump
/// penalties on continuous quadratics.
SparseMat assemble_extended_product(const std::shared_ptr<const FeSpace>& space,
                                    const PenaltyConfig& cfg, int order,
                                    const LameCoefficients* lame = nullptr);

/// Penalized Crouzeix-Raviart elasticity form (single eta/h penalty).
SparseMat assemble_elasticity_hl(const std::shared_ptr<const FeSpace>& cr,
                                 const PenaltyConfig& cfg, const LameCoefficients& lame);

/// C0 interior penalty (Brenner-Sung) bilinear form on continuous quadratics.
SparseMat assemble_biharmonic_c0(const std::shared_ptr<const FeSpace>& s2,
                                 const PenaltyConfig& cfg);

/// Right-hand side <f, E psi_i>. The identity smoother rejects flux loads on
/// discontinuous spaces (the pairing is undefined there).
Eigen::VectorXd assemble_rhs(const LoadFunctional& load,
                             const std::shared_ptr<const FeSpace>& space, RhsSmoother smoother);

/// Trace-inverse threshold (d+1) * max_{K, F in faces(K)} h_F * lambda_max of
/// the local generalized eigenproblem M_F x = lambda M_K x (normal flux of
/// gradients for order 1, second normal derivatives for order 2).
double estimate_eta_star(const Mesh& mesh, int p, int order = 1);

}  // namespace qoip
