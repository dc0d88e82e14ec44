// Newton-continuation solver for the coupled system
//
//   omega_phi^k ^ omega^{n-k} = e^F omega^n,   Delta_G F + alpha_bar = tr_G alpha,
//
// the auxiliary complex Monge-Ampere equation used in the C^0 estimate, and
// the numerical harness that evaluates the quantities of that estimate.
//
// The first equation is eliminated by F = log(sigma_k / C(n,k)), leaving the
// fourth-order equation S(phi) = Delta_G F + alpha_bar - tr_G alpha = 0 for
// phi modulo constants. Newton iterates stay in the resolved modes (no
// constant and no Nyquist-plane content, where first derivatives vanish) and
// drive the residual projected onto those modes to tolerance. Newton steps use a finite-difference Jacobian-vector
// product inside GMRES, preconditioned by the inverse square of the
// constant-coefficient Laplacian with the grid-averaged G.
#pragma once

#include "khess/hessian_state.hpp"
#include "khess/wedge.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace khess {

/// Raised when Newton or continuation fails to converge. The trace of the
/// attempt is kept in the message.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveConfig {
  BackgroundPtr background;
  int k = 1;
  double tol = 1e-9;          ///< sup-norm target for both residuals
  int max_newton = 25;        ///< Newton iterations per continuation step
  double gmres_rtol = 1e-6;   ///< relative tolerance of every linear solve
  int gmres_restart = 50;
  int gmres_max_iter = 400;
  double initial_step = 1.0;  ///< first continuation increment in the alpha scale
  double min_step = 1.0 / 1024;
  double fd_eta = 1e-5;       ///< relative size of the Jacobian-vector difference step
  std::function<void(const std::string&)> log;  ///< optional progress sink
};

struct ContinuationRecord {
  double t = 0.0;  ///< alpha scale reached
  double r1 = 0.0;
  double r2 = 0.0;
  int newton_iterations = 0;
  bool accepted = false;
};

struct CoupledSolution {
  PotentialField phi;
  PotentialField F;
  TwistForm alpha;
  int k = 1;
  double r1 = 0.0;  ///< sup |sigma_k / C(n,k) - e^F|
  double r2 = 0.0;  ///< sup |Delta_G F + alpha_bar - tr_G alpha|
  int iterations = 0;
  std::vector<ContinuationRecord> continuation_trace;
};

/// Residuals of a candidate pair recomputed from scratch.
std::pair<double, double> coupled_residuals(const PotentialField& phi, const PotentialField& F,
                                            const TwistForm& alpha, int k);

/// Solves the coupled system. `seed` is an admissible starting potential for
/// the alpha scale 0 (zero if absent); continuation then raises the scale to
/// 1. On return sup phi = 0.
CoupledSolution solve_coupled(const SolveConfig& config, const TwistForm& alpha,
                              const std::optional<PotentialField>& seed = std::nullopt);

/// Manufactured data: for admissible phi_star, F_star = log ratio(phi_star)
/// and alpha_star = ddbar F_star make (phi_star, F_star) an exact solution.
TwistForm manufactured_twist(const PotentialField& phi_star, int k);

struct MAConfig {
  double tol = 1e-10;
  int max_newton = 40;
  double gmres_rtol = 1e-8;
  int gmres_max_iter = 300;
  double initial_step = 1.0;
  double min_step = 1.0 / 1024;
};

struct MASolution {
  PotentialField psi;
  double residual = 0.0;  ///< sup |log(omega_psi^n / omega^n) - log rho|
  /// The same after removing the constant and Nyquist-plane modes, which the
  /// Newton iteration drives to tolerance.
  double resolved_residual = 0.0;
  double mass = 0.0;      ///< int omega_psi^n
  int iterations = 0;
};

/// Solves omega_psi^n = rho omega^n with rho = V e^{(n/k)F} sqrt(F^2+1) / A_F,
/// normalized by sup psi = 0.
MASolution solve_auxiliary_MA(const PotentialField& F, int k, const MAConfig& config = {});

/// log rho for the auxiliary equation, with mean of rho equal to 1.
PotentialField auxiliary_log_density(const PotentialField& F, int k);

struct EstimateReport {
  double entropy = 0.0;  ///< int e^{(n/k)F} |F| omega^n
  double A_F = 0.0;
  double sup_abs_F = 0.0;
  double sup_F = 0.0;
  double inf_F = 0.0;
  double sup_abs_phi = 0.0;
  double lemma2_max = 0.0;  ///< max (F + eps psi - lambda phi)
  double lambda_used = 0.0;  ///< 10 + sup |alpha|_omega
  double epsilon = 0.0;
  double ma_residual = 0.0;
};

EstimateReport estimate_harness(const CoupledSolution& sol, double epsilon, const MAConfig& ma = {});

/// min over the grid of det(G) sigma_k^{n/k}, with det G measured relative
/// to omega (the product of the d_i).
double detG_field_check(const PotentialField& phi, int k);

}  // namespace khess
