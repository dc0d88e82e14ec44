// Riemannian structure on the space of k-Hessian potentials: the L^2 metric
// <a, b> = int a b omega_u^k ^ omega^{n-k}, its connection
// D_{u'} phi = phi' - Q(du', dphi), regularized geodesics and the sectional
// curvature form.
//
// Geodesics solve u'' - |du'|^2_G = 0 on [0, 1] with prescribed endpoints.
// The regularized problem adds a spatial damping term,
//
//   u'' - |du'|^2_G + eps Delta_omega (u - l) = 0,   l = (1 - t) phi0 + t phi1,
//
// which makes the space-time operator uniformly elliptic for eps > 0 and
// vanishes on paths whose velocity is spatially constant. Time is discretized
// on a uniform grid with second-order central differences, space spectrally.
#pragma once

#include "khess/energy.hpp"
#include "khess/hessian_state.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace khess {

class GeodesicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tangent vector `value` at the potential `base`.
struct TangentVector {
  PotentialField base;
  PotentialField value;
};

/// int a b omega_u^k ^ omega^{n-k}, the state supplying u and k.
double metric_inner(const HessianState& state, const PotentialField& a, const PotentialField& b);
/// Same for tangent vectors sharing their base. Throws GridMismatch if the
/// bases differ.
double metric_inner(const TangentVector& a, const TangentVector& b, int k);

/// D_{u'} phi = phi' - Q(du', dphi) at the state of u.
PotentialField connection_D(const HessianState& state, const PotentialField& u_dot,
                            const PotentialField& phi_dot, const PotentialField& phi);

/// D_{u'} phi at sample i of two paths on the same time grid, with u' and
/// phi' by central differences. Requires 1 <= i <= size - 2.
PotentialField connection_along(const PotentialPath& u, const PotentialPath& phi, std::size_t i, int k);

struct GeodesicConfig {
  int k = 1;
  int time_steps = 16;       ///< number of time intervals on [0, 1]
  double tol = 1e-10;        ///< sup-norm target for the discrete equation
  int max_newton = 30;
  double gmres_rtol = 1e-8;
  int gmres_restart = 60;
  int gmres_max_iter = 600;
  double eps_start = 1.0;    ///< continuation starts at max(eps, eps_start)
  double eps_factor = 0.5;   ///< geometric reduction per continuation stage
  int max_stages = 200;
  double fd_eta = 1e-6;      ///< relative Jacobian-vector difference step
  std::function<void(const std::string&)> log;
};

struct GeodesicStage {
  double epsilon = 0.0;
  double equation_residual = 0.0;
  double geodesic_residual = 0.0;
  int newton_iterations = 0;
};

struct GeodesicPath {
  PotentialPath u;  ///< samples at t_j = j / time_steps, endpoints included
  double epsilon = 0.0;
  double residual = 0.0;           ///< sup |u'' - |du'|^2_G| over interior samples
  double equation_residual = 0.0;  ///< sup of the regularized discrete equation
  std::vector<double> energies;    ///< <u', u'> at interior samples
  int iterations = 0;
  std::vector<GeodesicStage> trace;
  std::string time_discretization = "uniform, second-order central differences";
};

/// Solves the regularized boundary value problem by Newton-Krylov in
/// space-time, continuing in eps from max(eps, eps_start) down to eps.
GeodesicPath solve_geodesic(const PotentialField& phi0, const PotentialField& phi1, double epsilon,
                            const GeodesicConfig& config = {});

/// sup over interior samples of |u'' - |du'|^2_G| with central differences.
double geodesic_residual(const PotentialPath& u, int k);

/// <u', u'> at every interior sample.
std::vector<double> path_energies(const PotentialPath& u, int k);

/// The two non-positive parts of <R(X, Y) Y, X>:
///   pair_term    = (1/C(n,k)) int sum_{i<j} c_ij |X_i Y_j - X_j Y_i|^2,
///   bracket_term = -(1/C(n,k)) int sigma_k (Im q)^2,  q = sum_i d_i X_i conj(Y_i),
/// with c_ij = sigma_{k-2,ij} - sigma_{k-1,i} sigma_{k-1,j} / sigma_k and X_i, Y_i
/// the frame components of dX, dY.
struct CurvatureTerms {
  double pair_term = 0.0;
  double bracket_term = 0.0;
  [[nodiscard]] double total() const { return pair_term + bracket_term; }
};

CurvatureTerms curvature_terms(const HessianState& state, const PotentialField& X, const PotentialField& Y);
double curvature_form(const PotentialField& u, const PotentialField& X, const PotentialField& Y, int k);

/// int |dX|^2_G |dY|^2_G ratio dV. Curvature values are compared against
/// this, the size of the quartic form they are drawn from.
double curvature_scale(const HessianState& state, const PotentialField& X, const PotentialField& Y);

/// <R(X, Y) Y, X> from central differences of the connection on the family
/// u + t X + s Y, with step h. Shrinks h by 4 when the family leaves the cone.
double curvature_bruteforce(const PotentialField& u, const PotentialField& X, const PotentialField& Y, int k,
                            double h);

/// Largest sign over grid points of the pointwise curvature integrand,
/// evaluated in exact rational arithmetic from the rounded eigenvalues and
/// frame components. Non-positive for every admissible input.
int curvature_exact_sign(const HessianState& state, const PotentialField& X, const PotentialField& Y);

}  // namespace khess
