// Pointwise k-Hessian data of an admissible potential and the operators
// built from it (Delta_G, G-gradients, generalized Ricci curvature).
//
// At every grid point the Cholesky factor Omega = L L^H is used to form
// M = L^{-1} (Omega + H) L^{-H} = U diag(lambda) U^H. The frame P = L^{-H} U
// satisfies P^H Omega P = I and P^H (Omega + H) P = diag(lambda), and
//   G = P diag(d) P^H,  d_i = sigma_{k-1,i}(lambda) / sigma_k(lambda).
// The frame components of a (1,0)-covector v are P^H v, and those of a
// Hermitian form B are P^H B P.
#pragma once

#include "khess/symcone.hpp"
#include "khess/torus.hpp"

#include <vector>

namespace khess {

/// Admissibility failure. Carries the worst grid point and its spectrum.
class ConeError : public DomainError {
 public:
  ConeError(const std::string& what, std::size_t point, std::vector<double> lambda, int required_k);
  [[nodiscard]] std::size_t point() const { return point_; }
  [[nodiscard]] const std::vector<double>& lambda() const { return lambda_; }
  [[nodiscard]] int required_k() const { return required_k_; }

 private:
  std::size_t point_;
  std::vector<double> lambda_;
  int required_k_;
};

class HessianState {
 public:
  HessianState() = default;

  [[nodiscard]] const BackgroundPtr& background() const { return bg_; }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] std::size_t num_points() const { return npts_; }

  [[nodiscard]] const HermitianField& hessian() const { return H_; }
  [[nodiscard]] const HermitianField& G() const { return G_; }

  /// Relative eigenvalues at point p (ascending).
  [[nodiscard]] std::span<const double> lambda(std::size_t p) const {
    return {lambda_.data() + p * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
  }
  [[nodiscard]] EigenSpectrum spectrum(std::size_t p) const;
  /// sigma_m(lambda) at point p for 0 <= m <= n.
  [[nodiscard]] double sigma(std::size_t p, int m) const {
    return sigma_[p * static_cast<std::size_t>(n_ + 1) + static_cast<std::size_t>(m)];
  }
  /// d_i = sigma_{k-1,i} / sigma_k at point p.
  [[nodiscard]] double d(std::size_t p, int i) const {
    return d_[p * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)];
  }
  /// The frame P at point p.
  [[nodiscard]] const HMat& frame(std::size_t p) const { return frame_[p]; }

  /// omega_phi^m ^ omega^{n-m} / omega^n = sigma_m / C(n,m), as a field.
  [[nodiscard]] PotentialField wedge_ratio(int m) const;
  /// sigma_k / C(n,k).
  [[nodiscard]] const PotentialField& ratio() const { return ratio_; }
  /// log ratio, the F determined by phi.
  [[nodiscard]] const PotentialField& f() const { return f_; }

  friend HessianState evaluate_state(const PotentialField& phi, int k, double eps_cone);

 private:
  BackgroundPtr bg_;
  int n_ = 0;
  int k_ = 0;
  std::size_t npts_ = 0;
  HermitianField H_;
  HermitianField G_;
  std::vector<double> lambda_;
  std::vector<double> sigma_;
  std::vector<double> d_;
  std::vector<HMat> frame_;
  PotentialField ratio_;
  PotentialField f_;
};

/// Builds the state of phi. Throws ConeError if some point fails
/// sigma_j > eps_cone * max(1, |lambda|_inf)^j for a j <= k.
HessianState evaluate_state(const PotentialField& phi, int k, double eps_cone = 0.0);

/// Re tr(G ddbar u).
PotentialField laplace_G(const HessianState& state, const PotentialField& u);

/// tr_G alpha = Re tr(G alpha) for a Hermitian form field.
PotentialField trace_G(const HessianState& state, const HermitianField& alpha);

/// |du|^2_G = (du)^H G (du).
PotentialField grad_norm_G(const HessianState& state, const PotentialField& u);
PotentialField grad_norm_G(const HessianState& state, const GradientField& du);

/// Q(a, b) = Re((da)^H G (db)), the symmetrized G-pairing of gradients.
PotentialField grad_pairing_G(const HessianState& state, const PotentialField& a,
                              const PotentialField& b);

/// -ddbar log ratio; Ric(omega) vanishes on a flat torus.
HermitianField generalized_ricci(const HessianState& state);
HermitianField generalized_ricci(const PotentialField& phi, int k);

/// Frame components P^H v of a gradient at point p.
CVec frame_components(const HessianState& state, std::size_t p, const CVec& v);
/// Frame components P^H B P of a form at point p.
HMat frame_components(const HessianState& state, std::size_t p, const HMat& B);

}  // namespace khess
