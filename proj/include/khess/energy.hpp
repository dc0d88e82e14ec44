// The Hessian Mabuchi energy, its twisted variant, the entropy functional
// and finite-difference checks of the first and second variation formulas.
//
// On the flat torus Ric(omega) = 0. A twist form alpha takes the place of
// Ric(omega) everywhere, so the generalized Ricci curvature used below is
// -ddbar f + alpha, with alpha = 0 for the untwisted energy.
#pragma once

#include "khess/hessian_state.hpp"
#include "khess/wedge.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace khess {

struct EnergyReport {
  double mu_k = 0.0;
  double entropy_term = 0.0;
  double j_term = 0.0;
  double twist_term = 0.0;
  double lambda = 0.0;
  double A_F = 0.0;
  double sup_phi = 0.0;
  double sup_F = 0.0;
};

/// mu_k = entropy_term - j_term - twist_term with Ric(omega) = 0.
EnergyReport mu_k(const PotentialField& phi, double lambda, int k);

/// The same closed form with alpha in place of Ric(omega). If lambda is not
/// given, lambda = alpha_bar / k with the cohomological alpha_bar.
EnergyReport mu_k_twisted(const PotentialField& phi, const TwistForm& alpha, int k,
                          std::optional<double> lambda = std::nullopt);

/// alpha_bar evaluated at phi = 0: (k/n) tr(Omega^{-1} A0). This is the
/// value of k int alpha ^ omega_phi^{k-1} ^ omega^{n-k} / V for every phi.
double alpha_bar_cohomological(const TorusBackground& bg, const TwistForm& alpha, int k);

/// mu_{alpha,k}(phi) - mu_{alpha,k}(0) by composite Simpson quadrature of the
/// first variation along s -> s phi, with `intervals` (even) subintervals.
double mu_k_line_integral(const PotentialField& phi, const TwistForm& alpha, double lambda, int k,
                          int intervals = 16);

/// d/dt mu at phi in the direction phi_dot:
///   -(1/V) int phi_dot (tr_G Ric_hat - lambda k) s_k.
double first_variation(const HessianState& state, const PotentialField& phi_dot, double lambda,
                       const HermitianField* alpha = nullptr);

/// The four-term second variation formula at phi for the path data
/// (phi_dot, phi_ddot). Individual terms are returned for diagnostics.
struct SecondVariationTerms {
  double geodesic_term = 0.0;   ///< -(k/V) int (phi_ddot - |d phi_dot|^2_G)(Ric_hat - lambda omega_phi) ^ ...
  double laplacian_term = 0.0;  ///< (1/V) int |Delta_G phi_dot|^2 s_k
  double mixed_term = 0.0;      ///< (k(k-1)/V) int i d phi_dot ^ dbar phi_dot ^ Ric_hat ^ omega_phi^{k-2} ^ ...
  double gradient_term = 0.0;   ///< -(k/V) int |d phi_dot|^2_G Ric_hat ^ omega_phi^{k-1} ^ ...
  [[nodiscard]] double total() const { return geodesic_term + laplacian_term + mixed_term + gradient_term; }
};
SecondVariationTerms second_variation(const HessianState& state, const PotentialField& phi_dot,
                                      const PotentialField& phi_ddot, double lambda,
                                      const HermitianField* alpha = nullptr);

/// B ^ C ^ omega_phi^a ^ omega^{n-2-a} / omega^n for two form fields, via the
/// eigenframe of the state.
PotentialField wedge_two_forms(const HessianState& state, const HermitianField& B,
                               const HermitianField& C, int a);

/// Samples of a path phi_{t_0 + i h}, i = 0..m.
struct PotentialPath {
  std::vector<PotentialField> samples;
  double t0 = 0.0;
  double h = 0.0;
  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) * h; }

  static PotentialPath sample(const std::function<PotentialField(double)>& path, double t0, double h,
                              int count);
};

struct VariationReport {
  std::vector<double> residuals;  ///< absolute residual at every interior sample
  std::vector<double> difference;  ///< finite-difference derivative of mu
  std::vector<double> formula;     ///< closed formula
  double max_residual = 0.0;
  double max_relative = 0.0;
};

/// Centred differences of mu_k along the path against the first variation
/// formula with centred phi_dot. Requires >= 3 samples and h > 0.
VariationReport verify_first_variation(const PotentialPath& path, double lambda, int k,
                                       const HermitianField* alpha = nullptr);

/// Second centred differences of mu_k against the four-term formula with
/// centred phi_dot, phi_ddot. Requires >= 3 samples.
VariationReport verify_second_variation(const PotentialPath& path, double lambda, int k,
                                        const HermitianField* alpha = nullptr);

/// Refinement study: the residual at time t of the selected variation
/// (order 1 or 2) for steps h0, h0/2, ..., and the observed orders.
struct RefinementReport {
  std::vector<double> h;
  std::vector<double> residual;
  std::vector<double> relative;
  std::vector<double> order;  ///< log2(residual[l] / residual[l+1])
  [[nodiscard]] double min_order() const;
};
RefinementReport variation_refinement(const std::function<PotentialField(double)>& path, double t,
                                      double h0, int levels, double lambda, int k, int which,
                                      const HermitianField* alpha = nullptr);

/// Entropy functional A_F = int e^{(n/k)F} sqrt(F^2 + 1) omega^n, evaluated
/// with a max shift so large F does not overflow.
struct EntropyValues {
  double A_F = 0.0;
  double log_A_F = 0.0;
  double entropy = 0.0;  ///< int e^{(n/k)F} |F| omega^n
};
EntropyValues entropy_A(const PotentialField& F, int n, int k);

}  // namespace khess
