// Wedge products of (1,1)-forms, their quadrature, and twist forms.
//
// A real (1,1)-form sqrt(-1) B_ij dz_i ^ dz_j-bar is represented by its
// Hermitian coefficient matrix B. The density of B_1 ^ ... ^ B_n relative to
// omega^n is the mixed discriminant of Omega^{-1} B_1, ..., Omega^{-1} B_n,
// normalised so that D(I, ..., I) = 1.
#pragma once

#include "khess/hessian_state.hpp"

#include <optional>
#include <span>
#include <vector>

namespace khess {

/// Mixed discriminant, expanded by polarization:
///   D(M_1..M_n) = (1/n!) sum_{S} (-1)^{n-|S|} det(sum_{i in S} M_i).
cd mixed_discriminant(std::span<const HMat> mats);

/// One factor of a wedge product: either a constant form or a form field,
/// raised to a power.
struct WedgeFactor {
  const HermitianField* field = nullptr;
  HMat constant;
  int power = 1;

  static WedgeFactor of(const HermitianField& f, int power = 1) { return {&f, HMat(), power}; }
  static WedgeFactor of(const HMat& c, int power = 1) { return {nullptr, c, power}; }
};

/// Pointwise density of the wedge product relative to omega^n.
/// Throws DomainError if the powers do not add up to n.
std::vector<double> wedge_density(const TorusBackground& bg, const std::vector<WedgeFactor>& factors);

/// integral of weight * (product of factors); weight may be omitted.
double wedge_integral(const TorusBackground& bg, const std::vector<WedgeFactor>& factors,
                      const PotentialField* weight = nullptr);

/// omega + ddbar phi as a form field.
HermitianField omega_phi(const PotentialField& phi);

/// alpha ^ omega_phi^m ^ omega^{n-1-m} / omega^n using the eigenframe of the state:
/// sum_i (P^H alpha P)_ii sigma_{m,i} m! (n-1-m)! / n!.
PotentialField wedge_one_form(const HessianState& state, const HermitianField& alpha, int m);

/// A closed real (1,1)-form alpha = A0 + ddbar beta with A0 constant.
struct TwistForm {
  HMat A0;
  std::optional<PotentialField> beta;

  static TwistForm zero(int n) { return {HMat::Zero(n, n), std::nullopt}; }
  static TwistForm scaled_omega(const TorusBackground& bg, double c) {
    return {c * bg.omega(), std::nullopt};
  }

  [[nodiscard]] HermitianField field(const TorusBackground& bg) const;
  [[nodiscard]] TwistForm scaled(double t) const;
};

/// k * int alpha ^ omega_phi^{k-1} ^ omega^{n-k} / int omega_phi^k ^ omega^{n-k}
///   = int tr_G(alpha) s_k / int s_k.
double alpha_bar(const HessianState& state, const TwistForm& alpha);
double alpha_bar(const HessianState& state, const HermitianField& alpha);

/// Pointwise norm |alpha|_omega: Frobenius norm of L^{-1} alpha L^{-H}.
PotentialField alpha_norm(const BackgroundPtr& bg, const HermitianField& alpha);
double alpha_sup_norm(const TorusBackground& bg, const TwistForm& alpha);

}  // namespace khess
