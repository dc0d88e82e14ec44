#include "khess/wedge.hpp"

#include "khess/parallel.hpp"

#include <cmath>

namespace khess {

cd mixed_discriminant(std::span<const HMat> mats) {
  const int n = static_cast<int>(mats.size());
  if (n == 0) return {1.0, 0.0};
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  cd acc(0.0, 0.0);
  const unsigned full = 1u << static_cast<unsigned>(n);
  for (unsigned S = 1; S < full; ++S) {
    HMat sum = HMat::Zero(n, n);
    int size = 0;
    for (int i = 0; i < n; ++i) {
      if (S & (1u << static_cast<unsigned>(i))) {
        sum += mats[static_cast<std::size_t>(i)];
        ++size;
      }
    }
    const double sgn = ((n - size) % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * sum.determinant();
  }
  return acc / fact;
}

std::vector<double> wedge_density(const TorusBackground& bg, const std::vector<WedgeFactor>& factors) {
  const int n = bg.n();
  int total = 0;
  for (const auto& f : factors) {
    if (f.power < 0) throw DomainError("wedge_density: negative power");
    total += f.power;
    if (f.field && (f.field->n() != n || f.field->num_points() != bg.num_points())) {
      throw GridMismatch("wedge_density: form field does not match the background");
    }
  }
  if (total != n) throw DomainError("wedge_density: total degree must equal n");
  const HMat& Li = bg.chol_inv();
  std::vector<double> out(bg.num_points(), 0.0);
  parallel_for(bg.num_points(), [&](std::size_t p) {
    std::vector<HMat> mats;
    mats.reserve(static_cast<std::size_t>(n));
    for (const auto& f : factors) {
      const HMat B = f.field ? f.field->at(p) : f.constant;
      const HMat rel = Li * B * Li.adjoint();
      for (int r = 0; r < f.power; ++r) mats.push_back(rel);
    }
    out[p] = mixed_discriminant(mats).real();
  });
  return out;
}

double wedge_integral(const TorusBackground& bg, const std::vector<WedgeFactor>& factors,
                      const PotentialField* weight) {
  auto dens = wedge_density(bg, factors);
  if (weight) {
    if (weight->size() != dens.size()) throw GridMismatch("wedge_integral: weight size mismatch");
    for (std::size_t p = 0; p < dens.size(); ++p) dens[p] *= weight->data[p];
  }
  return integrate(bg, dens);
}

HermitianField omega_phi(const PotentialField& phi) {
  HermitianField H = complex_hessian(phi);
  const HMat& Om = phi.background->omega();
  for (std::size_t p = 0; p < H.num_points(); ++p) H.set(p, H.at(p) + Om);
  return H;
}

PotentialField wedge_one_form(const HessianState& state, const HermitianField& alpha, int m) {
  const int n = state.n();
  if (m < 0 || m > n - 1) throw DomainError("wedge_one_form: degree out of range");
  double coef = 1.0;
  for (int i = 2; i <= m; ++i) coef *= i;
  for (int i = 2; i <= n - 1 - m; ++i) coef *= i;
  for (int i = 2; i <= n; ++i) coef /= i;
  PotentialField out(state.background());
  for (std::size_t p = 0; p < state.num_points(); ++p) {
    const HMat B = frame_components(state, p, alpha.at(p));
    const auto lam = state.lambda(p);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += B(i, i).real() * sigma_raw(m, lam, i);
    out.data[p] = coef * acc;
  }
  return out;
}

HermitianField TwistForm::field(const TorusBackground& bg) const {
  HermitianField f(bg.n(), bg.num_points());
  if (beta) f = complex_hessian(*beta);
  for (std::size_t p = 0; p < f.num_points(); ++p) f.set(p, f.at(p) + A0);
  return f;
}

TwistForm TwistForm::scaled(double t) const {
  TwistForm out{t * A0, beta};
  if (out.beta) *out.beta *= t;
  return out;
}

double alpha_bar(const HessianState& state, const HermitianField& alpha) {
  const auto& bg = *state.background();
  const PotentialField tr = trace_G(state, alpha);
  std::vector<double> num(state.num_points());
  for (std::size_t p = 0; p < num.size(); ++p) num[p] = tr.data[p] * state.ratio().data[p];
  return integrate(bg, num) / integrate(state.ratio());
}

double alpha_bar(const HessianState& state, const TwistForm& alpha) {
  return alpha_bar(state, alpha.field(*state.background()));
}

PotentialField alpha_norm(const BackgroundPtr& bg, const HermitianField& alpha) {
  const HMat& Li = bg->chol_inv();
  PotentialField out(bg);
  for (std::size_t p = 0; p < alpha.num_points(); ++p) {
    out.data[p] = (Li * alpha.at(p) * Li.adjoint()).norm();
  }
  return out;
}

double alpha_sup_norm(const TorusBackground& bg, const TwistForm& alpha) {
  const HMat& Li = bg.chol_inv();
  const HermitianField f = alpha.field(bg);
  double m = 0.0;
  for (std::size_t p = 0; p < f.num_points(); ++p) m = std::max(m, (Li * f.at(p) * Li.adjoint()).norm());
  return m;
}

}  // namespace khess
