#include "khess/energy.hpp"

#include "khess/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace khess {

namespace {

double factorial(int m) {
  double r = 1.0;
  for (int i = 2; i <= m; ++i) r *= i;
  return r;
}

HermitianField ricci_hat(const HessianState& state, const HermitianField* alpha) {
  HermitianField r = generalized_ricci(state);
  if (alpha) r += *alpha;
  return r;
}

EnergyReport mu_impl(const PotentialField& phi, double lambda, int k, const HermitianField* alpha) {
  const auto& bg = *phi.background;
  const HessianState state = evaluate_state(phi, k);
  const double V = bg.volume();
  const std::size_t np = phi.size();

  EnergyReport r;
  r.lambda = lambda;
  {
    std::vector<double> v(np);
    for (std::size_t p = 0; p < np; ++p) v[p] = (state.f().data[p] + lambda * phi.data[p]) * state.ratio().data[p];
    r.entropy_term = integrate(bg, v) / V;
  }
  std::vector<PotentialField> s;
  for (int m = 0; m <= k; ++m) s.push_back(state.wedge_ratio(m));
  {
    std::vector<double> v(np, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
      double acc = 0.0;
      for (int m = 0; m <= k; ++m) acc += s[static_cast<std::size_t>(m)].data[p];
      v[p] = phi.data[p] * acc;
    }
    r.j_term = lambda / (V * (k + 1)) * integrate(bg, v);
  }
  {
    std::vector<double> v(np, 0.0);
    for (int m = 0; m < k; ++m) {
      PotentialField a(phi.background);
      if (alpha) a = wedge_one_form(state, *alpha, m);
      for (std::size_t p = 0; p < np; ++p) v[p] += phi.data[p] * (a.data[p] - lambda * s[static_cast<std::size_t>(m)].data[p]);
    }
    r.twist_term = integrate(bg, v) / V;
  }
  r.mu_k = r.entropy_term - r.j_term - r.twist_term;
  r.A_F = entropy_A(state.f(), bg.n(), k).A_F;
  r.sup_phi = phi.sup();
  r.sup_F = state.f().sup();
  return r;
}

void require_path(const PotentialPath& path, std::size_t min_size, const char* where) {
  if (path.size() < min_size) throw DomainError(std::string(where) + ": path too short");
  if (!(path.h > 0.0)) throw DomainError(std::string(where) + ": step must be positive");
}

void finish(VariationReport& r) {
  for (std::size_t i = 0; i < r.formula.size(); ++i) {
    const double res = std::abs(r.difference[i] - r.formula[i]);
    r.residuals.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
    r.max_relative = std::max(r.max_relative, res / std::max(std::abs(r.formula[i]), 1e-300));
  }
}

}  // namespace

EnergyReport mu_k(const PotentialField& phi, double lambda, int k) {
  return mu_impl(phi, lambda, k, nullptr);
}

double alpha_bar_cohomological(const TorusBackground& bg, const TwistForm& alpha, int k) {
  return static_cast<double>(k) / bg.n() * (bg.omega_inv() * alpha.A0).trace().real();
}

EnergyReport mu_k_twisted(const PotentialField& phi, const TwistForm& alpha, int k,
                          std::optional<double> lambda) {
  const auto& bg = *phi.background;
  const double lam = lambda ? *lambda : alpha_bar_cohomological(bg, alpha, k) / k;
  const HermitianField a = alpha.field(bg);
  return mu_impl(phi, lam, k, &a);
}

double first_variation(const HessianState& state, const PotentialField& phi_dot, double lambda,
                       const HermitianField* alpha) {
  const auto& bg = *state.background();
  const PotentialField tr = trace_G(state, ricci_hat(state, alpha));
  std::vector<double> v(state.num_points());
  for (std::size_t p = 0; p < v.size(); ++p) {
    v[p] = phi_dot.data[p] * (tr.data[p] - lambda * state.k()) * state.ratio().data[p];
  }
  return -integrate(bg, v) / bg.volume();
}

double mu_k_line_integral(const PotentialField& phi, const TwistForm& alpha, double lambda, int k,
                          int intervals) {
  if (intervals < 2 || intervals % 2 != 0) throw DomainError("mu_k_line_integral: intervals must be even");
  const auto& bg = *phi.background;
  const HermitianField a = alpha.field(bg);
  const double h = 1.0 / intervals;
  double acc = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double s = i * h;
    const HessianState st = evaluate_state(s * phi, k);
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * first_variation(st, phi, lambda, &a);
  }
  return acc * h / 3.0;
}

PotentialField wedge_two_forms(const HessianState& state, const HermitianField& B,
                               const HermitianField& C, int a) {
  const int n = state.n();
  if (a < 0 || a > n - 2) throw DomainError("wedge_two_forms: degree out of range");
  const double coef = factorial(a) * factorial(n - 2 - a) / factorial(n);
  PotentialField out(state.background());
  parallel_for(state.num_points(), [&](std::size_t p) {
    const HMat b = frame_components(state, p, B.at(p));
    const HMat c = frame_components(state, p, C.at(p));
    const auto lam = state.lambda(p);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double pair = (b(i, i) * c(j, j) - b(i, j) * c(j, i)).real();
        acc += pair * sigma_raw(a, lam, i, j);
      }
    out.data[p] = coef * acc;
  });
  return out;
}

SecondVariationTerms second_variation(const HessianState& state, const PotentialField& phi_dot,
                                      const PotentialField& phi_ddot, double lambda,
                                      const HermitianField* alpha) {
  const auto& bg = *state.background();
  const double V = bg.volume();
  const int k = state.k();
  const std::size_t np = state.num_points();
  const HermitianField ric = ricci_hat(state, alpha);
  const PotentialField tr = trace_G(state, ric);
  const PotentialField grad2 = grad_norm_G(state, phi_dot);
  const PotentialField lap = laplace_G(state, phi_dot);
  const PotentialField& s = state.ratio();

  SecondVariationTerms t;
  std::vector<double> v(np);
  for (std::size_t p = 0; p < np; ++p) {
    v[p] = (phi_ddot.data[p] - grad2.data[p]) * (tr.data[p] - lambda * k) * s.data[p];
  }
  t.geodesic_term = -integrate(bg, v) / V;
  for (std::size_t p = 0; p < np; ++p) v[p] = lap.data[p] * lap.data[p] * s.data[p];
  t.laplacian_term = integrate(bg, v) / V;
  if (k >= 2) {
    const GradientField du = complex_gradient(phi_dot);
    HermitianField B(state.n(), np);
    for (std::size_t p = 0; p < np; ++p) {
      const CVec u = du.at(p);
      B.set(p, u * u.adjoint());
    }
    const PotentialField w = wedge_two_forms(state, B, ric, k - 2);
    t.mixed_term = static_cast<double>(k) * (k - 1) * integrate(w) / V;
  }
  for (std::size_t p = 0; p < np; ++p) v[p] = grad2.data[p] * tr.data[p] * s.data[p];
  t.gradient_term = -integrate(bg, v) / V;
  return t;
}

PotentialPath PotentialPath::sample(const std::function<PotentialField(double)>& path, double t0,
                                    double h, int count) {
  PotentialPath out;
  out.t0 = t0;
  out.h = h;
  for (int i = 0; i < count; ++i) out.samples.push_back(path(t0 + i * h));
  return out;
}

VariationReport verify_first_variation(const PotentialPath& path, double lambda, int k,
                                       const HermitianField* alpha) {
  require_path(path, 3, "verify_first_variation");
  VariationReport r;
  std::vector<double> mu;
  for (const auto& s : path.samples) mu.push_back(mu_impl(s, lambda, k, alpha).mu_k);
  const double h = path.h;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    r.difference.push_back((mu[i + 1] - mu[i - 1]) / (2 * h));
    PotentialField dot = path.samples[i + 1] - path.samples[i - 1];
    dot *= 1.0 / (2 * h);
    r.formula.push_back(first_variation(evaluate_state(path.samples[i], k), dot, lambda, alpha));
  }
  finish(r);
  return r;
}

VariationReport verify_second_variation(const PotentialPath& path, double lambda, int k,
                                        const HermitianField* alpha) {
  require_path(path, 3, "verify_second_variation");
  VariationReport r;
  std::vector<double> mu;
  for (const auto& s : path.samples) mu.push_back(mu_impl(s, lambda, k, alpha).mu_k);
  const double h = path.h;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    r.difference.push_back((mu[i + 1] - 2 * mu[i] + mu[i - 1]) / (h * h));
    PotentialField dot = path.samples[i + 1] - path.samples[i - 1];
    dot *= 1.0 / (2 * h);
    PotentialField ddot = path.samples[i + 1] - 2.0 * path.samples[i];
    ddot += path.samples[i - 1];
    ddot *= 1.0 / (h * h);
    r.formula.push_back(second_variation(evaluate_state(path.samples[i], k), dot, ddot, lambda, alpha).total());
  }
  finish(r);
  return r;
}

double RefinementReport::min_order() const {
  if (order.empty()) return std::numeric_limits<double>::quiet_NaN();
  return *std::min_element(order.begin(), order.end());
}

RefinementReport variation_refinement(const std::function<PotentialField(double)>& path, double t,
                                      double h0, int levels, double lambda, int k, int which,
                                      const HermitianField* alpha) {
  if (which != 1 && which != 2) throw DomainError("variation_refinement: order must be 1 or 2");
  if (levels < 2) throw DomainError("variation_refinement: need at least two levels");
  RefinementReport out;
  double h = h0;
  for (int l = 0; l < levels; ++l, h *= 0.5) {
    const PotentialPath p = PotentialPath::sample(path, t - h, h, 3);
    const VariationReport r = which == 1 ? verify_first_variation(p, lambda, k, alpha)
                                         : verify_second_variation(p, lambda, k, alpha);
    out.h.push_back(h);
    out.residual.push_back(r.max_residual);
    out.relative.push_back(r.max_relative);
  }
  for (std::size_t l = 0; l + 1 < out.residual.size(); ++l) {
    out.order.push_back(std::log2(out.residual[l] / out.residual[l + 1]));
  }
  return out;
}

EntropyValues entropy_A(const PotentialField& F, int n, int k) {
  const auto& bg = *F.background;
  const double c = static_cast<double>(n) / k;
  double m = -std::numeric_limits<double>::infinity();
  for (double x : F.data) m = std::max(m, c * x);
  std::vector<double> a(F.size()), e(F.size());
  for (std::size_t p = 0; p < F.size(); ++p) {
    const double w = std::exp(c * F.data[p] - m);
    a[p] = w * std::sqrt(F.data[p] * F.data[p] + 1.0);
    e[p] = w * std::abs(F.data[p]);
  }
  EntropyValues out;
  const double ia = integrate(bg, a);
  out.log_A_F = m + std::log(ia);
  out.A_F = std::exp(out.log_A_F);
  out.entropy = std::exp(m) * integrate(bg, e);
  return out;
}

}  // namespace khess
