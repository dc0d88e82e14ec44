#include "khess/coupled_solver.hpp"

#include "khess/energy.hpp"
#include "khess/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace khess {

namespace {

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double mean_of(const std::vector<double>& v) { return compensated_sum(v) / static_cast<double>(v.size()); }

/// Mask of the resolved modes: everything except the constant and the modes
/// on a Nyquist plane, where first derivatives vanish.
std::vector<double> resolved_mask(const TorusBackground& bg) {
  const Spectral& sp = bg.spectral();
  std::vector<double> mask(sp.num_modes(), 1.0);
  mask[0] = 0.0;
  for (std::size_t m = 1; m < mask.size(); ++m)
    for (int a = 0; a < sp.rank(); ++a)
      if (sp.nyquist(m, a)) mask[m] = 0.0;
  return mask;
}

HMat average_G(const HessianState& st) {
  const int n = st.n();
  HMat acc = HMat::Zero(n, n);
  for (std::size_t p = 0; p < st.num_points(); ++p) acc += st.G().at(p);
  return acc / static_cast<double>(st.num_points());
}

/// S(phi) = Delta_G F + alpha_bar - tr_G alpha with F = log ratio(phi).
PotentialField coupled_residual(const HessianState& st, const HermitianField& alpha) {
  PotentialField s = laplace_G(st, st.f());
  s += alpha_bar(st, alpha);
  s -= trace_G(st, alpha);
  return s;
}

struct Attempt {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::string reason;
};

/// Newton for S(phi) = 0 at a fixed alpha. phi is updated in place only by
/// accepted steps; every accepted iterate is admissible.
Attempt newton_coupled(PotentialField& phi, const HermitianField& alpha, const SolveConfig& cfg) {
  const auto& bg = *phi.background;
  const int k = cfg.k;
  Attempt out;
  const std::vector<double> mask = resolved_mask(bg);
  const auto project = [&](const Vec& v) { return apply_symbol(PotentialField(phi.background, v), mask).data; };
  HessianState st = evaluate_state(phi, k);
  PotentialField S = coupled_residual(st, alpha);
  std::vector<double> rhs = project(S.data);
  for (;;) {
    out.residual = sup_abs(rhs);
    if (out.residual <= cfg.tol) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= cfg.max_newton) {
      out.reason = "newton iteration limit";
      return out;
    }
    ++out.iterations;

    const double merit = norm2(rhs);
    Vec b = rhs;
    for (double& x : b) x = -x;

    std::vector<double> sym = constant_laplacian_symbol(bg, average_G(st));
    for (double& s : sym) s *= s;
    const LinearOp precond = [&](const Vec& r) {
      return project(solve_symbol(PotentialField(phi.background, r), sym).data);
    };
    const double phi_scale = std::max(1.0, phi.sup_abs());
    const LinearOp J = [&](const Vec& v) {
      const double vmax = sup_abs(v);
      if (vmax == 0.0) return Vec(v.size(), 0.0);
      PotentialField dv(phi.background, v);
      double eta = cfg.fd_eta * phi_scale / vmax;
      for (int tries = 0;; ++tries) {
        try {
          PotentialField plus = phi, minus = phi;
          plus.axpy(eta, dv);
          minus.axpy(-eta, dv);
          const PotentialField sp = coupled_residual(evaluate_state(plus, k), alpha);
          const PotentialField sm = coupled_residual(evaluate_state(minus, k), alpha);
          Vec w(v.size());
          for (std::size_t p = 0; p < w.size(); ++p) w[p] = (sp.data[p] - sm.data[p]) / (2 * eta);
          return project(w);
        } catch (const ConeError&) {
          if (tries >= 8) throw;
          eta *= 0.25;
        }
      }
    };
    Vec delta(b.size(), 0.0);
    const GmresResult g = gmres(J, precond, b, delta, cfg.gmres_rtol, cfg.gmres_restart, cfg.gmres_max_iter);
    if (cfg.log) {
      std::ostringstream msg;
      msg << "newton " << out.iterations << " residual " << out.residual << " gmres " << g.iterations << " "
          << g.residual;
      cfg.log(msg.str());
    }
    if (!g.converged && g.residual > 0.1) {
      out.reason = "linear solve failed";
      return out;
    }
    const PotentialField step(phi.background, project(delta));

    bool accepted = false;
    for (double s = 1.0; s >= 1.0 / 1024; s *= 0.5) {
      PotentialField trial = phi;
      trial.axpy(s, step);
      try {
        HessianState tst = evaluate_state(trial, k);
        PotentialField tS = coupled_residual(tst, alpha);
        std::vector<double> proj = project(tS.data);
        if (norm2(proj) < (1.0 - 1e-4 * s) * merit) {
          phi = std::move(trial);
          st = std::move(tst);
          S = std::move(tS);
          rhs = std::move(proj);
          accepted = true;
          break;
        }
      } catch (const ConeError&) {
        // Step leaves the cone; halve.
      }
    }
    if (!accepted) {
      out.residual = sup_abs(rhs);
      out.converged = out.residual <= cfg.tol;
      if (!out.converged) out.reason = "line search stalled";
      return out;
    }
  }
}

}  // namespace

std::pair<double, double> coupled_residuals(const PotentialField& phi, const PotentialField& F,
                                            const TwistForm& alpha, int k) {
  require_same_grid(phi, F, "coupled_residuals");
  const HessianState st = evaluate_state(phi, k);
  double r1 = 0.0;
  for (std::size_t p = 0; p < phi.size(); ++p) r1 = std::max(r1, std::abs(st.ratio().data[p] - std::exp(F.data[p])));
  const HermitianField a = alpha.field(*phi.background);
  PotentialField s = laplace_G(st, F);
  s += alpha_bar(st, a);
  s -= trace_G(st, a);
  return {r1, s.sup_abs()};
}

CoupledSolution solve_coupled(const SolveConfig& cfg, const TwistForm& alpha,
                              const std::optional<PotentialField>& seed) {
  if (!cfg.background) throw DomainError("solve_coupled: missing background");
  const auto& bg = *cfg.background;
  if (cfg.k < 1 || cfg.k > bg.n()) throw DomainError("solve_coupled: k out of range");
  if (alpha.A0.rows() != bg.n() || alpha.A0.cols() != bg.n()) throw DomainError("solve_coupled: alpha has the wrong size");
  if (alpha.beta && !alpha.beta->background->same_grid(bg)) throw GridMismatch("solve_coupled: alpha grid mismatch");

  PotentialField phi = seed ? *seed : PotentialField(cfg.background);
  if (!phi.background->same_grid(bg)) throw GridMismatch("solve_coupled: seed grid mismatch");
  evaluate_state(phi, cfg.k);  // the seed must be admissible

  CoupledSolution sol;
  sol.alpha = alpha;
  sol.k = cfg.k;
  double t = 0.0;
  double dt = std::clamp(cfg.initial_step, cfg.min_step, 1.0);
  bool first = true;
  std::ostringstream trace;
  while (first || t < 1.0) {
    const double target = first ? 0.0 : std::min(1.0, t + dt);
    PotentialField trial = phi;
    Attempt a;
    try {
      a = newton_coupled(trial, alpha.scaled(target).field(bg), cfg);
    } catch (const ConeError& e) {
      a.reason = e.what();
    }
    sol.iterations += a.iterations;
    ContinuationRecord rec{target, 0.0, a.residual, a.iterations, a.converged};
    sol.continuation_trace.push_back(rec);
    trace << "t=" << target << " iters=" << a.iterations << " r2=" << a.residual
          << (a.converged ? " ok" : " fail: " + a.reason) << "\n";
    if (a.converged) {
      phi = std::move(trial);
      if (!first) {
        t = target;
        dt = std::min(2 * dt, 1.0);
      }
      first = false;
    } else {
      if (first) throw SolverError("solve_coupled: no solution at zero twist\n" + trace.str());
      dt *= 0.5;
      if (dt < cfg.min_step) throw SolverError("solve_coupled: continuation stalled\n" + trace.str());
    }
  }
  phi += -phi.sup();
  phi.role = FieldRole::phi;
  const HessianState st = evaluate_state(phi, cfg.k);
  sol.F = st.f();
  sol.F.role = FieldRole::F;
  sol.phi = std::move(phi);
  std::tie(sol.r1, sol.r2) = coupled_residuals(sol.phi, sol.F, alpha, cfg.k);
  if (!sol.continuation_trace.empty()) sol.continuation_trace.back().r1 = sol.r1;
  return sol;
}

TwistForm manufactured_twist(const PotentialField& phi_star, int k) {
  const HessianState st = evaluate_state(phi_star, k);
  const int n = phi_star.background->n();
  return TwistForm{HMat::Zero(n, n), st.f()};
}

PotentialField auxiliary_log_density(const PotentialField& F, int k) {
  const int n = F.background->n();
  const double c = static_cast<double>(n) / k;
  PotentialField e(F.background);
  for (std::size_t p = 0; p < F.size(); ++p) e.data[p] = c * F.data[p] + 0.5 * std::log1p(F.data[p] * F.data[p]);
  const double m = e.sup();
  std::vector<double> w(F.size());
  for (std::size_t p = 0; p < w.size(); ++p) w[p] = std::exp(e.data[p] - m);
  e += -(m + std::log(mean_of(w)));
  return e;
}

namespace {

PotentialField scaled_log_density(const PotentialField& logrho, double t) {
  PotentialField e = t * logrho;
  const double m = e.sup();
  std::vector<double> w(e.size());
  for (std::size_t p = 0; p < w.size(); ++p) w[p] = std::exp(e.data[p] - m);
  e += -(m + std::log(mean_of(w)));
  return e;
}

Attempt newton_ma(PotentialField& psi, const PotentialField& target, const MAConfig& cfg) {
  const auto& bg = *psi.background;
  const int n = bg.n();
  Attempt out;
  const std::vector<double> mask = resolved_mask(bg);
  const auto project = [&](const Vec& v) { return apply_symbol(PotentialField(psi.background, v), mask).data; };
  HessianState st = evaluate_state(psi, n);
  Vec rhs = project((st.f() - target).data);
  for (;;) {
    out.residual = sup_abs(rhs);
    if (out.residual <= cfg.tol) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= cfg.max_newton) {
      out.reason = "newton iteration limit";
      return out;
    }
    ++out.iterations;
    const double merit = norm2(rhs);
    Vec b = rhs;
    for (double& x : b) x = -x;
    const std::vector<double> sym = constant_laplacian_symbol(bg, average_G(st));
    const LinearOp precond = [&](const Vec& r) {
      return project(solve_symbol(PotentialField(psi.background, r), sym).data);
    };
    const LinearOp J = [&](const Vec& v) {
      return project(laplace_G(st, PotentialField(psi.background, v)).data);
    };
    Vec delta(b.size(), 0.0);
    gmres(J, precond, b, delta, cfg.gmres_rtol, 60, cfg.gmres_max_iter);
    const PotentialField step(psi.background, project(delta));
    bool accepted = false;
    for (double s = 1.0; s >= 1.0 / 1024; s *= 0.5) {
      PotentialField trial = psi;
      trial.axpy(s, step);
      try {
        HessianState tst = evaluate_state(trial, n);
        Vec proj = project((tst.f() - target).data);
        if (norm2(proj) < (1.0 - 1e-4 * s) * merit) {
          psi = std::move(trial);
          st = std::move(tst);
          rhs = std::move(proj);
          accepted = true;
          break;
        }
      } catch (const ConeError&) {
      }
    }
    if (!accepted) {
      out.residual = sup_abs(rhs);
      out.converged = out.residual <= cfg.tol;
      if (!out.converged) out.reason = "line search stalled";
      return out;
    }
  }
}

}  // namespace

MASolution solve_auxiliary_MA(const PotentialField& F, int k, const MAConfig& cfg) {
  const auto& bg = *F.background;
  if (k < 1 || k > bg.n()) throw DomainError("solve_auxiliary_MA: k out of range");
  const PotentialField logrho = auxiliary_log_density(F, k);
  MASolution sol;
  PotentialField psi(F.background);
  double t = 0.0;
  double dt = std::clamp(cfg.initial_step, cfg.min_step, 1.0);
  std::ostringstream trace;
  while (t < 1.0) {
    const double target = std::min(1.0, t + dt);
    PotentialField trial = psi;
    Attempt a = newton_ma(trial, scaled_log_density(logrho, target), cfg);
    sol.iterations += a.iterations;
    trace << "t=" << target << " iters=" << a.iterations << " r=" << a.residual
          << (a.converged ? " ok" : " fail: " + a.reason) << "\n";
    if (a.converged) {
      psi = std::move(trial);
      t = target;
      dt = std::min(2 * dt, 1.0);
    } else {
      dt *= 0.5;
      if (dt < cfg.min_step) throw SolverError("solve_auxiliary_MA: continuation stalled\n" + trace.str());
    }
  }
  psi += -psi.sup();
  psi.role = FieldRole::psi;
  const HessianState st = evaluate_state(psi, bg.n());
  const PotentialField R = st.f() - logrho;
  sol.residual = R.sup_abs();
  sol.resolved_residual = apply_symbol(R, resolved_mask(bg)).sup_abs();
  sol.mass = integrate(st.ratio());
  sol.psi = std::move(psi);
  return sol;
}

EstimateReport estimate_harness(const CoupledSolution& sol, double epsilon, const MAConfig& ma) {
  const auto& bg = *sol.phi.background;
  EstimateReport r;
  r.epsilon = epsilon;
  r.lambda_used = 10.0 + alpha_sup_norm(bg, sol.alpha);
  const EntropyValues e = entropy_A(sol.F, bg.n(), sol.k);
  r.entropy = e.entropy;
  r.A_F = e.A_F;
  r.sup_abs_F = sol.F.sup_abs();
  r.sup_F = sol.F.sup();
  r.inf_F = sol.F.inf();
  r.sup_abs_phi = sol.phi.sup_abs();
  const MASolution aux = solve_auxiliary_MA(sol.F, sol.k, ma);
  r.ma_residual = aux.residual;
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < sol.phi.size(); ++p) {
    m = std::max(m, sol.F.data[p] + epsilon * aux.psi.data[p] - r.lambda_used * sol.phi.data[p]);
  }
  r.lemma2_max = m;
  return r;
}

double detG_field_check(const PotentialField& phi, int k) {
  const HessianState st = evaluate_state(phi, k);
  const int n = st.n();
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < st.num_points(); ++p) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= st.d(p, i);
    m = std::min(m, prod * std::pow(st.sigma(p, k), static_cast<double>(n) / k));
  }
  return m;
}

}  // namespace khess
