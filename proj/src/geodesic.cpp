#include "khess/geodesic.hpp"

#include "khess/exact.hpp"
#include "khess/krylov.hpp"
#include "khess/symcone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace khess {

namespace {

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

PotentialField product(const PotentialField& a, const PotentialField& b) {
  PotentialField out = a;
  for (std::size_t p = 0; p < out.size(); ++p) out.data[p] *= b.data[p];
  return out;
}

void require_path(const PotentialPath& u, const char* where) {
  if (u.size() < 3) throw DomainError(std::string(where) + ": path needs at least 3 samples");
  if (!(u.h > 0.0)) throw DomainError(std::string(where) + ": path step must be positive");
}

PotentialField central_first(const PotentialPath& u, std::size_t i) {
  PotentialField d = u.samples[i + 1] - u.samples[i - 1];
  d *= 1.0 / (2.0 * u.h);
  return d;
}

PotentialField central_second(const PotentialPath& u, std::size_t i) {
  PotentialField d = u.samples[i + 1] + u.samples[i - 1];
  d.axpy(-2.0, u.samples[i]);
  d *= 1.0 / (u.h * u.h);
  return d;
}

/// Space-time unknowns: the interior slices u_1 .. u_{M-1}, concatenated.
struct SpaceTime {
  BackgroundPtr bg;
  int M = 0;
  int k = 1;
  double eps = 0.0;
  PotentialField phi0, phi1;
  std::vector<double> lap_symbol;  ///< symbol of Delta_omega

  [[nodiscard]] std::size_t npts() const { return bg->num_points(); }
  [[nodiscard]] double h() const { return 1.0 / M; }

  [[nodiscard]] PotentialField linear(int j) const {
    const double t = static_cast<double>(j) / M;
    PotentialField l = (1.0 - t) * phi0;
    l.axpy(t, phi1);
    return l;
  }

  [[nodiscard]] PotentialPath to_path(const Vec& x) const {
    PotentialPath path;
    path.t0 = 0.0;
    path.h = h();
    path.samples.reserve(static_cast<std::size_t>(M + 1));
    path.samples.push_back(phi0);
    for (int j = 1; j < M; ++j) {
      const auto first = x.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j - 1) * npts());
      path.samples.emplace_back(bg, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(npts())));
    }
    path.samples.push_back(phi1);
    return path;
  }

  /// u'' - |du'|^2_G + eps Delta_omega (u - l) at every interior slice.
  [[nodiscard]] Vec residual(const Vec& x) const {
    const PotentialPath path = to_path(x);
    Vec out(static_cast<std::size_t>(M - 1) * npts());
    for (int j = 1; j < M; ++j) {
      const auto js = static_cast<std::size_t>(j);
      const HessianState st = evaluate_state(path.samples[js], k);
      PotentialField r = central_second(path, js);
      r -= grad_norm_G(st, central_first(path, js));
      if (eps != 0.0) r.axpy(eps, apply_symbol(path.samples[js] - linear(j), lap_symbol));
      std::copy(r.data.begin(), r.data.end(), out.begin() + static_cast<std::ptrdiff_t>((js - 1) * npts()));
    }
    return out;
  }

  /// Inverse of D_tt + eps Delta_omega with homogeneous Dirichlet data in t,
  /// one tridiagonal solve per spatial Fourier mode.
  [[nodiscard]] Vec precondition(const Vec& r) const {
    const Spectral& sp = bg->spectral();
    const std::size_t modes = sp.num_modes();
    const auto J = static_cast<std::size_t>(M - 1);
    std::vector<std::vector<cd>> hat(J);
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> slice(r.begin() + static_cast<std::ptrdiff_t>(j * npts()),
                                r.begin() + static_cast<std::ptrdiff_t>((j + 1) * npts()));
      hat[j] = sp.forward(slice);
    }
    const double ih2 = 1.0 / (h() * h());
    std::vector<double> c(J);
    std::vector<cd> d(J);
    for (std::size_t m = 0; m < modes; ++m) {
      const double diag = -2.0 * ih2 + eps * lap_symbol[m];
      // Thomas algorithm with constant off-diagonals ih2.
      c[0] = ih2 / diag;
      d[0] = hat[0][m] / diag;
      for (std::size_t j = 1; j < J; ++j) {
        const double denom = diag - ih2 * c[j - 1];
        c[j] = ih2 / denom;
        d[j] = (hat[j][m] - ih2 * d[j - 1]) / denom;
      }
      hat[J - 1][m] = d[J - 1];
      for (std::size_t j = J - 1; j-- > 0;) hat[j][m] = d[j] - c[j] * hat[j + 1][m];
    }
    Vec out(r.size());
    for (std::size_t j = 0; j < J; ++j) {
      const std::vector<double> back = sp.backward(hat[j]);
      std::copy(back.begin(), back.end(), out.begin() + static_cast<std::ptrdiff_t>(j * npts()));
    }
    return out;
  }
};

struct Attempt {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::string reason;
};

Attempt newton_geodesic(const SpaceTime& st, Vec& x, const GeodesicConfig& cfg) {
  Attempt out;
  Vec R;
  try {
    R = st.residual(x);
  } catch (const ConeError& e) {
    out.reason = std::string("inadmissible start: ") + e.what();
    return out;
  }
  for (;;) {
    out.residual = sup_abs(R);
    if (out.residual <= cfg.tol) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= cfg.max_newton) {
      out.reason = "newton iteration limit";
      return out;
    }
    ++out.iterations;
    const double merit = norm2(R);
    Vec b = R;
    for (double& v : b) v = -v;
    const double x_scale = std::max(1.0, sup_abs(x));
    const LinearOp J = [&](const Vec& v) {
      const double vmax = sup_abs(v);
      if (vmax == 0.0) return Vec(v.size(), 0.0);
      double eta = cfg.fd_eta * x_scale / vmax;
      for (int tries = 0;; ++tries) {
        try {
          Vec plus = x, minus = x;
          for (std::size_t q = 0; q < x.size(); ++q) {
            plus[q] += eta * v[q];
            minus[q] -= eta * v[q];
          }
          const Vec rp = st.residual(plus);
          const Vec rm = st.residual(minus);
          Vec w(v.size());
          for (std::size_t q = 0; q < w.size(); ++q) w[q] = (rp[q] - rm[q]) / (2.0 * eta);
          return w;
        } catch (const ConeError&) {
          if (tries >= 8) throw;
          eta *= 0.25;
        }
      }
    };
    const LinearOp P = [&](const Vec& r) { return st.precondition(r); };
    Vec delta(b.size(), 0.0);
    GmresResult g;
    try {
      g = gmres(J, P, b, delta, cfg.gmres_rtol, cfg.gmres_restart, cfg.gmres_max_iter);
    } catch (const ConeError& e) {
      out.reason = std::string("jacobian probe left the cone: ") + e.what();
      return out;
    }
    if (cfg.log) {
      std::ostringstream msg;
      msg << "geodesic eps " << st.eps << " newton " << out.iterations << " residual " << out.residual
          << " gmres " << g.iterations << " " << g.residual;
      cfg.log(msg.str());
    }
    if (!g.converged && g.residual > 0.1) {
      out.reason = "linear solve failed";
      return out;
    }
    bool accepted = false;
    for (double s = 1.0; s >= 1.0 / 1024; s *= 0.5) {
      Vec trial = x;
      for (std::size_t q = 0; q < x.size(); ++q) trial[q] += s * delta[q];
      try {
        Vec tR = st.residual(trial);
        if (norm2(tR) < (1.0 - 1e-4 * s) * merit) {
          x = std::move(trial);
          R = std::move(tR);
          accepted = true;
          break;
        }
      } catch (const ConeError&) {
        // Some slice leaves the cone; halve.
      }
    }
    if (!accepted) {
      out.residual = sup_abs(R);
      out.converged = out.residual <= cfg.tol;
      if (!out.converged) out.reason = "line search stalled";
      return out;
    }
  }
}

}  // namespace

double metric_inner(const HessianState& state, const PotentialField& a, const PotentialField& b) {
  require_same_grid(a, b, "metric_inner");
  if (!a.background->same_grid(*state.background())) throw GridMismatch("metric_inner: state on another grid");
  return integrate(product(product(a, b), state.ratio()));
}

double metric_inner(const TangentVector& a, const TangentVector& b, int k) {
  require_same_grid(a.base, b.base, "metric_inner");
  if (a.base.data != b.base.data) throw GridMismatch("metric_inner: tangent vectors at different bases");
  return metric_inner(evaluate_state(a.base, k), a.value, b.value);
}

PotentialField connection_D(const HessianState& state, const PotentialField& u_dot, const PotentialField& phi_dot,
                            const PotentialField& phi) {
  require_same_grid(phi_dot, phi, "connection_D");
  PotentialField out = phi_dot;
  out -= grad_pairing_G(state, u_dot, phi);
  return out;
}

PotentialField connection_along(const PotentialPath& u, const PotentialPath& phi, std::size_t i, int k) {
  require_path(u, "connection_along");
  if (phi.size() != u.size() || phi.h != u.h || phi.t0 != u.t0) {
    throw GridMismatch("connection_along: paths on different time grids");
  }
  if (i < 1 || i + 1 >= u.size()) throw DomainError("connection_along: sample must be interior");
  const HessianState st = evaluate_state(u.samples[i], k);
  return connection_D(st, central_first(u, i), central_first(phi, i), phi.samples[i]);
}

double geodesic_residual(const PotentialPath& u, int k) {
  require_path(u, "geodesic_residual");
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    const HessianState st = evaluate_state(u.samples[i], k);
    PotentialField r = central_second(u, i);
    r -= grad_norm_G(st, central_first(u, i));
    worst = std::max(worst, r.sup_abs());
  }
  return worst;
}

std::vector<double> path_energies(const PotentialPath& u, int k) {
  require_path(u, "path_energies");
  std::vector<double> e;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    const PotentialField v = central_first(u, i);
    e.push_back(metric_inner(evaluate_state(u.samples[i], k), v, v));
  }
  return e;
}

GeodesicPath solve_geodesic(const PotentialField& phi0, const PotentialField& phi1, double epsilon,
                            const GeodesicConfig& cfg) {
  require_same_grid(phi0, phi1, "solve_geodesic");
  if (!(epsilon > 0.0)) throw DomainError("solve_geodesic: epsilon must be positive");
  if (cfg.time_steps < 2) throw DomainError("solve_geodesic: need at least 2 time steps");
  if (!(cfg.eps_factor > 0.0 && cfg.eps_factor < 1.0)) throw DomainError("solve_geodesic: eps_factor must lie in (0, 1)");
  evaluate_state(phi0, cfg.k);
  evaluate_state(phi1, cfg.k);

  SpaceTime st;
  st.bg = phi0.background;
  st.M = cfg.time_steps;
  st.k = cfg.k;
  st.phi0 = phi0;
  st.phi1 = phi1;
  st.lap_symbol = constant_laplacian_symbol(*st.bg, st.bg->omega_inv());

  Vec x(static_cast<std::size_t>(st.M - 1) * st.npts());
  for (int j = 1; j < st.M; ++j) {
    const PotentialField l = st.linear(j);
    std::copy(l.data.begin(), l.data.end(), x.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j - 1) * st.npts()));
  }

  GeodesicPath out;
  double eps_done = 0.0;  // 0 until a first stage converges
  double eps_next = std::max(epsilon, cfg.eps_start);
  for (int stage = 0; stage < cfg.max_stages; ++stage) {
    st.eps = eps_next;
    Vec trial = x;
    const Attempt a = newton_geodesic(st, trial, cfg);
    out.iterations += a.iterations;
    if (a.converged) {
      x = std::move(trial);
      eps_done = eps_next;
      const PotentialPath path = st.to_path(x);
      out.trace.push_back({eps_done, a.residual, geodesic_residual(path, cfg.k), a.iterations});
      if (eps_done <= epsilon) break;
      eps_next = std::max(epsilon, eps_done * cfg.eps_factor);
      continue;
    }
    if (eps_done == 0.0) {
      // Failure at the first stage: start from a larger eps.
      eps_next *= 4.0;
    } else {
      eps_next = std::sqrt(eps_done * eps_next);
      if (eps_next > eps_done * (1.0 - 1e-3)) {
        throw GeodesicError("solve_geodesic: continuation stalled at eps = " + std::to_string(eps_done) + " (" +
                            a.reason + ")");
      }
    }
  }
  if (eps_done == 0.0 || eps_done > epsilon) {
    throw GeodesicError("solve_geodesic: continuation did not reach the requested eps");
  }
  out.u = st.to_path(x);
  out.epsilon = eps_done;
  out.equation_residual = sup_abs(st.residual(x));
  out.residual = geodesic_residual(out.u, cfg.k);
  out.energies = path_energies(out.u, cfg.k);
  return out;
}

CurvatureTerms curvature_terms(const HessianState& state, const PotentialField& X, const PotentialField& Y) {
  require_same_grid(X, Y, "curvature_terms");
  if (!X.background->same_grid(*state.background())) throw GridMismatch("curvature_terms: state on another grid");
  const int n = state.n();
  const int k = state.k();
  const GradientField dX = complex_gradient(X);
  const GradientField dY = complex_gradient(Y);
  std::vector<double> pair(state.num_points()), bracket(state.num_points());
  for (std::size_t p = 0; p < state.num_points(); ++p) {
    const CVec x = frame_components(state, p, dX.at(p));
    const CVec y = frame_components(state, p, dY.at(p));
    const auto lam = state.lambda(p);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double c = lemma22_coefficient<double>(k, i, j, lam);
        acc += c * std::norm(x(i) * y(j) - x(j) * y(i));
      }
    cd q = 0.0;
    for (int i = 0; i < n; ++i) q += state.d(p, i) * x(i) * std::conj(y(i));
    pair[p] = acc;
    bracket[p] = -state.sigma(p, k) * q.imag() * q.imag();
  }
  const double norm = 1.0 / binomial(n, k);
  return {norm * integrate(*state.background(), pair), norm * integrate(*state.background(), bracket)};
}

double curvature_form(const PotentialField& u, const PotentialField& X, const PotentialField& Y, int k) {
  return curvature_terms(evaluate_state(u, k), X, Y).total();
}

double curvature_scale(const HessianState& state, const PotentialField& X, const PotentialField& Y) {
  require_same_grid(X, Y, "curvature_scale");
  return integrate(product(product(grad_norm_G(state, X), grad_norm_G(state, Y)), state.ratio()));
}

double curvature_bruteforce(const PotentialField& u, const PotentialField& X, const PotentialField& Y, int k,
                            double h) {
  require_same_grid(u, X, "curvature_bruteforce");
  require_same_grid(u, Y, "curvature_bruteforce");
  if (!(h > 0.0)) throw DomainError("curvature_bruteforce: step must be positive");
  const HessianState s0 = evaluate_state(u, k);
  for (int tries = 0;; ++tries) {
    try {
      PotentialField ut_p = u, ut_m = u, us_p = u, us_m = u;
      ut_p.axpy(h, X);
      ut_m.axpy(-h, X);
      us_p.axpy(h, Y);
      us_m.axpy(-h, Y);
      // W = D_s u_s = -Q(Y, Y) along t; Z = D_t u_s = -Q(X, Y) along s.
      PotentialField dW = grad_pairing_G(evaluate_state(ut_m, k), Y, Y) - grad_pairing_G(evaluate_state(ut_p, k), Y, Y);
      dW *= 1.0 / (2.0 * h);
      PotentialField dZ = grad_pairing_G(evaluate_state(us_m, k), X, Y) - grad_pairing_G(evaluate_state(us_p, k), X, Y);
      dZ *= 1.0 / (2.0 * h);
      PotentialField W0 = grad_pairing_G(s0, Y, Y);
      W0 *= -1.0;
      PotentialField Z0 = grad_pairing_G(s0, X, Y);
      Z0 *= -1.0;
      PotentialField R = dW;
      R -= grad_pairing_G(s0, X, W0);
      R -= dZ;
      R += grad_pairing_G(s0, Y, Z0);
      return metric_inner(s0, R, X);
    } catch (const ConeError&) {
      if (tries >= 8) throw;
      h *= 0.25;
    }
  }
}

int curvature_exact_sign(const HessianState& state, const PotentialField& X, const PotentialField& Y) {
  require_same_grid(X, Y, "curvature_exact_sign");
  const int n = state.n();
  const int k = state.k();
  const GradientField dX = complex_gradient(X);
  const GradientField dY = complex_gradient(Y);
  int worst = -1;
  for (std::size_t p = 0; p < state.num_points(); ++p) {
    const CVec xc = frame_components(state, p, dX.at(p));
    const CVec yc = frame_components(state, p, dY.at(p));
    const auto lam_d = state.lambda(p);
    const std::vector<mpq_class> lam = exact::to_rational(lam_d);
    std::vector<mpq_class> xr, xi, yr, yi;
    for (int i = 0; i < n; ++i) {
      xr.push_back(exact::to_rational(xc(i).real()));
      xi.push_back(exact::to_rational(xc(i).imag()));
      yr.push_back(exact::to_rational(yc(i).real()));
      yi.push_back(exact::to_rational(yc(i).imag()));
    }
    const std::span<const mpq_class> ls(lam);
    const mpq_class sk = sigma_raw<mpq_class>(k, ls);
    mpq_class total = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const auto I = static_cast<std::size_t>(i), J = static_cast<std::size_t>(j);
        // X_i Y_j - X_j Y_i
        const mpq_class re = xr[I] * yr[J] - xi[I] * yi[J] - xr[J] * yr[I] + xi[J] * yi[I];
        const mpq_class im = xr[I] * yi[J] + xi[I] * yr[J] - xr[J] * yi[I] - xi[J] * yr[I];
        total += lemma22_coefficient<mpq_class>(k, i, j, ls) * (re * re + im * im);
      }
    mpq_class imq = 0;
    for (int i = 0; i < n; ++i) {
      const auto I = static_cast<std::size_t>(i);
      // Im(X_i conj(Y_i)) = xi yr - xr yi, weighted by sigma_{k-1,i} / sigma_k.
      imq += sigma_raw<mpq_class>(k - 1, ls, i) / sk * (xi[I] * yr[I] - xr[I] * yi[I]);
    }
    total -= sk * imq * imq;
    worst = std::max(worst, exact::sign(total));
  }
  return worst;
}

}  // namespace khess
