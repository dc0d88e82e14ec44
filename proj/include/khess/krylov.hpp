// Restarted GMRES with right preconditioning on plain double vectors.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace khess {

using Vec = std::vector<double>;
using LinearOp = std::function<Vec(const Vec&)>;

struct GmresResult {
  int iterations = 0;
  double residual = 0.0;  ///< final ||b - A x|| / ||b||
  bool converged = false;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Solves A x = b starting from x. `precond` applies M^{-1}; the iteration
/// runs on A M^{-1} y = b, x = M^{-1} y, so the monitored residual is the
/// true residual.
inline GmresResult gmres(const LinearOp& A, const LinearOp& precond, const Vec& b, Vec& x,
                         double rtol, int restart = 40, int max_iter = 400) {
  GmresResult res;
  const std::size_t N = b.size();
  const double bnorm = norm2(b);
  if (x.size() != N) x.assign(N, 0.0);
  if (bnorm == 0.0) {
    x.assign(N, 0.0);
    res.converged = true;
    return res;
  }
  const int m = restart;
  while (res.iterations < max_iter) {
    Vec r = A(x);
    for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - r[i];
    double beta = norm2(r);
    res.residual = beta / bnorm;
    if (res.residual <= rtol) {
      res.converged = true;
      return res;
    }
    std::vector<Vec> V(1, r);
    for (double& v : V[0]) v /= beta;
    std::vector<Vec> Z;
    std::vector<std::vector<double>> H(static_cast<std::size_t>(m + 1), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
    std::vector<double> g(static_cast<std::size_t>(m + 1), 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < m && res.iterations < max_iter; ++j) {
      ++res.iterations;
      Z.push_back(precond(V[static_cast<std::size_t>(j)]));
      Vec w = A(Z.back());
      for (int i = 0; i <= j; ++i) {
        const double h = dot(w, V[static_cast<std::size_t>(i)]);
        H[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = h;
        for (std::size_t q = 0; q < N; ++q) w[q] -= h * V[static_cast<std::size_t>(i)][q];
      }
      const double hn = norm2(w);
      H[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(j)] = hn;
      for (int i = 0; i < j; ++i) {
        const double a = H[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const double c = H[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)];
        H[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cs[static_cast<std::size_t>(i)] * a + sn[static_cast<std::size_t>(i)] * c;
        H[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j)] = -sn[static_cast<std::size_t>(i)] * a + cs[static_cast<std::size_t>(i)] * c;
      }
      const double a = H[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
      const double c = H[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(j)];
      const double rr = std::hypot(a, c);
      cs[static_cast<std::size_t>(j)] = rr == 0.0 ? 1.0 : a / rr;
      sn[static_cast<std::size_t>(j)] = rr == 0.0 ? 0.0 : c / rr;
      H[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = rr;
      H[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(j)] = 0.0;
      g[static_cast<std::size_t>(j + 1)] = -sn[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(j)] = cs[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      res.residual = std::abs(g[static_cast<std::size_t>(j + 1)]) / bnorm;
      if (hn == 0.0 || res.residual <= rtol) {
        ++j;
        break;
      }
      for (double& v : w) v /= hn;
      V.push_back(std::move(w));
    }
    // Back substitution for the least-squares coefficients.
    std::vector<double> y(static_cast<std::size_t>(j), 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[static_cast<std::size_t>(i)];
      for (int l = i + 1; l < j; ++l) s -= H[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * y[static_cast<std::size_t>(l)];
      y[static_cast<std::size_t>(i)] = s / H[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t q = 0; q < N; ++q) x[q] += y[static_cast<std::size_t>(i)] * Z[static_cast<std::size_t>(i)][q];
    if (res.residual <= rtol) {
      Vec rf = A(x);
      for (std::size_t i = 0; i < N; ++i) rf[i] = b[i] - rf[i];
      res.residual = norm2(rf) / bnorm;
      res.converged = res.residual <= 10.0 * rtol;
      if (res.converged) return res;
    }
  }
  return res;
}

}  // namespace khess
