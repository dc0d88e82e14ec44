// Elementary symmetric polynomials, the Gamma_k cone and the pointwise
// inequalities of k-Hessian theory.
//
// Every routine is templated on the scalar so the same code runs in double
// precision and in exact arithmetic (mpq_class / mpz_class, see exact.hpp).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace khess {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Eigenvalues of omega_phi relative to omega at one point.
class EigenSpectrum {
 public:
  EigenSpectrum() = default;
  explicit EigenSpectrum(std::vector<double> values);
  EigenSpectrum(std::initializer_list<double> values)
      : EigenSpectrum(std::vector<double>(values)) {}

  [[nodiscard]] int size() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] std::span<const double> view() const { return values_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<double> values_;
};

/// Largest k with lambda in Gamma_k; 0 when sigma_1 <= 0.
struct ConeClass {
  int k_max = 0;
  [[nodiscard]] bool contains(int k) const { return k <= k_max; }
};

double binomial(int n, int k);

template <class T>
double as_double(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return static_cast<double>(x);
  } else {
    return x.get_d();
  }
}

// ---------------------------------------------------------------------------
// Raw recurrences. No validation: sigma_m of a vector of length L is 0 for
// m < 0 or m > L, and sigma_0 = 1 (also for the empty vector).

/// sigma_0..sigma_kmax of `lambda`, skipping the entries at `skip_a`, `skip_b`
/// (pass -1 for none). One-row DP, entries folded in one at a time.
template <class T>
std::vector<T> sigma_table(std::span<const T> lambda, int kmax, int skip_a = -1,
                           int skip_b = -1) {
  std::vector<T> e(static_cast<std::size_t>(std::max(kmax, 0) + 1), T(0));
  if (kmax < 0) return {};
  e[0] = T(1);
  int used = 0;
  for (int i = 0; i < static_cast<int>(lambda.size()); ++i) {
    if (i == skip_a || i == skip_b) continue;
    ++used;
    const T& x = lambda[static_cast<std::size_t>(i)];
    for (int j = std::min(kmax, used); j >= 1; --j) {
      e[static_cast<std::size_t>(j)] += x * e[static_cast<std::size_t>(j - 1)];
    }
  }
  return e;
}

template <class T>
T sigma_raw(int k, std::span<const T> lambda, int skip_a = -1, int skip_b = -1) {
  if (k < 0) return T(0);
  return sigma_table(lambda, k, skip_a, skip_b)[static_cast<std::size_t>(k)];
}

// ---------------------------------------------------------------------------
// Validated operations.

/// sigma_k(lambda). Requires 0 <= k <= n; sigma_{-1} is 0 by convention.
template <class T>
T sigma(int k, std::span<const T> lambda) {
  const int n = static_cast<int>(lambda.size());
  if (k < -1 || k > n) {
    throw DomainError("sigma: degree " + std::to_string(k) + " outside 0.." +
                      std::to_string(n));
  }
  return sigma_raw(k, lambda);
}

/// sigma_k with the entries listed in `drop` removed (|drop| <= 2).
template <class T>
T sigma_minus(int k, std::span<const int> drop, std::span<const T> lambda) {
  const int n = static_cast<int>(lambda.size());
  if (drop.size() > 2) throw DomainError("sigma_minus: at most two dropped indices");
  for (int idx : drop) {
    if (idx < 0 || idx >= n) throw DomainError("sigma_minus: index out of range");
  }
  if (drop.size() == 2 && drop[0] == drop[1]) {
    throw DomainError("sigma_minus: repeated index");
  }
  if (k + static_cast<int>(drop.size()) > n) {
    throw DomainError("sigma_minus: degree too large for the reduced vector");
  }
  const int a = drop.size() > 0 ? drop[0] : -1;
  const int b = drop.size() > 1 ? drop[1] : -1;
  return sigma_raw(k, lambda, a, b);
}

template <class T>
T sigma_minus(int k, std::initializer_list<int> drop, std::span<const T> lambda) {
  return sigma_minus(k, std::span<const int>(drop.begin(), drop.size()), lambda);
}

/// Cone class with strictness margin: sigma_j > eps * max(1, |lambda|_inf)^j.
template <class T>
ConeClass cone_class(std::span<const T> lambda, double eps = 0.0) {
  const int n = static_cast<int>(lambda.size());
  const auto e = sigma_table(lambda, n);
  double scale = 1.0;
  for (const T& x : lambda) scale = std::max(scale, std::abs(as_double(x)));
  ConeClass c;
  double thresh = 1.0;
  for (int j = 1; j <= n; ++j) {
    thresh *= scale;
    const T& s = e[static_cast<std::size_t>(j)];
    const bool positive = eps > 0.0 ? as_double(s) > eps * thresh : s > T(0);
    if (!positive) break;
    c.k_max = j;
  }
  return c;
}

template <class T>
bool in_cone(int k, std::span<const T> lambda, double eps = 0.0) {
  return cone_class(lambda, eps).k_max >= k;
}

/// Gradient of sigma_k: d sigma_k / d lambda_i = sigma_{k-1,i}.
template <class T>
std::vector<T> sigma_gradient(int k, std::span<const T> lambda) {
  const int n = static_cast<int>(lambda.size());
  std::vector<T> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = sigma_raw(k - 1, lambda, i);
  return g;
}

/// sum_i mu_i d sigma_k(lambda)/d lambda_i, both arguments in Gamma_k.
template <class T>
T garding_pairing(int k, std::span<const T> mu, std::span<const T> lambda) {
  if (mu.size() != lambda.size()) throw DomainError("garding_pairing: size mismatch");
  if (k < 1 || k > static_cast<int>(lambda.size())) {
    throw DomainError("garding_pairing: k out of range");
  }
  if (!in_cone(k, mu) || !in_cone(k, lambda)) {
    throw DomainError("garding_pairing: argument outside Gamma_k");
  }
  T acc(0);
  const auto g = sigma_gradient(k, lambda);
  for (std::size_t i = 0; i < mu.size(); ++i) acc += mu[i] * g[i];
  return acc;
}

/// Constant used on the right-hand side of Garding's inequality. It is the
/// sharp one: equality holds at mu proportional to lambda.
inline double garding_constant(int /*n*/, int k) { return static_cast<double>(k); }

/// pairing / (sigma_k(mu)^{1/k} sigma_k(lambda)^{(k-1)/k}); >= garding_constant.
double garding_ratio(int k, std::span<const double> mu, std::span<const double> lambda);

/// sigma_{k-2,ij} sigma_k - sigma_{k-1,i} sigma_{k-1,j}. Division-free, so it
/// is exact over the integers as well.
template <class T>
T lemma22_numerator(int k, int i, int j, std::span<const T> lambda) {
  return sigma_raw(k - 2, lambda, i, j) * sigma_raw(k, lambda) -
         sigma_raw(k - 1, lambda, i) * sigma_raw(k - 1, lambda, j);
}

/// sigma_{k-2,ij} - sigma_{k-1,i} sigma_{k-1,j} / sigma_k; non-positive on Gamma_k.
template <class T>
T lemma22_coefficient(int k, int i, int j, std::span<const T> lambda) {
  const int n = static_cast<int>(lambda.size());
  if (i == j) throw DomainError("lemma22_coefficient: requires i != j");
  if (i < 0 || j < 0 || i >= n || j >= n || k < 1 || k > n) {
    throw DomainError("lemma22_coefficient: index out of range");
  }
  const T sk = sigma_raw(k, lambda);
  if (!(sk > T(0))) throw DomainError("lemma22_coefficient: sigma_k <= 0");
  return sigma_raw(k - 2, lambda, i, j) -
         sigma_raw(k - 1, lambda, i) * sigma_raw(k - 1, lambda, j) / sk;
}

/// Newton's inequality on lambda with entries i, j removed:
/// sigma_{k-2} sigma_k <= sigma_{k-1}^2. Holds for every real vector.
template <class T>
bool newton_check(int k, int i, int j, std::span<const T> lambda) {
  if (i == j) throw DomainError("newton_check: requires i != j");
  const T lhs = sigma_raw(k - 2, lambda, i, j) * sigma_raw(k, lambda, i, j);
  const T s1 = sigma_raw(k - 1, lambda, i, j);
  const T rhs = s1 * s1;
  if constexpr (std::is_floating_point_v<T>) {
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    return lhs <= rhs + 1e-12 * scale;
  } else {
    return lhs <= rhs;
  }
}

/// Gap of the normalized Newton inequality E_{k-1}^2 - E_{k-2} E_k on the
/// reduced vector, E_m = sigma_m / C(m_len, m). Zero when the remaining
/// entries are all equal.
double newton_normalized_gap(int k, int i, int j, std::span<const double> lambda);

/// det(G) * sigma_k^{n/k} at a point with eigenvalues lambda in Gamma_k, where
/// det G = prod_i sigma_{k-1,i} / sigma_k^n.
double detG_lower_bound_ratio(int k, std::span<const double> lambda);

/// (k/n)^n C(n,k)^{n/k}: the lower bound for detG_lower_bound_ratio implied by
/// Garding with the sharp constant. Attained at lambda = (1,...,1).
double detG_constant(int n, int k);

}  // namespace khess
