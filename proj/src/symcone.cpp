#include "khess/symcone.hpp"

#include <cmath>
#include <limits>

namespace khess {

EigenSpectrum::EigenSpectrum(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("EigenSpectrum: empty");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("EigenSpectrum: non-finite entry");
  }
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double garding_ratio(int k, std::span<const double> mu, std::span<const double> lambda) {
  const double pairing = garding_pairing(k, mu, lambda);
  const double sm = sigma_raw(k, mu);
  const double sl = sigma_raw(k, lambda);
  return pairing / (std::pow(sm, 1.0 / k) * std::pow(sl, (k - 1.0) / k));
}

double newton_normalized_gap(int k, int i, int j, std::span<const double> lambda) {
  if (i == j) throw DomainError("newton_normalized_gap: requires i != j");
  const int m = static_cast<int>(lambda.size()) - 2;
  auto normalized = [&](int deg) {
    const double c = binomial(m, deg);
    if (c == 0.0) return 0.0;
    return sigma_raw(deg, lambda, i, j) / c;
  };
  const double e1 = normalized(k - 1);
  return e1 * e1 - normalized(k - 2) * normalized(k);
}

double detG_lower_bound_ratio(int k, std::span<const double> lambda) {
  const int n = static_cast<int>(lambda.size());
  if (k < 1 || k > n) throw DomainError("detG_lower_bound_ratio: k out of range");
  if (!in_cone(k, lambda)) throw DomainError("detG_lower_bound_ratio: lambda outside Gamma_k");
  const double sk = sigma_raw(k, lambda);
  double log_prod = 0.0;
  for (int i = 0; i < n; ++i) log_prod += std::log(sigma_raw(k - 1, lambda, i));
  const double log_ratio = log_prod - n * std::log(sk) + (static_cast<double>(n) / k) * std::log(sk);
  return std::exp(log_ratio);
}

double detG_constant(int n, int k) {
  return std::pow(static_cast<double>(k) / n, n) *
         std::pow(binomial(n, k), static_cast<double>(n) / k);
}

}  // namespace khess
