#include "khess/exact.hpp"

#include <climits>
#include <cmath>
#include <stdexcept>

namespace khess::exact {

mpq_class to_rational(double x) {
  if (!std::isfinite(x)) throw std::domain_error("to_rational: non-finite value");
  mpq_class q;
  mpq_set_d(q.get_mpq_t(), x);
  return q;
}

std::vector<mpq_class> to_rational(std::span<const double> xs) {
  std::vector<mpq_class> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(to_rational(x));
  return out;
}

std::vector<mpz_class> to_scaled_integers(std::span<const double> xs) {
  // x = m * 2^(e - 53) with |m| < 2^53 an integer.
  int min_exp = INT_MAX;
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::domain_error("to_scaled_integers: non-finite value");
    if (x == 0.0) continue;
    int e = 0;
    std::frexp(x, &e);
    min_exp = std::min(min_exp, e - 53);
  }
  std::vector<mpz_class> out(xs.size());
  if (min_exp == INT_MAX) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] == 0.0) continue;
    int e = 0;
    const double frac = std::frexp(xs[i], &e);
    const auto mant = static_cast<long long>(std::ldexp(frac, 53));
    mpz_class m(static_cast<long>(mant));
    const int shift = (e - 53) - min_exp;
    mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    out[i] = m;
  }
  return out;
}

int sign(const mpq_class& x) { return sgn(x); }
int sign(const mpz_class& x) { return sgn(x); }

}  // namespace khess::exact
